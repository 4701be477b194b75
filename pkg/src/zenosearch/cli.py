"""Command-line front end.

Subcommands:

* ``run <config>``: validate a YAML config, execute the named experiment,
  and write one CSV per result table (plus a PNG per table unless figures
  are turned off).
* ``validate <config>``: report every config problem with its line
  number, or echo the parsed fields back on success.  Nothing is
  executed either way.
* ``list-experiments``: print the registered experiment ids.

Exit codes: 0 on success, 1 for any configuration problem, 2 when a run
fails after a valid configuration (integrator breakdown, unwritable
output mid-run).

Output is deterministic: floats are printed at full precision with no
timestamps or environment echoes, and the worker pool assembles rows in
grid order, so re-running an identical config reproduces the CSVs byte
for byte.
"""

import argparse
import csv
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field, fields

import yaml

from .blockade import TruncationLeakError
from .continuum import IntegrationError, IntegratorConfig
from .experiments import CUSTOM_PROTOCOLS, REGISTRY, _CUSTOM_CHANNELS, run_experiment

TWO_PI = 2.0 * math.pi
MAX_SEED = 2**64 - 1

_TOP_KEYS = {"experiment", "params", "out_dir", "threads", "seed", "figures", "integrator"}
_INTEGRATOR_KEYS = {f.name for f in fields(IntegratorConfig)}

# per-field grid element rules: (minimum, inclusive, integer)
_GRID_RULES = {
    "m_stage": (1, True, True),
    "m_ops": (1, True, True),
    "t_scale": (0.0, False, False),
    "angles": (0.0, True, False),
    "gap_min": (0.0, False, False),
    "conversion_rate": (0.0, False, False),
    "loss_rate": (0.0, True, False),
}
_SCALAR_RULES = {
    "n": (1, True, True),
    "s_points": (2, True, True),
    "marked_sign": None,
    "angle": (0.0, True, False),
    "base_rate": (0.0, False, False),
    "trajectories": (0, True, True),
    "protocol": None,
}


@dataclass
class RunSettings:
    """A validated configuration, ready to execute."""

    experiment: str
    params: dict = field(default_factory=dict)
    out_dir: str = "results"
    threads: int = 1
    seed: int | None = None
    figures: bool = True
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)


def _line_map(node, path=(), out=None):
    """Map config paths (tuples of keys/indices) to 1-based source lines."""
    if out is None:
        out = {}
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            _line_map(value_node, path + (str(key_node.value),), out)
    elif isinstance(node, yaml.SequenceNode):
        for index, child in enumerate(node.value):
            _line_map(child, path + (index,), out)
    return out


class _Validator:
    def __init__(self, config: dict, lines: dict):
        self.config = config
        self.lines = lines
        self.errors: list[str] = []

    def fail(self, path: tuple, message: str) -> None:
        line = self.lines.get(path)
        while line is None and path:
            path = path[:-1]
            line = self.lines.get(path)
        prefix = f"line {line}: " if line is not None else ""
        self.errors.append(prefix + message)

    def check_number(self, path, name, value, rule) -> bool:
        minimum, inclusive, integral = rule
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"{name} must be a number, got {value!r}")
            return False
        if integral and not isinstance(value, int):
            self.fail(path, f"{name} must be an integer, got {value!r}")
            return False
        ok = value >= minimum if inclusive else value > minimum
        if not ok:
            bound = ">=" if inclusive else ">"
            self.fail(path, f"{name} must be {bound} {minimum}, got {value!r}")
            return False
        return True

    def check_angle(self, path, name, value) -> None:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"{name} must be a number, got {value!r}")
            return
        if not 0.0 <= value < TWO_PI:
            self.fail(
                path,
                f"{name} {value!r} out of range (need 0 <= {name} < 2*pi"
                f" = {TWO_PI!r})",
            )

    def validate(self) -> RunSettings | None:
        config = self.config
        if not isinstance(config, dict):
            self.fail((), "config must be a mapping of fields")
            return None
        for key in config:
            if key not in _TOP_KEYS:
                self.fail((key,), f"unknown field {key!r}")

        experiment = config.get("experiment")
        if experiment is None:
            self.fail((), "missing required field 'experiment'")
            return None
        if experiment not in REGISTRY:
            known = ", ".join(sorted(REGISTRY))
            self.fail(("experiment",), f"unknown experiment id {experiment!r} (known: {known})")
            return None

        settings = RunSettings(experiment=experiment)
        self._validate_scalars(settings)
        self._validate_integrator(settings)
        self._validate_params(settings)
        self._validate_seed_usage(settings)
        return settings if not self.errors else None

    def _validate_scalars(self, settings: RunSettings) -> None:
        config = self.config
        if "out_dir" in config:
            out_dir = config["out_dir"]
            if not isinstance(out_dir, str) or not out_dir:
                self.fail(("out_dir",), f"out_dir must be a non-empty string, got {out_dir!r}")
            else:
                settings.out_dir = out_dir
        if not _writable(settings.out_dir):
            self.fail(("out_dir",), f"output path {settings.out_dir!r} is not writable")

        if "threads" in config:
            if self.check_number(("threads",), "threads", config["threads"], (1, True, True)):
                settings.threads = config["threads"]
        if "figures" in config:
            if not isinstance(config["figures"], bool):
                self.fail(("figures",), f"figures must be true or false, got {config['figures']!r}")
            else:
                settings.figures = config["figures"]
        if "seed" in config:
            seed = config["seed"]
            if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= MAX_SEED:
                self.fail(("seed",), f"seed must be an integer in [0, 2**64), got {seed!r}")
            else:
                settings.seed = seed

    def _validate_integrator(self, settings: RunSettings) -> None:
        section = self.config.get("integrator")
        if section is None:
            return
        if not isinstance(section, dict):
            self.fail(("integrator",), "integrator must be a mapping")
            return
        clean = True
        for key in section:
            if key not in _INTEGRATOR_KEYS:
                known = ", ".join(sorted(_INTEGRATOR_KEYS))
                self.fail(("integrator", key), f"unknown integrator field {key!r} (known: {known})")
                clean = False
        if clean:
            try:
                settings.integrator = IntegratorConfig(**section)
            except (TypeError, ValueError) as exc:
                self.fail(("integrator",), f"bad integrator settings: {exc}")

    def _validate_params(self, settings: RunSettings) -> None:
        section = self.config.get("params")
        defaults = REGISTRY[settings.experiment].defaults
        if section is None:
            settings.params = {}
            return
        if not isinstance(section, dict):
            self.fail(("params",), "params must be a mapping")
            return
        for name, value in section.items():
            path = ("params", name)
            if name not in defaults:
                known = ", ".join(sorted(defaults)) or "none"
                self.fail(
                    path,
                    f"unknown parameter {name!r} for experiment"
                    f" {settings.experiment!r} (known: {known})",
                )
                continue
            if name in _GRID_RULES:
                self._validate_grid(path, name, value)
            elif name == "angle":
                self.check_angle(path, "angle", value)
            elif name == "protocol":
                if value not in CUSTOM_PROTOCOLS:
                    known = ", ".join(CUSTOM_PROTOCOLS)
                    self.fail(path, f"unknown protocol {value!r} (known: {known})")
            elif name == "marked_sign":
                if value not in (-1, 1):
                    self.fail(path, f"marked_sign must be -1 or 1, got {value!r}")
            else:
                self.check_number(path, name, value, _SCALAR_RULES[name])
        if not self.errors:
            settings.params = dict(section)

    def _validate_grid(self, path, name, value) -> None:
        if not isinstance(value, list):
            self.fail(path, f"{name} must be a list, got {value!r}")
            return
        if not value:
            self.fail(path, f"empty grid for field {name!r}")
            return
        rule = _GRID_RULES[name]
        for index, entry in enumerate(value):
            if name == "angles":
                self.check_angle(path + (index,), "angle", entry)
            else:
                self.check_number(path + (index,), f"{name} entry", entry, rule)
        if name == "gap_min":
            for index, entry in enumerate(value):
                if isinstance(entry, (int, float)) and not isinstance(entry, bool) and entry > 1.0:
                    self.fail(path + (index,), f"gap_min entry must be <= 1, got {entry!r}")
            if len(set(value)) < 2:
                self.fail(path, "gap_min needs at least two distinct values")

    def _validate_seed_usage(self, settings: RunSettings) -> None:
        if settings.seed is not None and not _uses_trajectories(settings):
            self.fail(
                ("seed",),
                "seed is only meaningful for the custom experiment with trajectories > 0",
            )


def _writable(out_dir: str) -> bool:
    """Check the nearest existing ancestor without leaving anything behind."""
    ancestor = os.path.abspath(out_dir)
    while not os.path.exists(ancestor):
        parent = os.path.dirname(ancestor)
        if parent == ancestor:
            break
        ancestor = parent
    if os.path.isfile(ancestor) or not os.access(ancestor, os.W_OK):
        return False
    try:
        # os.access lies for root, so probe with an unnamed temporary file
        with tempfile.TemporaryFile(dir=ancestor):
            pass
    except OSError:
        return False
    return True


def _uses_trajectories(settings: RunSettings) -> bool:
    if settings.experiment != "custom":
        return False
    merged = {**REGISTRY["custom"].defaults, **settings.params}
    trajectories = merged.get("trajectories")
    return isinstance(trajectories, int) and trajectories > 0


def validate_config(path: str) -> tuple[RunSettings | None, dict | None, list[str]]:
    """Parse and check a config file.

    Returns (settings, raw mapping, errors); settings is None whenever
    the error list is non-empty.
    """
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        return None, None, [f"cannot read config: {exc}"]
    try:
        node = yaml.compose(text)
        config = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark is not None else ""
        return None, None, [f"{where}config is not valid YAML: {exc}"]
    if node is None or config is None:
        return None, None, ["config file is empty"]
    lines = _line_map(node)
    validator = _Validator(config, lines)
    settings = validator.validate()
    return settings, config, validator.errors


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    return "%.17g" % float(value)


def write_tables(tables: dict, out_dir: str) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name in sorted(tables):
        header, rows = tables[name]
        path = os.path.join(out_dir, f"{name}.csv")
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_format_cell(cell) for cell in row])
        written.append(path)
    return written


def _cmd_validate(path: str) -> int:
    settings, config, errors = validate_config(path)
    if errors:
        for message in errors:
            print(message, file=sys.stderr)
        return 1
    echo = yaml.safe_dump(config, default_flow_style=None, sort_keys=False)
    sys.stdout.write(echo)
    return 0


def _cmd_run(args) -> int:
    settings, _, errors = validate_config(args.config)
    if settings is not None:
        if args.out is not None:
            settings.out_dir = args.out
        if args.threads is not None:
            if args.threads < 1:
                errors.append("--threads must be >= 1")
            else:
                settings.threads = args.threads
        if args.seed is not None:
            if not 0 <= args.seed <= MAX_SEED:
                errors.append(f"--seed must be in [0, 2**64), got {args.seed}")
            elif not _uses_trajectories(settings):
                errors.append(
                    "--seed is only meaningful for the custom experiment with trajectories > 0"
                )
            else:
                settings.seed = args.seed
        if args.no_figures:
            settings.figures = False
        merged = {**REGISTRY["custom"].defaults, **settings.params}
        if (
            settings.experiment == "custom"
            and merged["trajectories"] > 0
            and settings.seed is None
        ):
            errors.append("trajectories > 0 needs a seed (config field or --seed)")
    if errors or settings is None:
        for message in errors:
            print(message, file=sys.stderr)
        return 1

    try:
        tables = run_experiment(
            settings.experiment,
            settings.params,
            settings.integrator,
            threads=settings.threads,
            seed=settings.seed,
        )
        written = write_tables(tables, settings.out_dir)
        if settings.figures:
            from .plotting import render_figures

            written.extend(render_figures(settings.experiment, tables, settings.out_dir))
    except (IntegrationError, TruncationLeakError, ValueError, OSError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


def _cmd_list() -> int:
    width = max(len(name) for name in REGISTRY)
    for name, definition in REGISTRY.items():
        print(f"{name:<{width}}  {definition.description}")
    return 0


class _Parser(argparse.ArgumentParser):
    # bad invocations are configuration errors, not runtime failures
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="zenosearch", description="search-protocol experiment runner")
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="execute an experiment config")
    run_parser.add_argument("config", help="YAML config file")
    run_parser.add_argument("--out", help="output directory (overrides the config)")
    run_parser.add_argument("--threads", type=int, help="worker count (overrides the config)")
    run_parser.add_argument(
        "--seed", type=int, help="trajectory-sampling seed (trajectory mode only)"
    )
    run_parser.add_argument(
        "--no-figures", action="store_true", help="write CSVs only, skip the PNGs"
    )

    validate_parser = commands.add_parser("validate", help="check a config without running it")
    validate_parser.add_argument("config", help="YAML config file")

    commands.add_parser("list-experiments", help="print the registered experiment ids")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "validate":
        return _cmd_validate(args.config)
    return _cmd_list()


if __name__ == "__main__":
    sys.exit(main())
