"""Named experiment definitions for the command-line runner.

Each experiment computes one study (a staged-walk sweep, a channel-count
sweep, a continuum-runtime sweep, a spectrum scan, an invariance audit,
or the blockade regime grid) and returns named tables: header row plus
value rows, written by the CLI as one CSV per table.  Grid points are
dispatched to a process pool when more than one worker is requested, and
results are always assembled in grid order, so the output bytes never
depend on the worker count.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .blockade import (
    BlockadeParams,
    classify_regime,
    regime_from_series,
    simulate_master_oracle,
    simulate_offdiag,
)
from .channels import ChannelSpec, Family, Manifestation
from .continuum import (
    ContinuumFamily,
    IntegrationError,
    IntegratorConfig,
    LindbladSpec,
    integrate_adiabatic,
    integrate_dephasing,
    integrate_destruction,
)
from .hypercube import spectrum
from .protocols import (
    MultistageConfig,
    ProtocolConfig,
    audit_scale_invariance,
    fit_leak_exponent,
    run_fixed_total_angle,
    run_multistage_walk,
    run_operation_sequence,
    run_trajectory,
    zeno_excitation_scaling,
)

Table = tuple[list[str], list[list]]

ADIABATIC_STAGE_COUNT = 10_000

BLOCKADE_GRID_CONVERSION = [0.3, 0.6, 1.0, 1.5, 2.2]
BLOCKADE_GRID_LOSS = [0.4, 1.5, 4.0, 8.0, 16.0]
BLOCKADE_EXAMPLES = [
    ("lossless_weak_hop", BlockadeParams(1, 1, 1.0, 0.0, 0.05)),
    ("strong_loss", BlockadeParams(1, 1, 1.0, 10.0, 0.05)),
    ("weak_loss", BlockadeParams(1, 1, 2.0, 1.0, 0.05)),
]


def _pmap(fn: Callable, items: list, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * threads))))


def _powers_of_two(limit: int) -> list[int]:
    values = []
    m = 1
    while m <= limit:
        values.append(m)
        m *= 2
    return values


# ---------------------------------------------------------------- staged walk


def _walk_point(args: tuple[int, float]) -> list:
    m_stage, t_scale = args
    trace = run_multistage_walk(m_stage, t_scale)
    return [m_stage, t_scale, trace.final_marked]


def run_fig2(params: dict, integrator: IntegratorConfig, threads: int) -> dict[str, Table]:
    stage_counts = params["m_stage"]
    t_scales = params["t_scale"]
    grid = [(int(m), float(t)) for t in t_scales for m in stage_counts]
    rows = _pmap(_walk_point, grid, threads)
    limit_rows = [
        _walk_point((ADIABATIC_STAGE_COUNT, float(t)))[1:] for t in t_scales
    ]
    return {
        "fig2": (["m_stage", "t_scale", "p_marked"], rows),
        "fig2_adiabatic": (["t_scale", "p_marked"], limit_rows),
    }


def _adiabatic_point(args: tuple[float, tuple]) -> list:
    t_scale, integrator_args = args
    try:
        trace = integrate_adiabatic(t_scale, IntegratorConfig(*integrator_args))
    except IntegrationError as exc:
        raise IntegrationError(f"grid point t_scale={t_scale!r}: {exc.message}", exc.tau)
    return [t_scale, trace.final_marked, trace.records[-1].purity]


def run_fig3(params: dict, integrator: IntegratorConfig, threads: int) -> dict[str, Table]:
    grid = [(float(t), _integrator_tuple(integrator)) for t in params["t_scale"]]
    rows = _pmap(_adiabatic_point, grid, threads)
    return {"fig3": (["t_scale", "p_marked", "purity"], rows)}


# ------------------------------------------------- discrete channel sweeps


def _fig4_point(m_ops: int) -> list:
    projective = run_operation_sequence(
        ProtocolConfig(ChannelSpec(Family.DECOHERENCE, Manifestation.FULL_DISCRETE), m_ops)
    )
    destructive = run_operation_sequence(
        ProtocolConfig(ChannelSpec(Family.DESTRUCTION, Manifestation.FULL_DISCRETE), m_ops)
    )
    dephase_budget = run_fixed_total_angle(Family.DECOHERENCE, m_ops)
    destroy_budget = run_fixed_total_angle(Family.DESTRUCTION, m_ops)
    return [
        m_ops,
        projective.final_marked,
        destructive.final_marked,
        dephase_budget.final_marked,
        destroy_budget.final_marked,
        destructive.final_destroyed,
        destroy_budget.final_destroyed,
    ]


def run_fig4(params: dict, integrator: IntegratorConfig, threads: int) -> dict[str, Table]:
    rows = _pmap(_fig4_point, [int(m) for m in params["m_ops"]], threads)
    header = [
        "m_ops",
        "p_projective",
        "p_destructive",
        "p_dephasing_budget",
        "p_destruction_budget",
        "destroyed_destructive",
        "destroyed_budget",
    ]
    return {"fig4": (header, rows)}


def _angle_sweep_point(args: tuple[str, int, float]) -> list:
    family_value, m_ops, angle = args
    family = Family(family_value)
    if angle >= 0.5 * np.pi and family is not Family.PHASE_ROTATION:
        # quarter-turn partial channels coincide with the full operation
        spec = ChannelSpec(family, Manifestation.FULL_DISCRETE)
    else:
        spec = ChannelSpec(family, Manifestation.PARTIAL_DISCRETE, angle)
    trace = run_operation_sequence(ProtocolConfig(spec, m_ops))
    return [m_ops, angle, trace.final_marked, trace.final_destroyed]


def _run_angle_sweep(
    family: Family, params: dict, threads: int, keep_destroyed: bool
) -> Table:
    grid = [
        (family.value, int(m), float(a))
        for a in params["angles"]
        for m in params["m_ops"]
    ]
    rows = _pmap(_angle_sweep_point, grid, threads)
    header = ["m_ops", "angle", "p_marked", "p_destroyed"]
    if not keep_destroyed:
        rows = [row[:3] for row in rows]
        header = header[:3]
    return header, rows


def run_fig5(params: dict, integrator: IntegratorConfig, threads: int) -> dict[str, Table]:
    return {
        "fig5": _run_angle_sweep(Family.PHASE_ROTATION, params, threads, keep_destroyed=False)
    }


def run_fig8(params: dict, integrator: IntegratorConfig, threads: int) -> dict[str, Table]:
    return {
        "fig8": _run_angle_sweep(Family.DESTRUCTION, params, threads, keep_destroyed=True)
    }


def run_fig9(params: dict, integrator: IntegratorConfig, threads: int) -> dict[str, Table]:
    return {
        "fig9": _run_angle_sweep(Family.DECOHERENCE, params, threads, keep_destroyed=False)
    }


# ---------------------------------------------------------- continuum sweeps


def _integrator_tuple(integrator: IntegratorConfig) -> tuple:
    return (
        integrator.method,
        integrator.rtol,
        integrator.atol,
        integrator.step_count,
        integrator.max_steps,
        integrator.sample_points,
        integrator.boundary_clip,
        integrator.renorm_every,
    )


def _continuum_point(args: tuple[str, float, float, tuple]) -> list:
    family_value, t_scale, base_rate, integrator_args = args
    integrator = IntegratorConfig(*integrator_args)
    spec = LindbladSpec(ContinuumFamily(family_value), t_scale, base_rate=base_rate)
    try:
        if spec.family is ContinuumFamily.DEPHASING:
            trace = integrate_dephasing(spec, integrator)
        else:
            trace = integrate_destruction(spec, integrator)
    except IntegrationError as exc:
        raise IntegrationError(
            f"grid point t_scale={t_scale!r}, base_rate={base_rate!r}: {exc.message}",
            exc.tau,
        )
    last = trace.records[-1]
    return [t_scale, base_rate, last.marked, last.destroyed, last.purity]


def _run_continuum(
    family: ContinuumFamily, params: dict, integrator: IntegratorConfig, threads: int
) -> Table:
    base_rate = float(params["base_rate"])
    grid = [
        (family.value, float(t), base_rate, _integrator_tuple(integrator))
        for t in params["t_scale"]
    ]
    rows = _pmap(_continuum_point, grid, threads)
    header = ["t_scale", "base_rate", "p_marked", "p_destroyed", "purity"]
    if family is ContinuumFamily.DEPHASING:
        rows = [row[:3] + row[4:] for row in rows]
        header = header[:3] + header[4:]
    return header, rows


def run_fig6(params: dict, integrator: IntegratorConfig, threads: int) -> dict[str, Table]:
    return {"fig6": _run_continuum(ContinuumFamily.DEPHASING, params, integrator, threads)}


def run_fig7(params: dict, integrator: IntegratorConfig, threads: int) -> dict[str, Table]:
    return {"fig7": _run_continuum(ContinuumFamily.DESTRUCTION, params, integrator, threads)}


# ------------------------------------------------------------- spectrum scan


def _spectrum_point(args: tuple[int, float, int]) -> list:
    n, s, marked_sign = args
    piece = spectrum(n, s, marked_sign)
    return (
        [s]
        + list(piece.eigenvalues)
        + list(piece.marked_overlaps)
        + list(piece.unmarked_overlaps)
    )


def run_fig10(params: dict, integrator: IntegratorConfig, threads: int) -> dict[str, Table]:
    n = int(params["n"])
    marked_sign = int(params["marked_sign"])
    s_values = np.linspace(0.0, 1.0, int(params["s_points"]))
    rows = _pmap(_spectrum_point, [(n, float(s), marked_sign) for s in s_values], threads)
    header = (
        ["s"]
        + [f"eigenvalue_{k:02d}" for k in range(n + 1)]
        + [f"marked_overlap_{k:02d}" for k in range(n + 1)]
        + [f"unmarked_overlap_{k:02d}" for k in range(n + 1)]
    )
    return {"fig10": (header, rows)}


# --------------------------------------------------------- audits and scans


INVARIANCE_PROTOCOLS: dict[str, ProtocolConfig | MultistageConfig] = {
    "staged_walk": MultistageConfig(64, np.pi),
    "phase_rotation": ProtocolConfig(
        ChannelSpec(Family.PHASE_ROTATION, Manifestation.FULL_DISCRETE), 32
    ),
    "decoherence": ProtocolConfig(
        ChannelSpec(Family.DECOHERENCE, Manifestation.PARTIAL_DISCRETE, 0.7), 32
    ),
    "destruction": ProtocolConfig(
        ChannelSpec(Family.DESTRUCTION, Manifestation.PARTIAL_DISCRETE, 0.5), 32
    ),
}


def _invariance_point(args: tuple[str, tuple[float, ...]]) -> list:
    name, gap_mins = args
    deviation = audit_scale_invariance(INVARIANCE_PROTOCOLS[name], list(gap_mins))
    return [name, deviation]


def run_invariance(params: dict, integrator: IntegratorConfig, threads: int) -> dict[str, Table]:
    gap_mins = tuple(float(g) for g in params["gap_min"])
    grid = [(name, gap_mins) for name in INVARIANCE_PROTOCOLS]
    rows = _pmap(_invariance_point, grid, threads)
    return {"invariance": (["protocol", "max_deviation"], rows)}


def _zeno_scaling_family(args: tuple[str, tuple[int, ...]]) -> list[list]:
    family_value, m_list = args
    table = zeno_excitation_scaling(Family(family_value), list(m_list))
    return [[m, family_value, leak] for m, leak in table]


def run_zeno_scaling(params: dict, integrator: IntegratorConfig, threads: int) -> dict[str, Table]:
    m_list = tuple(int(m) for m in params["m_ops"])
    families = [Family.DECOHERENCE, Family.DESTRUCTION]
    chunks = _pmap(
        _zeno_scaling_family, [(family.value, m_list) for family in families], threads
    )
    rows = [row for chunk in chunks for row in chunk]
    fit_rows = []
    for family, chunk in zip(families, chunks):
        table = [(int(row[0]), float(row[2])) for row in chunk]
        fit_rows.append([family.value, fit_leak_exponent(table)])
    return {
        "zeno_scaling": (["m_ops", "family", "leak"], rows),
        "zeno_scaling_fit": (["family", "exponent"], fit_rows),
    }


# ------------------------------------------------------------ blockade grid


def _blockade_cell(args: tuple[float, float]) -> list:
    conversion, loss = args
    excluded = abs(4.0 * conversion - loss) <= 0.2 * loss
    params = BlockadeParams(1, 1, conversion, loss, 0.0)
    label = classify_regime(params)
    period = 2.0 * np.pi / params.oscillation_frequency()
    horizon = float(np.clip(max(3.0 * period, 24.0 / max(loss, 1e-9)), 10.0, 200.0))
    reduced = simulate_offdiag(params, 0.5, 0.0, horizon, sample_count=4001)
    reduced_label = regime_from_series(reduced.times, reduced.values, reference_scale=0.5)
    oracle = simulate_master_oracle(
        params, horizon, sample_count=1201, seed_transfer_coherence=True
    )
    oracle_label = regime_from_series(oracle.times, oracle.coherence_im, reference_scale=0.5)
    agree = "" if excluded else int(label is reduced_label is oracle_label)
    return [
        conversion,
        loss,
        int(excluded),
        label.value,
        reduced_label.value,
        oracle_label.value,
        agree,
    ]


def _blockade_example(args: tuple[str, int, int, float, float, float]) -> list[list]:
    name, control, fiber, conversion, loss, hop = args
    params = BlockadeParams(control, fiber, conversion, loss, hop)
    label = classify_regime(params).value
    series = simulate_master_oracle(params, 30.0, sample_count=1501)
    return [[name, t, y, label] for t, y in zip(series.times, series.coherence_im)]


def run_blockade_grid(params: dict, integrator: IntegratorConfig, threads: int) -> dict[str, Table]:
    cells = [
        (float(c), float(l)) for c in params["conversion_rate"] for l in params["loss_rate"]
    ]
    grid_rows = _pmap(_blockade_cell, cells, threads)
    example_args = [
        (name, p.control_photons, p.fiber_photons, p.conversion_rate, p.loss_rate, p.hop_rate)
        for name, p in BLOCKADE_EXAMPLES
    ]
    series_chunks = _pmap(_blockade_example, example_args, threads)
    series_rows = [row for chunk in series_chunks for row in chunk]
    grid_header = [
        "conversion_rate",
        "loss_rate",
        "excluded",
        "predicted_regime",
        "reduced_regime",
        "oracle_regime",
        "agree",
    ]
    return {
        "blockade_grid": (grid_header, grid_rows),
        "blockade_series": (["example", "t", "y", "regime"], series_rows),
    }


# ------------------------------------------------------------------- custom


CUSTOM_PROTOCOLS = (
    "multistage",
    "adiabatic",
    "phase_rotation",
    "projective",
    "partial_dephasing",
    "destructive",
    "partial_destruction",
    "continuum_dephasing",
    "continuum_destruction",
)

_CUSTOM_CHANNELS = {
    "phase_rotation": (Family.PHASE_ROTATION, Manifestation.PARTIAL_DISCRETE, True),
    "projective": (Family.DECOHERENCE, Manifestation.FULL_DISCRETE, False),
    "partial_dephasing": (Family.DECOHERENCE, Manifestation.PARTIAL_DISCRETE, True),
    "destructive": (Family.DESTRUCTION, Manifestation.FULL_DISCRETE, False),
    "partial_destruction": (Family.DESTRUCTION, Manifestation.PARTIAL_DISCRETE, True),
}


def _custom_point(args: tuple) -> list:
    protocol, m_ops, t_scale, angle, base_rate, trajectories, seed, integrator_args = args
    if protocol == "multistage":
        trace = run_multistage_walk(m_ops, t_scale)
    elif protocol == "adiabatic":
        trace = integrate_adiabatic(t_scale, IntegratorConfig(*integrator_args))
    elif protocol in ("continuum_dephasing", "continuum_destruction"):
        family = (
            ContinuumFamily.DEPHASING
            if protocol == "continuum_dephasing"
            else ContinuumFamily.DESTRUCTION
        )
        spec = LindbladSpec(family, t_scale, base_rate=base_rate)
        integrate = (
            integrate_dephasing
            if family is ContinuumFamily.DEPHASING
            else integrate_destruction
        )
        trace = integrate(spec, IntegratorConfig(*integrator_args))
    else:
        family, manifestation, takes_angle = _CUSTOM_CHANNELS[protocol]
        spec = ChannelSpec(family, manifestation, angle if takes_angle else 0.0)
        trace = run_operation_sequence(ProtocolConfig(spec, m_ops))
    last = trace.records[-1]
    row = [protocol, m_ops, t_scale, angle, last.marked, last.destroyed, last.purity]
    if trajectories > 0:
        rng = np.random.default_rng(seed)
        family, manifestation, takes_angle = _CUSTOM_CHANNELS[protocol]
        spec = ChannelSpec(family, manifestation, angle if takes_angle else 0.0)
        sampled = [
            run_trajectory(ProtocolConfig(spec, m_ops), rng).final_marked
            for _ in range(trajectories)
        ]
        row.append(float(np.mean(sampled)))
    return row


def run_custom(
    params: dict, integrator: IntegratorConfig, threads: int, seed: int | None = None
) -> dict[str, Table]:
    protocol = params["protocol"]
    trajectories = int(params["trajectories"])
    if trajectories > 0 and protocol not in _CUSTOM_CHANNELS:
        raise ValueError(
            f"trajectory sampling needs a discrete channel protocol, not {protocol}"
        )
    if trajectories > 0 and seed is None:
        raise ValueError("trajectory sampling needs a seed")
    grid = [
        (
            protocol,
            int(m),
            float(t),
            float(params["angle"]),
            float(params["base_rate"]),
            trajectories,
            seed,
            _integrator_tuple(integrator),
        )
        for m in params["m_ops"]
        for t in params["t_scale"]
    ]
    # trajectory sampling consumes the generator sequentially, so a pool
    # would change the draws; keep it on one worker
    rows = _pmap(_custom_point, grid, 1 if trajectories > 0 else threads)
    header = ["protocol", "m_ops", "t_scale", "angle", "p_marked", "p_destroyed", "purity"]
    if trajectories > 0:
        header.append("p_marked_sampled")
    return {"custom": (header, rows)}


# ----------------------------------------------------------------- registry


@dataclass(frozen=True)
class ExperimentDef:
    runner: Callable
    description: str
    defaults: dict
    uses_seed: bool = False


REGISTRY: dict[str, ExperimentDef] = {
    "fig2": ExperimentDef(
        run_fig2,
        "staged-walk success probability versus stage count, with the"
        " large-stage limit per scaled runtime",
        {
            "m_stage": list(range(1, 51)),
            "t_scale": [np.pi / 4.0, np.pi / 2.0, np.pi, 2.0 * np.pi],
        },
    ),
    "fig3": ExperimentDef(
        run_fig3,
        "adiabatic-limit success probability versus scaled runtime",
        {"t_scale": list(np.round(np.linspace(0.1, 4.0 * np.pi, 80), 12))},
    ),
    "fig4": ExperimentDef(
        run_fig4,
        "success versus operation count for projective, destructive, and"
        " fixed-angle-budget channel sequences",
        {"m_ops": _powers_of_two(4096)},
    ),
    "fig5": ExperimentDef(
        run_fig5,
        "success versus number of phase rotations for several angles",
        {
            "m_ops": _powers_of_two(1024),
            "angles": [np.pi / 8.0, np.pi / 4.0, np.pi / 2.0, 3.0 * np.pi / 4.0, np.pi],
        },
    ),
    "fig6": ExperimentDef(
        run_fig6,
        "continuous-dephasing success probability versus scaled runtime",
        {"t_scale": list(np.round(np.geomspace(0.5, 120.0, 36), 12)), "base_rate": 1.0},
    ),
    "fig7": ExperimentDef(
        run_fig7,
        "continuous-dissipation success probability versus scaled runtime",
        {"t_scale": list(np.round(np.geomspace(0.5, 120.0, 36), 12)), "base_rate": 1.0},
    ),
    "fig8": ExperimentDef(
        run_fig8,
        "success versus number of partial-dissipation operations for"
        " several per-operation angles",
        {
            "m_ops": _powers_of_two(4096),
            "angles": [0.1, 0.3, 0.6, 1.0, 1.4, np.pi / 2.0],
        },
    ),
    "fig9": ExperimentDef(
        run_fig9,
        "success versus number of partial-dephasing operations for"
        " several per-operation angles",
        {
            "m_ops": _powers_of_two(4096),
            "angles": [0.1, 0.3, 0.6, 1.0, 1.4, np.pi / 2.0],
        },
    ),
    "fig10": ExperimentDef(
        run_fig10,
        "hypercube-search spectrum and marked/unmarked overlaps across the sweep",
        {"n": 20, "s_points": 400, "marked_sign": -1},
    ),
    "invariance": ExperimentDef(
        run_invariance,
        "scale-invariance audit: raw-unit reruns against the scaled reference",
        {"gap_min": [1e-1, 1e-2, 1e-3]},
    ),
    "zeno-scaling": ExperimentDef(
        run_zeno_scaling,
        "leaked probability versus operation count with fitted decay exponents",
        {"m_ops": _powers_of_two(4096)[3:]},
    ),
    "blockade-grid": ExperimentDef(
        run_blockade_grid,
        "damping-regime agreement grid and example coherence time series",
        {
            "conversion_rate": BLOCKADE_GRID_CONVERSION,
            "loss_rate": BLOCKADE_GRID_LOSS,
        },
    ),
    "custom": ExperimentDef(
        run_custom,
        "user-specified protocol over an operation-count and runtime grid",
        {
            "protocol": "projective",
            "m_ops": [16],
            "t_scale": [np.pi],
            "angle": np.pi / 2.0,
            "base_rate": 1.0,
            "trajectories": 0,
        },
        uses_seed=True,
    ),
}


def run_experiment(
    experiment: str,
    params: dict,
    integrator: IntegratorConfig,
    threads: int = 1,
    seed: int | None = None,
) -> dict[str, Table]:
    """Execute a registered experiment and return its tables."""
    definition = REGISTRY[experiment]
    merged = {**definition.defaults, **params}
    if definition.uses_seed:
        return definition.runner(merged, integrator, threads, seed=seed)
    return definition.runner(merged, integrator, threads)
