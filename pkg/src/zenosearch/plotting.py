"""Figure rendering for the experiment runner.

One PNG per result table, drawn straight from the in-memory rows that
the CSVs are written from, so the plots and the delimited output always
describe the same run.  Uses the Agg backend; nothing here opens a
window.
"""

import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

REGIME_COLORS = {"underdamped": "tab:blue", "critical": "tab:purple", "overdamped": "tab:red"}


def _columns(table):
    header, rows = table
    return header, list(zip(*rows)) if rows else [[] for _ in header]


def _group_rows(rows, key_index):
    groups = defaultdict(list)
    for row in rows:
        groups[row[key_index]].append(row)
    return groups


def _save(fig, out_dir, name):
    path = os.path.join(out_dir, f"{name}.png")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def _render_fig2(tables, out_dir):
    _, rows = tables["fig2"]
    _, limit_rows = tables["fig2_adiabatic"]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    limits = {t: p for t, p in limit_rows}
    for t_scale, group in sorted(_group_rows(rows, 1).items()):
        stages = [row[0] for row in group]
        marked = [row[2] for row in group]
        line, = ax.plot(stages, marked, "o-", markersize=3, label=f"t = {t_scale:.4g}")
        if t_scale in limits:
            ax.axhline(limits[t_scale], color=line.get_color(), linestyle="--", linewidth=0.9)
    ax.set_xlabel("stage count")
    ax.set_ylabel("success probability")
    ax.set_title("staged walk, dashed = large-stage limit")
    ax.legend()
    return [_save(fig, out_dir, "fig2")]


def _render_fig3(tables, out_dir):
    _, cols = _columns(tables["fig3"])
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(cols[0], cols[1], "-")
    ax.set_xlabel("scaled runtime")
    ax.set_ylabel("success probability")
    ax.set_title("adiabatic sweep")
    return [_save(fig, out_dir, "fig3")]


def _render_fig4(tables, out_dir):
    header, cols = _columns(tables["fig4"])
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    styles = {
        "p_projective": ("o-", "projective", True),
        "p_destructive": ("s-", "destructive", True),
        "p_dephasing_budget": ("o--", "dephasing, fixed total angle", False),
        "p_destruction_budget": ("s--", "destruction, fixed total angle", False),
    }
    for name, (style, label, filled) in styles.items():
        values = cols[header.index(name)]
        ax.semilogx(
            cols[0], values, style, label=label,
            markerfacecolor=None if filled else "none", markersize=4,
        )
    ax.set_xlabel("operation count")
    ax.set_ylabel("success probability")
    ax.set_title("channel sequences")
    ax.legend()
    return [_save(fig, out_dir, "fig4")]


def _render_angle_sweep(name, title, tables, out_dir, gold_angle):
    _, rows = tables[name]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for angle, group in sorted(_group_rows(rows, 1).items()):
        counts = [row[0] for row in group]
        marked = [row[2] for row in group]
        gold = abs(angle - gold_angle) < 1e-12
        ax.semilogx(
            counts, marked, "o-", markersize=3,
            color="goldenrod" if gold else None,
            linewidth=2.0 if gold else 1.2,
            label=f"angle = {angle:.4g}",
        )
    ax.set_xlabel("operation count")
    ax.set_ylabel("success probability")
    ax.set_title(title)
    ax.legend()
    return [_save(fig, out_dir, name)]


def _render_fig5(tables, out_dir):
    return _render_angle_sweep("fig5", "phase rotations", tables, out_dir, np.pi)


def _render_fig8(tables, out_dir):
    return _render_angle_sweep("fig8", "partial dissipation", tables, out_dir, np.pi / 2.0)


def _render_fig9(tables, out_dir):
    return _render_angle_sweep("fig9", "partial dephasing", tables, out_dir, np.pi / 2.0)


def _render_continuum(name, title, tables, out_dir):
    header, cols = _columns(tables[name])
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.semilogx(cols[0], cols[2], "o-", markersize=3, label="success")
    if "p_destroyed" in header:
        ax.semilogx(
            cols[0], cols[header.index("p_destroyed")], "s--", markersize=3, label="destroyed"
        )
    ax.set_xlabel("scaled runtime")
    ax.set_ylabel("probability")
    ax.set_title(title)
    ax.legend()
    return [_save(fig, out_dir, name)]


def _render_fig6(tables, out_dir):
    return _render_continuum("fig6", "continuous dephasing", tables, out_dir)


def _render_fig7(tables, out_dir):
    return _render_continuum("fig7", "continuous dissipation", tables, out_dir)


def _render_fig10(tables, out_dir):
    header, cols = _columns(tables["fig10"])
    levels = sum(1 for name in header if name.startswith("eigenvalue_"))
    s = np.asarray(cols[0], dtype=float)
    fig, ax = plt.subplots(figsize=(6.8, 4.6))
    scatter = None
    for k in range(levels):
        energy = np.asarray(cols[1 + k], dtype=float)
        weight = np.asarray(cols[1 + levels + k], dtype=float)
        scatter = ax.scatter(s, energy, c=weight, cmap="viridis", s=3, vmin=0.0, vmax=1.0)
    fig.colorbar(scatter, ax=ax, label="marked-vertex weight")
    ax.set_xlabel("sweep parameter")
    ax.set_ylabel("eigenvalue")
    ax.set_title("hypercube search spectrum")
    return [_save(fig, out_dir, "fig10")]


def _render_invariance(tables, out_dir):
    _, rows = tables["invariance"]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    names = [row[0] for row in rows]
    deviations = [max(row[1], 1e-18) for row in rows]
    ax.bar(names, deviations)
    ax.set_yscale("log")
    ax.axhline(1e-9, color="tab:red", linestyle="--", label="tolerance")
    ax.set_ylabel("max deviation across gap scales")
    ax.set_title("scale-invariance audit")
    ax.legend()
    return [_save(fig, out_dir, "invariance")]


def _render_zeno_scaling(tables, out_dir):
    _, rows = tables["zeno_scaling"]
    _, fit_rows = tables["zeno_scaling_fit"]
    exponents = {family: slope for family, slope in fit_rows}
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for family, group in sorted(_group_rows(rows, 1).items()):
        counts = np.asarray([row[0] for row in group], dtype=float)
        leaks = np.asarray([row[2] for row in group], dtype=float)
        label = f"{family} (fit exponent {exponents[family]:.3f})"
        ax.loglog(counts, leaks, "o-", markersize=3, label=label)
    ax.set_xlabel("operation count")
    ax.set_ylabel("leaked probability")
    ax.set_title("leak scaling")
    ax.legend()
    return [_save(fig, out_dir, "zeno_scaling")]


def _render_blockade(tables, out_dir):
    _, grid_rows = tables["blockade_grid"]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    seen = set()
    for conversion, loss, excluded, predicted, _, _, agree in grid_rows:
        color = REGIME_COLORS[predicted]
        marker = "x" if excluded else ("o" if agree == 1 else "D")
        label = predicted if predicted not in seen and not excluded else None
        seen.add(predicted)
        ax.scatter([conversion], [loss], c=color, marker=marker, s=45, label=label)
    ax.set_xlabel("conversion rate")
    ax.set_ylabel("loss rate")
    ax.set_yscale("log")
    ax.set_title("damping regimes (x = near-boundary, excluded)")
    ax.legend()
    paths = [_save(fig, out_dir, "blockade_grid")]

    _, series_rows = tables["blockade_series"]
    groups = _group_rows(series_rows, 0)
    fig, axes = plt.subplots(len(groups), 1, figsize=(6.4, 2.1 * len(groups)), sharex=True)
    axes = np.atleast_1d(axes)
    for ax_piece, (name, group) in zip(axes, groups.items()):
        times = [row[1] for row in group]
        values = [row[2] for row in group]
        regime = group[0][3]
        ax_piece.plot(times, values, "-", color=REGIME_COLORS.get(regime, "tab:gray"))
        ax_piece.set_ylabel("Im coherence")
        ax_piece.set_title(f"{name} ({regime})", fontsize=9)
    axes[-1].set_xlabel("time")
    paths.append(_save(fig, out_dir, "blockade_series"))
    return paths


def _render_custom(tables, out_dir):
    header, rows = tables["custom"]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    m_values = sorted({row[1] for row in rows})
    x_index, x_label = (1, "operation count") if len(m_values) > 1 else (2, "scaled runtime")
    for key, group in sorted(_group_rows(rows, 2 if x_index == 1 else 1).items()):
        xs = [row[x_index] for row in group]
        marked = [row[4] for row in group]
        ax.plot(xs, marked, "o-", markersize=3, label=f"{'t' if x_index == 1 else 'm'} = {key:.6g}")
        if "p_marked_sampled" in header:
            sampled = [row[header.index("p_marked_sampled")] for row in group]
            ax.plot(xs, sampled, "^--", markersize=3)
    ax.set_xlabel(x_label)
    ax.set_ylabel("success probability")
    ax.set_title(f"custom protocol: {rows[0][0] if rows else ''}")
    ax.legend()
    return [_save(fig, out_dir, "custom")]


RENDERERS = {
    "fig2": _render_fig2,
    "fig3": _render_fig3,
    "fig4": _render_fig4,
    "fig5": _render_fig5,
    "fig6": _render_fig6,
    "fig7": _render_fig7,
    "fig8": _render_fig8,
    "fig9": _render_fig9,
    "fig10": _render_fig10,
    "invariance": _render_invariance,
    "zeno-scaling": _render_zeno_scaling,
    "blockade-grid": _render_blockade,
    "custom": _render_custom,
}


def render_figures(experiment: str, tables: dict, out_dir: str) -> list[str]:
    """Render the PNGs for one experiment run and return their paths."""
    os.makedirs(out_dir, exist_ok=True)
    return RENDERERS[experiment](tables, out_dir)
