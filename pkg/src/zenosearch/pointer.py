"""Branch-resolved pointer-measurement realization of the lossy channels.

The destruction and alternative-decoherence channels can be realized
physically by coupling the two-level system to a continuous pointer and
an ancilla qubit: shift the pointer by an energy-dependent displacement,
rotate the ancilla by an angle set by the pointer position, measure the
ancilla, then undo the pointer shift.  This module simulates that
construction branch by branch and exposes the reduced two-level channel,
which the tests compare against the direct channel implementations.

Pointer wavepackets are idealized to exact positions; finite detector
resolution enters only through the displacement guard checked in the
tests (the displacement is independent of the raw gap scale, so shrinking
the gap buys no measurement precision).

Branch bookkeeping: a branch is (system eigenlabel, pointer position,
ancilla spinor, complex amplitude, sector).  Branches in different
sectors never interfere; sectors record incoherent measurement outcomes
kept by the alternative-decoherence step.  Ancilla spinors are kept
normalized per branch, so total probability is the sum of |amplitude|^2
plus the destroyed accumulator.
"""

from dataclasses import dataclass, replace

import numpy as np

from .model import eigenpair, gap
from .state import DISCARDED, SystemState

GROUND = "ground"
EXCITED = "excited"

_PRUNE = 1e-14
_NORM_TOL = 1e-10


@dataclass(frozen=True)
class Branch:
    label: str
    position: float
    ancilla: tuple[complex, complex]
    amplitude: complex
    sector: tuple[int, ...] = ()

    def weight(self) -> float:
        a0, a1 = self.ancilla
        return abs(self.amplitude) ** 2 * (abs(a0) ** 2 + abs(a1) ** 2)


@dataclass(frozen=True)
class BranchState:
    branches: tuple[Branch, ...]
    destroyed: float = 0.0

    @staticmethod
    def from_eigen_amplitudes(ground_amp: complex, excited_amp: complex) -> "BranchState":
        """Start state: superposition of eigenlabels, pointer 0, ancilla |0>."""
        branches = []
        for label, amp in ((GROUND, ground_amp), (EXCITED, excited_amp)):
            if abs(amp) >= _PRUNE:
                branches.append(Branch(label, 0.0, (1.0 + 0.0j, 0.0j), complex(amp)))
        return BranchState(tuple(branches))

    def total_probability(self) -> float:
        return sum(b.weight() for b in self.branches) + self.destroyed

    def check_normalized(self) -> "BranchState":
        total = self.total_probability()
        if abs(total - 1.0) > _NORM_TOL:
            raise ValueError(f"branch probabilities sum to {total}, not 1")
        return self


def _merged(branches: list[Branch], destroyed: float) -> BranchState:
    """Coalesce branches sharing (label, position, sector); drop dust.

    Lone branches and groups with a common ancilla pass through without
    renormalization so that no-op compositions stay bitwise identical;
    only genuinely different spinors fall back to the normalized sum.
    """
    groups: dict[tuple, list[Branch]] = {}
    for b in branches:
        groups.setdefault((b.label, b.position, b.sector), []).append(b)
    kept = []
    for (label, position, sector), group in groups.items():
        if len(group) == 1:
            b = group[0]
            if np.sqrt(b.weight()) >= _PRUNE:
                kept.append(b)
            continue
        first = group[0]
        if all(g.ancilla == first.ancilla for g in group):
            amplitude = sum(g.amplitude for g in group)
            spinor_scale = np.linalg.norm(np.array(first.ancilla))
            if abs(amplitude) * spinor_scale >= _PRUNE:
                kept.append(Branch(label, position, first.ancilla, amplitude, sector))
            continue
        spinor = sum(g.amplitude * np.array(g.ancilla, dtype=complex) for g in group)
        norm = float(np.linalg.norm(spinor))
        if norm < _PRUNE:
            continue
        a0, a1 = spinor / norm
        kept.append(Branch(label, position, (a0, a1), norm + 0.0j, sector))
    return BranchState(tuple(kept), destroyed)


def apply_u_meas(
    bs: BranchState, t_scale: float, bias: float, direction: str = "forward"
) -> BranchState:
    """Shift pointers by the energy-conditioned displacement t_scale*gap.

    Ground branches move to larger positions, excited branches to
    smaller; the inverse direction undoes the shift exactly.
    """
    if direction not in ("forward", "inverse"):
        raise ValueError(f"direction must be forward or inverse, got {direction!r}")
    shift = t_scale * gap(bias)
    if direction == "inverse":
        shift = -shift
    moved = [
        replace(b, position=b.position + (shift if b.label == GROUND else -shift))
        for b in bs.branches
    ]
    return BranchState(tuple(moved), bs.destroyed)


def apply_u_rot(bs: BranchState, t_rot: float, x_mag: float) -> BranchState:
    """Rotate each ancilla about X by t_rot*(x_mag - position).

    Branches sitting at +x_mag (the ground displacement) are untouched;
    branches at -x_mag pick up the full angle 2*t_rot*x_mag.
    """
    rotated = []
    for b in bs.branches:
        theta = t_rot * (x_mag - b.position)
        c, s = np.cos(theta), np.sin(theta)
        a0, a1 = b.ancilla
        rotated.append(replace(b, ancilla=(c * a0 - 1j * s * a1, -1j * s * a0 + c * a1)))
    return BranchState(tuple(rotated), bs.destroyed)


def project_and_abort(bs: BranchState) -> BranchState:
    """Measure every ancilla; |1> outcomes feed the destroyed accumulator."""
    destroyed = bs.destroyed
    survivors = []
    for b in bs.branches:
        a0, a1 = b.ancilla
        destroyed += abs(b.amplitude) ** 2 * abs(a1) ** 2
        survivors.append(
            replace(b, ancilla=(1.0 + 0.0j, 0.0j), amplitude=b.amplitude * a0)
        )
    return _merged(survivors, destroyed)


def _require_reset(bs: BranchState) -> None:
    for b in bs.branches:
        a0, a1 = b.ancilla
        if b.position != 0.0 or abs(a1) > 1e-12 or abs(abs(a0) - 1.0) > 1e-12:
            raise ValueError("branch state must have pointers at 0 and ancillas |0>")


def measurement_displacement(t_scale: float, bias: float) -> float:
    """Pointer displacement magnitude for one measurement at this bias.

    Depends only on scaled quantities, so it stays put as the raw gap
    scale changes; there is no hidden precision gain from a small gap.
    """
    return t_scale * gap(bias)


def dissipation_step(
    bs: BranchState, bias: float, t_scale: float, t_rot: float
) -> BranchState:
    """One destruction step: shift, rotate, measure-and-abort, unshift.

    Afterwards every surviving branch is back at pointer 0 with ancilla
    |0>; only the system label and the destroyed weight have changed.
    The reduced two-level channel equals partial_destruction with
    angle = 2*t_rot*t_scale*gap(bias).
    """
    _require_reset(bs)
    x_mag = measurement_displacement(t_scale, bias)
    out = apply_u_meas(bs, t_scale, bias, "forward")
    out = apply_u_rot(out, t_rot, x_mag)
    out = project_and_abort(out)
    out = apply_u_meas(out, t_scale, bias, "inverse")
    _require_reset(out)
    return out


def decoherence_alt_step(
    bs: BranchState, bias: float, t_scale: float, t_rot: float
) -> BranchState:
    """One decoherence step: like dissipation_step but both outcomes kept.

    The ancilla-|1> outcome is flipped back to |0> and retained in a
    fresh incoherent sector instead of being discarded, so no weight is
    destroyed and the reduced channel is partial_dephasing with
    angle = 2*t_rot*t_scale*gap(bias).
    """
    _require_reset(bs)
    x_mag = measurement_displacement(t_scale, bias)
    out = apply_u_meas(bs, t_scale, bias, "forward")
    out = apply_u_rot(out, t_rot, x_mag)
    forked = []
    for b in out.branches:
        a0, a1 = b.ancilla
        forked.append(
            replace(
                b,
                ancilla=(1.0 + 0.0j, 0.0j),
                amplitude=b.amplitude * a0,
                sector=b.sector + (0,),
            )
        )
        forked.append(
            replace(
                b,
                ancilla=(1.0 + 0.0j, 0.0j),
                amplitude=b.amplitude * a1,
                sector=b.sector + (1,),
            )
        )
    out = _merged(forked, out.destroyed)
    out = apply_u_meas(out, t_scale, bias, "inverse")
    _require_reset(out)
    return out


def reduced_channel(
    state: SystemState, bias: float, t_scale: float, t_rot: float, step
) -> SystemState:
    """Run a pointer step on each eigencomponent of a density matrix.

    Decomposes the two-level block into its eigenvectors, pushes each
    through `step` (dissipation_step or decoherence_alt_step) as a branch
    state, and reassembles the output density matrix, summing incoherent
    sectors and routing destroyed weight to the discarded level.  This is
    the oracle the channel tests compare against.
    """
    ground, excited = eigenpair(bias)
    basis = np.column_stack([ground, excited])
    weights, vectors = np.linalg.eigh(state.two_level_block())
    block_out = np.zeros((2, 2), dtype=complex)
    destroyed = 0.0
    for weight, vector in zip(weights, vectors.T):
        if weight < 1e-15:
            continue
        in_eigen = basis.T @ vector
        bs = BranchState.from_eigen_amplitudes(in_eigen[0], in_eigen[1])
        out = step(bs, bias, t_scale, t_rot)
        destroyed += weight * out.destroyed
        sectors: dict[tuple, np.ndarray] = {}
        for b in out.branches:
            a0, _ = b.ancilla
            column = basis[:, 0] if b.label == GROUND else basis[:, 1]
            addend = b.amplitude * a0 * column
            if b.sector in sectors:
                sectors[b.sector] += addend
            else:
                sectors[b.sector] = addend
        for vec in sectors.values():
            block_out += weight * np.outer(vec, vec.conj())
    rho = np.array(state.rho)
    rho[:2, :2] = block_out
    rho[DISCARDED, DISCARDED] += destroyed
    return SystemState(rho)
