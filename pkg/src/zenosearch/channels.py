"""Discrete channels on the three-level search state.

Three families (phase rotation, measurement decoherence, excited-state
destruction), each with a full-strength and a partial-strength discrete
version, plus the bare quantum walk step.  Every channel acts in the
instantaneous eigenbasis of the crossing Hamiltonian at the supplied
bias; basis changes always go through model.eigenbasis_matrix so the
eigenvector convention lives in exactly one place.

All functions are pure: they return a new SystemState and never mutate
their input, so they are safe to use from concurrent sweeps.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .model import eigenbasis_matrix, gap
from .state import DISCARDED, SystemState


class Family(enum.Enum):
    """The three search-by-repeated-disturbance families."""

    PHASE_ROTATION = "phase_rotation"
    DECOHERENCE = "decoherence"
    DESTRUCTION = "destruction"


class Manifestation(enum.Enum):
    FULL_DISCRETE = "full_discrete"
    PARTIAL_DISCRETE = "partial_discrete"


@dataclass(frozen=True)
class ChannelSpec:
    """One configured channel: family, strength, and optional angles.

    angle is the per-application rotation angle and only matters for the
    partial-discrete manifestation; the full-discrete channels ignore it.
    rotation_time is bookkeeping for consistency checks against the
    pointer-measurement realization of the destruction family, where the
    effective angle is 2 * rotation_time * displacement.
    """

    family: Family
    manifestation: Manifestation
    angle: float = 0.0
    rotation_time: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.angle < 2.0 * np.pi:
            raise ValueError(f"angle must lie in [0, 2*pi), got {self.angle}")

    def apply(self, state: SystemState, bias: float) -> SystemState:
        """Apply this channel once at the given bias."""
        if self.family is Family.PHASE_ROTATION:
            if self.manifestation is Manifestation.FULL_DISCRETE:
                return phase_rotation(state, bias, np.pi)
            return phase_rotation(state, bias, self.angle)
        if self.family is Family.DECOHERENCE:
            if self.manifestation is Manifestation.FULL_DISCRETE:
                return projective_measurement(state, bias)
            return partial_dephasing(state, bias, self.angle)
        if self.manifestation is Manifestation.FULL_DISCRETE:
            return destructive_measurement(state, bias)
        return partial_destruction(state, bias, self.angle)


def _to_eigenbasis(state: SystemState, bias: float) -> tuple[np.ndarray, np.ndarray]:
    basis = eigenbasis_matrix(bias)
    return basis, basis.T @ state.two_level_block() @ basis


def _embedded(vector: np.ndarray) -> np.ndarray:
    mat = np.zeros((3, 3), dtype=complex)
    mat[:2, :2] = np.outer(vector, np.conj(vector))
    return mat


def kraus_operators(spec: ChannelSpec, bias: float) -> list[np.ndarray]:
    """Explicit 3x3 Kraus operators for a channel, for outcome sampling.

    The ensemble maps above are entrywise and never build these; the
    trajectory runner samples among them, and summing k rho k* recovers
    the ensemble map exactly (a cross-check the tests exercise).
    """
    basis = eigenbasis_matrix(bias)
    ground_proj = _embedded(basis[:, 0])
    excited_proj = _embedded(basis[:, 1])
    discard_proj = np.zeros((3, 3), dtype=complex)
    discard_proj[DISCARDED, DISCARDED] = 1.0
    identity_two = ground_proj + excited_proj

    if spec.family is Family.PHASE_ROTATION:
        angle = np.pi if spec.manifestation is Manifestation.FULL_DISCRETE else spec.angle
        unitary = ground_proj + np.exp(1j * angle) * excited_proj + discard_proj
        return [unitary]
    if spec.family is Family.DECOHERENCE:
        if spec.manifestation is Manifestation.FULL_DISCRETE:
            return [ground_proj, excited_proj, discard_proj]
        # two-branch unraveling: forward or reversed walk, even odds
        duration = spec.angle / gap(bias)
        width = gap(bias)
        theta = 0.5 * duration * width
        axis = np.zeros((3, 3), dtype=complex)
        axis[:2, :2] = np.array([[bias, -1.0], [-1.0, -bias]]) / width
        forward = np.cos(theta) * identity_two - 1j * np.sin(theta) * axis
        backward = np.cos(theta) * identity_two + 1j * np.sin(theta) * axis
        root_half = np.sqrt(0.5)
        return [
            root_half * (forward + discard_proj),
            root_half * (backward + discard_proj),
        ]
    drop = np.zeros((3, 3), dtype=complex)
    if spec.manifestation is Manifestation.FULL_DISCRETE:
        drop[DISCARDED, :2] = np.conj(basis[:, 1])
        return [ground_proj, drop, discard_proj]
    keep = ground_proj + np.cos(spec.angle) * excited_proj + discard_proj
    drop[DISCARDED, :2] = np.sin(spec.angle) * np.conj(basis[:, 1])
    return [keep, drop]


def phase_rotation(state: SystemState, bias: float, angle: float) -> SystemState:
    """Unitary |g><g| + e^{i*angle}|e><e| in the eigenbasis at bias.

    Leaves the discarded level and the purity unchanged.  angle = pi is
    the full eigenbasis flip; at bias 0 it swaps the two crossing
    superpositions, sending the start state straight onto the target.
    """
    basis, block = _to_eigenbasis(state, bias)
    phase = np.exp(1j * angle)
    block[0, 1] *= np.conj(phase)
    block[1, 0] *= phase
    return state.with_two_level_block(basis @ block @ basis.T)


def walk_step(state: SystemState, bias: float, duration: float) -> SystemState:
    """Evolve the search doublet under (bias*Z - X)/2 for a scaled duration."""
    # (bias*Z - X)/gap squares to the identity, so the exponential has the
    # closed form cos(theta) I - i sin(theta) (bias*Z - X)/gap.
    width = gap(bias)
    theta = 0.5 * duration * width
    axis = np.array([[bias, -1.0], [-1.0, -bias]]) / width
    unitary = np.cos(theta) * np.eye(2) - 1j * np.sin(theta) * axis
    block = state.two_level_block()
    return state.with_two_level_block(unitary @ block @ unitary.conj().T)


def projective_measurement(state: SystemState, bias: float) -> SystemState:
    """Dephase completely in the eigenbasis at bias (off-diagonals to zero)."""
    basis, block = _to_eigenbasis(state, bias)
    block[0, 1] = 0.0
    block[1, 0] = 0.0
    return state.with_two_level_block(basis @ block @ basis.T)


def partial_dephasing(state: SystemState, bias: float, angle: float) -> SystemState:
    """Scale eigenbasis off-diagonals by cos(angle); populations untouched.

    Equivalent to averaging forward and reversed walk evolution of
    duration angle/gap at fixed bias, which is how the tests check it.
    angle = pi/2 reproduces projective_measurement.
    """
    basis, block = _to_eigenbasis(state, bias)
    damp = np.cos(angle)
    block[0, 1] *= damp
    block[1, 0] *= damp
    return state.with_two_level_block(basis @ block @ basis.T)


def destructive_measurement(state: SystemState, bias: float) -> SystemState:
    """Move all excited-state population at bias into the discarded level.

    Kraus set {P_g, |d><e|, |d><d|}: the ground component survives
    coherence-free, the excited component is removed, previously
    discarded population stays put.  Trace preserving.
    """
    basis, block = _to_eigenbasis(state, bias)
    rho = np.array(state.rho)
    rho[DISCARDED, DISCARDED] += block[1, 1].real
    kept = np.zeros((2, 2), dtype=complex)
    kept[0, 0] = block[0, 0]
    rho[:2, :2] = basis @ kept @ basis.T
    return SystemState(rho)


def partial_destruction(state: SystemState, bias: float, angle: float) -> SystemState:
    """Remove a sin^2(angle) fraction of the excited population at bias.

    Kraus pair {P_g + cos(angle) P_e + |d><d|, sin(angle) |d><e|}: the
    excited population scales by cos^2, eigenbasis coherences by cos,
    and the removed weight lands in the discarded level.  angle = pi/2
    reproduces destructive_measurement.
    """
    basis, block = _to_eigenbasis(state, bias)
    keep = np.cos(angle)
    lost = np.sin(angle) ** 2
    rho = np.array(state.rho)
    rho[DISCARDED, DISCARDED] += lost * block[1, 1].real
    block[0, 1] *= keep
    block[1, 0] *= keep
    block[1, 1] *= keep * keep
    rho[:2, :2] = basis @ block @ basis.T
    return SystemState(rho)
