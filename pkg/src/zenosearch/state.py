"""Density-matrix state over (|marked>, |unmarked>, |discarded>).

The third basis state collects population removed by destructive channels so
that every channel family shares one trace-preserving state type.  No channel
ever creates coherences to the discarded state, and the code enforces that
the corresponding off-diagonal entries stay exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SystemState",
    "PmDecomposition",
    "marked_probability",
    "destroyed_probability",
    "purity",
    "purity_lower_bound",
    "decompose_pm",
]

MARKED, UNMARKED, DISCARDED = 0, 1, 2

_HERM_TOL = 1e-12
_TRACE_TOL = 1e-12
_PSD_TOL = 1e-12


@dataclass(frozen=True)
class SystemState:
    """Immutable 3x3 density matrix; basis order (marked, unmarked, discarded)."""

    rho: np.ndarray

    @staticmethod
    def from_two_level(vector: np.ndarray) -> "SystemState":
        """Pure state from a normalized 2-vector on the search doublet."""
        vec = np.asarray(vector, dtype=complex)
        if vec.shape != (2,):
            raise ValueError("expected a 2-vector on the (marked, unmarked) doublet")
        norm = np.linalg.norm(vec)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state vector must be normalized, norm = {norm}")
        rho = np.zeros((3, 3), dtype=complex)
        rho[:2, :2] = np.outer(vec, vec.conj())
        return SystemState(rho)

    @staticmethod
    def unmarked_start() -> "SystemState":
        """The search's standard initial state: pure |unmarked>."""
        return SystemState.from_two_level(np.array([0.0, 1.0]))

    def validate(self) -> "SystemState":
        rho = self.rho
        if rho.shape != (3, 3):
            raise ValueError(f"density matrix must be 3x3, got shape {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > _HERM_TOL:
            raise ValueError("density matrix is not Hermitian within tolerance")
        if abs(np.trace(rho).real - 1.0) > _TRACE_TOL or abs(np.trace(rho).imag) > _TRACE_TOL:
            raise ValueError(f"trace must be 1, got {np.trace(rho)}")
        if rho[MARKED, DISCARDED] != 0 or rho[UNMARKED, DISCARDED] != 0:
            raise ValueError("discarded-state coherences must be exactly zero")
        eigenvalues = np.linalg.eigvalsh(rho)
        if eigenvalues.min() < -_PSD_TOL:
            raise ValueError(f"negative eigenvalue {eigenvalues.min()} below tolerance")
        return self

    def two_level_block(self) -> np.ndarray:
        return np.array(self.rho[:2, :2])

    def with_two_level_block(self, block: np.ndarray) -> "SystemState":
        rho = np.array(self.rho)
        rho[:2, :2] = block
        return SystemState(rho)


def marked_probability(state: SystemState) -> float:
    return float(state.rho[MARKED, MARKED].real)


def destroyed_probability(state: SystemState) -> float:
    return float(state.rho[DISCARDED, DISCARDED].real)


def purity(state: SystemState) -> float:
    """Tr[rho^2]; 1 for pure states, 1/3 for the full three-way mixture."""
    return float(np.trace(state.rho @ state.rho).real)


def purity_lower_bound(tr_rho_sq: float) -> float:
    """The least marked-state probability any two-level state of this purity allows.

    For a trace-one 2x2 density matrix the smaller eigenvalue is
    (1 - sqrt(2*Tr[rho^2] - 1))/2, and no diagonal entry can fall below the
    smaller eigenvalue, so the returned value bounds <marked|rho|marked>
    from below.  Two-level purities live in [1/2, 1]; anything smaller is a
    domain error rather than a clamp.
    """
    if tr_rho_sq < 0.5 - 1e-12 or tr_rho_sq > 1.0 + 1e-12:
        raise ValueError(f"two-level purity must lie in [1/2, 1], got {tr_rho_sq}")
    radicand = max(2.0 * tr_rho_sq - 1.0, 0.0)
    return 0.5 * (1.0 - np.sqrt(radicand))


@dataclass(frozen=True)
class PmDecomposition:
    """Split of a two-level state into a marked part and one residual pure state.

    rho = p_m |marked><marked| + p_psi |psi><psi| with p_m + p_psi = 1.
    """

    p_m: float
    p_psi: float
    psi: np.ndarray

    def reconstruct(self) -> np.ndarray:
        marked = np.zeros((2, 2), dtype=complex)
        marked[0, 0] = 1.0
        return self.p_m * marked + self.p_psi * np.outer(self.psi, self.psi.conj())


def decompose_pm(state: SystemState) -> PmDecomposition:
    """Unique split rho = p_m |marked><marked| + (1 - p_m)|psi><psi|.

    Requiring the residual rho - p_m |marked><marked| to be a rank-one
    positive matrix forces p_m = det(rho_2)/<unmarked|rho|unmarked>, which
    equals (1 - Tr[rho_2^2]) / (2 <unmarked|rho|unmarked>).  When psi is
    orthogonal to the marked state this reduces to the purity lower bound;
    in general p_m is at least that bound.  The discarded population must be
    zero: the split is a two-level statement.
    """
    if destroyed_probability(state) > 1e-14:
        raise ValueError("decomposition requires zero discarded population")
    block = state.two_level_block()
    rho_ww = block[1, 1].real
    if rho_ww <= 1e-14:
        # Degenerate point: zero unmarked population forces rho = |marked><marked|.
        return PmDecomposition(p_m=1.0, p_psi=0.0, psi=np.array([0.0, 1.0], dtype=complex))
    det = np.linalg.det(block).real
    p_m = min(max(det / rho_ww, 0.0), 1.0)
    p_psi = 1.0 - p_m
    residual = block - p_m * np.diag([1.0, 0.0])
    if p_psi <= 1e-14:
        psi = np.array([0.0, 1.0], dtype=complex)
    else:
        # The residual is rank one by construction; take its leading eigenvector.
        eigenvalues, eigenvectors = np.linalg.eigh(residual)
        psi = eigenvectors[:, int(np.argmax(eigenvalues))]
        # Fix the free global phase: make the unmarked component real positive
        # (it cannot vanish, since rho_ww = p_psi |<unmarked|psi>|^2 > 0).
        phase = psi[1] / abs(psi[1])
        psi = psi / phase
    return PmDecomposition(p_m=float(p_m), p_psi=float(p_psi), psi=psi)
