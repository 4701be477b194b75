"""Two-level avoided-crossing model: schedules, gaps, eigenbasis geometry.

Everything here works in scaled units: energies are measured in multiples of
the minimum gap and times in units of its inverse, so the two-level
Hamiltonian along the anneal is

    H(tau) = (bias * Z - X) / 2,        bias = f(tau),

acting on the ordered basis (|marked>, |unmarked>).  `tau` is the normalized
protocol time, always strictly inside (0, 1); the schedule value `bias` plays
the role of the Z-tilt and diverges toward the endpoints for the optimal
schedule.  Raw-units helpers multiply back by an explicit minimum gap and are
used only by the scale-invariance audit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Schedule",
    "OptimalSchedule",
    "CutoffSchedule",
    "ConstantSchedule",
    "TableSchedule",
    "optimal_schedule",
    "cutoff_schedule",
    "gap",
    "eigenpair",
    "eigenbasis_matrix",
    "hamiltonian",
    "raw_hamiltonian",
    "tau_grid",
    "basis_increment",
]


def _check_tau(tau: float) -> None:
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie strictly inside (0, 1), got {tau}")


def optimal_schedule(tau: float) -> float:
    """Schedule value cot(pi*tau): slows the anneal where the gap is small.

    Strictly decreasing on (0, 1), zero at the crossing tau = 1/2, divergent
    at the endpoints (which are therefore excluded from the domain).
    """
    _check_tau(tau)
    return 1.0 / np.tan(np.pi * tau)


def cutoff_schedule(tau: float, gap_min: float) -> float:
    """Optimal schedule clamped to |bias| <= 1/gap_min.

    The clamp bounds the control amplitude a real device would need; inside
    the clamp window it coincides with the optimal schedule.
    """
    _check_tau(tau)
    # Physical gap_min values live in (0, 1]; larger values are accepted since
    # the clamp algebra is indifferent and callers may probe the formula.
    if gap_min <= 0.0:
        raise ValueError(f"gap_min must be positive, got {gap_min}")
    limit = 1.0 / gap_min
    value = optimal_schedule(tau)
    if abs(value) < limit:
        return value
    return np.copysign(limit, value)


class Schedule:
    """Callable protocol: maps tau in (0, 1) to the schedule value."""

    def __call__(self, tau: float) -> float:  # pragma: no cover - interface
        raise NotImplementedError


@dataclass(frozen=True)
class OptimalSchedule(Schedule):
    def __call__(self, tau: float) -> float:
        return optimal_schedule(tau)


@dataclass(frozen=True)
class CutoffSchedule(Schedule):
    gap_min: float

    def __call__(self, tau: float) -> float:
        return cutoff_schedule(tau, self.gap_min)


@dataclass(frozen=True)
class ConstantSchedule(Schedule):
    bias: float

    def __call__(self, tau: float) -> float:
        _check_tau(tau)
        return self.bias


@dataclass(frozen=True)
class TableSchedule(Schedule):
    """Piecewise-linear schedule through (tau_k, bias_k) pairs.

    tau_k must be strictly increasing and inside (0, 1).  Evaluation outside
    the tabulated range clamps to the nearest end value; the interpolation
    rule is a deliberate, documented choice since only the knots are given.
    """

    taus: tuple[float, ...]
    biases: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.taus) != len(self.biases) or not self.taus:
            raise ValueError("taus and biases must be equal-length and non-empty")
        ts = np.asarray(self.taus, dtype=float)
        if np.any(ts <= 0.0) or np.any(ts >= 1.0):
            raise ValueError("table knots must lie strictly inside (0, 1)")
        if np.any(np.diff(ts) <= 0.0):
            raise ValueError("table knots must be strictly increasing")

    def __call__(self, tau: float) -> float:
        _check_tau(tau)
        return float(np.interp(tau, self.taus, self.biases))


def gap(bias: float) -> float:
    """Instantaneous gap sqrt(bias^2 + 1) in units of the minimum gap."""
    return np.hypot(bias, 1.0)


def _tilt_plus(bias: float) -> float:
    # sqrt(bias^2+1) + bias; rewritten as 1/(sqrt(bias^2+1) - bias) for
    # bias < 0 to dodge catastrophic cancellation at large negative bias.
    s = np.hypot(bias, 1.0)
    if bias >= 0.0:
        return s + bias
    return 1.0 / (s - bias)


def eigenpair(bias: float) -> tuple[np.ndarray, np.ndarray]:
    """Ground and excited eigenvectors of (bias*Z - X)/2 as real unit 2-vectors.

    ground = (1, a)/N and excited = (a, -1)/N with a = sqrt(bias^2+1) + bias,
    N = sqrt(a^2 + 1); eigenvalues are -gap/2 and +gap/2 respectively.  At
    large positive bias the ground state approaches |unmarked>, at large
    negative bias it approaches |marked>.
    """
    a = _tilt_plus(bias)
    norm = np.hypot(a, 1.0)
    ground = np.array([1.0, a]) / norm
    excited = np.array([a, -1.0]) / norm
    return ground, excited


def eigenbasis_matrix(bias: float) -> np.ndarray:
    """2x2 orthogonal matrix whose columns are (ground, excited)."""
    ground, excited = eigenpair(bias)
    return np.column_stack([ground, excited])


def hamiltonian(bias: float) -> np.ndarray:
    """Scaled two-level Hamiltonian (bias*Z - X)/2."""
    return 0.5 * np.array([[bias, -1.0], [-1.0, -bias]])


def raw_hamiltonian(bias: float, gap_min: float) -> np.ndarray:
    """Raw-units Hamiltonian gap_min*(bias*Z - X)/2, for the invariance audit."""
    return gap_min * hamiltonian(bias)


def tau_grid(m: int) -> np.ndarray:
    """Evenly spaced interior grid {j/(m+1) : j = 1..m}; excludes 0 and 1."""
    if m < 0:
        raise ValueError(f"operation count must be non-negative, got {m}")
    return np.arange(1, m + 1) / (m + 1)


def basis_increment(schedule: Schedule, q: int, j: int) -> float:
    """Overlap <excited(j/q)|ground((j-1)/q)>: one step's eigenbasis turn.

    Signs follow the eigenpair formulas with no absolute values; for the
    optimal schedule every increment is negative and the increments sum to
    -pi/2 as q grows, reflecting the quarter turn of the ground state from
    |unmarked> to |marked>.  The grid ends j-1 = 0 and j = q are evaluated
    as boundary limits of the schedule.
    """
    if q < 2:
        raise ValueError(f"grid count q must be at least 2, got {q}")
    if not 1 <= j <= q:
        raise ValueError(f"index j must lie in 1..q, got {j}")
    excited = _boundary_eigenpair(schedule, j / q)[1]
    ground = _boundary_eigenpair(schedule, (j - 1) / q)[0]
    return float(excited @ ground)


def _boundary_eigenpair(schedule: Schedule, tau: float) -> tuple[np.ndarray, np.ndarray]:
    # The grid ends j-1 = 0 and j = q fall on the schedule's open boundary;
    # nudge inside by an amount small enough (1e-15) that the eigenbasis is
    # converged to its boundary limit far beyond the 1e-12 tolerances.
    tau_eff = min(max(tau, 1e-15), 1.0 - 1e-15)
    return eigenpair(schedule(tau_eff))
