"""Blockade optics model: a cavity photon transfer gated by a Zeno effect.

A photon hops linearly between a fiber mode and a cavity mode while a
nonlinear conversion, fed by a control mode, moves cavity occupation into
a lossy auxiliary mode.  The imaginary part of the fiber-cavity coherence
drives the transfer, and once the conversion terms are kept and the weak
hopping neglected it obeys a damped-oscillator equation: oscillation
frequency sqrt(control*fiber)*conversion_rate, damping loss_rate/4.  The
regime boundary at four times the frequency equals the loss rate is
therefore exactly critical damping: above it the coherence rings through
zero as it decays, below it the coherence dies without a sign change.

Three routes of increasing fidelity are provided: the reduced
second-order equation, the first-order pair it comes from (with the
neglected hopping terms reinstated as exogenous constants), and a full
master equation over the four truncated Fock modes.  The truncation at
total occupation control+fiber is exact for the physical start state
because every conversion event trades two photons for one and loss only
removes, so the total occupation never grows.
"""

import enum
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.integrate import solve_ivp
from scipy.sparse import csc_matrix, identity, kron
from scipy.sparse.linalg import expm_multiply

from .continuum import IntegrationError

_MODES = 4
_FIBER, _CAVITY, _CONTROL, _LOSS = range(_MODES)
_CRITICAL_TOLERANCE = 1e-12
_LEAK_LIMIT = 1e-6


class RegimeLabel(enum.Enum):
    UNDERDAMPED = "underdamped"
    CRITICAL = "critical"
    OVERDAMPED = "overdamped"


class TruncationLeakError(RuntimeError):
    """Population reached states that couple out of the truncated basis."""


@dataclass(frozen=True)
class BlockadeParams:
    """Photon counts and rates, all rates in the same inverse-time units."""

    control_photons: int
    fiber_photons: int
    conversion_rate: float
    loss_rate: float
    hop_rate: float

    def __post_init__(self) -> None:
        if self.control_photons < 1 or self.fiber_photons < 1:
            raise ValueError("photon counts must be at least 1")
        if min(self.conversion_rate, self.loss_rate, self.hop_rate) < 0.0:
            raise ValueError("rates must be non-negative")

    def oscillation_frequency(self) -> float:
        """Angular frequency of the undamped coherence oscillation."""
        return float(
            np.sqrt(self.control_photons * self.fiber_photons) * self.conversion_rate
        )


@dataclass(frozen=True)
class OscillatorSeries:
    times: np.ndarray
    values: np.ndarray
    slopes: np.ndarray


@dataclass(frozen=True)
class CoupledSeries:
    times: np.ndarray
    cavity_fiber_im: np.ndarray
    loss_fiber_re: np.ndarray


@dataclass(frozen=True)
class OracleSeries:
    times: np.ndarray
    coherence_im: np.ndarray
    mode_populations: np.ndarray
    max_trace_drift: float
    max_hermiticity_drift: float


def classify_regime(params: BlockadeParams) -> RegimeLabel:
    """Damping regime of the reduced coherence equation."""
    threshold = 4.0 * params.oscillation_frequency()
    scale = max(abs(threshold), abs(params.loss_rate))
    if abs(threshold - params.loss_rate) <= _CRITICAL_TOLERANCE * scale:
        return RegimeLabel.CRITICAL
    if threshold > params.loss_rate:
        return RegimeLabel.UNDERDAMPED
    return RegimeLabel.OVERDAMPED


def _solve_linear(rhs, initial, t_max, sample_count):
    times = np.linspace(0.0, t_max, sample_count)
    solution = solve_ivp(
        rhs,
        (0.0, t_max),
        initial,
        method="DOP853",
        rtol=1e-10,
        atol=1e-13,
        t_eval=times,
    )
    if not solution.success:
        reached = float(solution.t[-1]) if len(solution.t) else 0.0
        raise IntegrationError(f"oscillator integration failed: {solution.message}", reached)
    return times, solution.y


def simulate_offdiag(
    params: BlockadeParams,
    initial_value: float,
    initial_slope: float,
    t_max: float,
    sample_count: int = 2001,
) -> OscillatorSeries:
    """Reduced damped-oscillator equation for the transfer coherence."""
    if t_max <= 0.0:
        raise ValueError(f"t_max must be positive, got {t_max}")
    if sample_count < 2:
        raise ValueError("need at least two samples")
    spring = params.oscillation_frequency() ** 2
    damping = 0.5 * params.loss_rate

    def rhs(_, state):
        value, slope = state
        return [slope, -spring * value - damping * slope]

    times, states = _solve_linear(rhs, [initial_value, initial_slope], t_max, sample_count)
    return OscillatorSeries(times, states[0], states[1])


def simulate_coupled(
    params: BlockadeParams,
    initial_cavity_fiber_im: float,
    initial_loss_fiber_re: float,
    t_max: float,
    population_difference: float = 0.0,
    loss_cavity_im: float = 0.0,
    sample_count: int = 2001,
) -> CoupledSeries:
    """First-order pair for the two coherences that carry the transfer.

    The hopping terms couple to density-matrix elements whose own motion
    the reduction never specifies; they enter here as constants (fiber
    minus cavity population, and the loss-cavity coherence), defaulting to
    zero, which is the regime where hopping is blocked.
    """
    if t_max <= 0.0:
        raise ValueError(f"t_max must be positive, got {t_max}")
    if sample_count < 2:
        raise ValueError("need at least two samples")
    root_fiber = np.sqrt(params.fiber_photons)
    frequency = params.oscillation_frequency()

    def rhs(_, state):
        transfer, decay_side = state
        d_transfer = (
            -root_fiber * params.hop_rate * population_difference
            - frequency * decay_side
        )
        d_decay = (
            frequency * transfer
            + root_fiber * params.hop_rate * loss_cavity_im
            - 0.5 * params.loss_rate * decay_side
        )
        return [d_transfer, d_decay]

    times, states = _solve_linear(
        rhs, [initial_cavity_fiber_im, initial_loss_fiber_re], t_max, sample_count
    )
    return CoupledSeries(times, states[0], states[1])


def sign_change_times(
    times: np.ndarray, values: np.ndarray, dead_band: float
) -> np.ndarray:
    """Zero crossings by linear interpolation, ignoring the dead band.

    Samples whose magnitude sits inside the dead band carry no sign
    information; a crossing is an adjacent pair of retained samples with
    opposite signs.
    """
    if dead_band < 0.0:
        raise ValueError("dead band must be non-negative")
    keep = np.abs(values) > dead_band
    kept_times = np.asarray(times)[keep]
    kept_values = np.asarray(values)[keep]
    if len(kept_values) < 2:
        return np.empty(0)
    signs = np.sign(kept_values)
    flips = np.nonzero(signs[1:] != signs[:-1])[0]
    left_t = kept_times[flips]
    right_t = kept_times[flips + 1]
    left_y = kept_values[flips]
    right_y = kept_values[flips + 1]
    return left_t - left_y * (right_t - left_t) / (right_y - left_y)


def regime_from_series(
    times: np.ndarray, values: np.ndarray, reference_scale: float | None = None
) -> RegimeLabel:
    """Underdamped when the series crosses zero, overdamped when it never does."""
    scale = abs(reference_scale) if reference_scale else float(np.max(np.abs(values)))
    crossings = sign_change_times(times, values, 1e-6 * scale)
    if len(crossings) >= 1:
        return RegimeLabel.UNDERDAMPED
    return RegimeLabel.OVERDAMPED


def _fock_basis(cutoff: int) -> list[tuple[int, ...]]:
    states = [
        occ
        for occ in product(range(cutoff + 1), repeat=_MODES)
        if sum(occ) <= cutoff
    ]
    states.sort()
    return states


def _lowering_operators(basis: list[tuple[int, ...]]) -> list[np.ndarray]:
    index = {occ: i for i, occ in enumerate(basis)}
    dim = len(basis)
    operators = []
    for mode in range(_MODES):
        matrix = np.zeros((dim, dim))
        for occ, row in index.items():
            if occ[mode] == 0:
                continue
            lowered = list(occ)
            lowered[mode] -= 1
            matrix[index[tuple(lowered)], row] = np.sqrt(occ[mode])
        operators.append(matrix)
    return operators


def simulate_master_oracle(
    params: BlockadeParams,
    t_max: float,
    fock_cutoff: int | None = None,
    sample_count: int = 801,
    seed_transfer_coherence: bool = False,
) -> OracleSeries:
    """Full four-mode master equation in a truncated occupation basis.

    Starts from all fiber and control photons in place, nothing in the
    cavity or the lossy mode, and follows the exact propagator of the
    vectorized generator between samples.  Independent of the reduced
    equations in both construction and integration method, which is what
    makes it usable as an oracle for the regime classification.

    With the default start the transfer coherence is created by the hop
    term and rings around a forced offset, so its sign tracks the drive,
    not the damping regime.  seed_transfer_coherence instead starts in an
    equal superposition of the untouched state and the one-photon-moved
    state with a quarter-turn phase, which hands the oscillator a nonzero
    initial value and zero initial slope; run that with hop_rate = 0 to
    compare sign changes against the reduced equation.
    """
    if t_max <= 0.0:
        raise ValueError(f"t_max must be positive, got {t_max}")
    if sample_count < 2:
        raise ValueError("need at least two samples")
    total = params.control_photons + params.fiber_photons
    cutoff = total if fock_cutoff is None else fock_cutoff
    if cutoff < total:
        raise ValueError(
            f"fock_cutoff {cutoff} cannot hold the {total} initial photons"
        )
    basis = _fock_basis(cutoff)
    lower = _lowering_operators(basis)
    dim = len(basis)

    hop = params.hop_rate * (lower[_FIBER].T @ lower[_CAVITY])
    convert = params.conversion_rate * (
        lower[_LOSS].T @ lower[_CAVITY] @ lower[_CONTROL]
    )
    ham = csc_matrix(hop + hop.T + convert + convert.T)

    # vectorized generator, row-major layout, kept sparse so the state
    # space can grow with the photon numbers
    eye = identity(dim, format="csc")
    jump = csc_matrix(lower[_LOSS])
    absorb = jump.T @ jump
    generator = -1j * (kron(ham, eye) - kron(eye, ham.T)) + params.loss_rate * (
        kron(jump, jump)
        - 0.5 * kron(absorb, eye)
        - 0.5 * kron(eye, absorb.T)
    )
    generator = csc_matrix(generator)

    start = (params.fiber_photons, 0, params.control_photons, 0)
    rho = np.zeros((dim, dim), dtype=complex)
    if seed_transfer_coherence:
        moved = (params.fiber_photons - 1, 1, params.control_photons, 0)
        amplitudes = np.zeros(dim, dtype=complex)
        amplitudes[basis.index(start)] = 1.0 / np.sqrt(2.0)
        amplitudes[basis.index(moved)] = 1j / np.sqrt(2.0)
        rho = np.outer(amplitudes, amplitudes.conj())
    else:
        rho[basis.index(start), basis.index(start)] = 1.0

    # states on the truncation surface that the Hamiltonian couples upward
    leaky = np.array(
        [sum(occ) == cutoff and occ[_LOSS] >= 1 for occ in basis]
    )
    coherence_op = lower[_FIBER].T @ lower[_CAVITY]
    number_ops = [op.T @ op for op in lower]

    times = np.linspace(0.0, t_max, sample_count)
    trajectory = expm_multiply(
        generator, rho.ravel(), start=0.0, stop=t_max, num=sample_count
    )
    coherence = np.empty(sample_count)
    populations = np.empty((_MODES, sample_count))
    trace_drift = 0.0
    herm_drift = 0.0
    for k in range(sample_count):
        rho = trajectory[k].reshape(dim, dim)
        trace_drift = max(trace_drift, abs(np.trace(rho).real - 1.0))
        herm_drift = max(herm_drift, float(np.max(np.abs(rho - rho.conj().T))))
        leak = float(np.sum(np.diag(rho).real[leaky]))
        if leak > _LEAK_LIMIT:
            raise TruncationLeakError(
                f"population {leak} reached the truncation surface at t = {times[k]}"
            )
        coherence[k] = np.trace(rho @ coherence_op).imag
        for mode in range(_MODES):
            populations[mode, k] = np.trace(rho @ number_ops[mode]).real
    return OracleSeries(times, coherence, populations, trace_drift, herm_drift)
