"""State type, purity accounting, and the marked/residual decomposition.

The purity lower bound is cross-checked by brute-force minimization over
random two-level density matrices of conditioned purity, which is the
independent oracle for the closed form.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from zenosearch import model
from zenosearch.state import (
    PmDecomposition,
    SystemState,
    decompose_pm,
    destroyed_probability,
    marked_probability,
    purity,
    purity_lower_bound,
)


def embed(block):
    rho = np.zeros((3, 3), dtype=complex)
    rho[:2, :2] = block
    return SystemState(rho)


def random_two_level_density(rng, target_purity=None):
    """Haar-rotated 2x2 density matrix, optionally of exact purity."""
    if target_purity is None:
        lam = rng.uniform(0.0, 1.0)
    else:
        lam = 0.5 * (1.0 + np.sqrt(2.0 * target_purity - 1.0))
    ginibre = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    unitary, _ = np.linalg.qr(ginibre)
    return unitary @ np.diag([lam, 1.0 - lam]) @ unitary.conj().T


class TestSystemState:
    def test_constructors_and_probabilities(self):
        start = SystemState.unmarked_start()
        assert marked_probability(start) == 0.0
        assert destroyed_probability(start) == 0.0
        assert purity(start) == pytest.approx(1.0, abs=1e-15)

        marked = SystemState.from_two_level(np.array([1.0, 0.0]))
        assert marked_probability(marked) == 1.0

        mixed = embed(0.5 * np.eye(2))
        assert marked_probability(mixed) == pytest.approx(0.5)
        assert purity(mixed) == pytest.approx(0.5)

    def test_destroyed_probability_reads_third_diagonal(self):
        rho = np.diag([0.2, 0.3, 0.5]).astype(complex)
        assert destroyed_probability(SystemState(rho)) == pytest.approx(0.5)
        assert purity(SystemState(np.diag([1 / 3, 1 / 3, 1 / 3]).astype(complex))) == pytest.approx(
            1 / 3
        )

    def test_eigenstate_mixture_purity(self):
        ground, excited = model.eigenpair(0.8)
        block = 0.5 * (np.outer(ground, ground) + np.outer(excited, excited))
        assert purity(embed(block)) == pytest.approx(0.5, abs=1e-14)

    def test_validate_catches_bad_states(self):
        good = SystemState.unmarked_start().validate()
        assert good is not None

        lopsided = np.zeros((3, 3), dtype=complex)
        lopsided[0, 1] = 1.0
        lopsided[0, 0] = 1.0
        with pytest.raises(ValueError):
            SystemState(lopsided).validate()

        traceless = np.zeros((3, 3), dtype=complex)
        with pytest.raises(ValueError):
            SystemState(traceless).validate()

        discarded_coherence = np.diag([0.5, 0.5, 0.0]).astype(complex)
        discarded_coherence[0, 2] = 1e-3
        discarded_coherence[2, 0] = 1e-3
        with pytest.raises(ValueError):
            SystemState(discarded_coherence).validate()

        unnormalized = np.array([1.0, 1.0])
        with pytest.raises(ValueError):
            SystemState.from_two_level(unnormalized)


class TestPurityLowerBound:
    def test_endpoint_values(self):
        assert purity_lower_bound(1.0) == pytest.approx(0.0, abs=1e-15)
        assert purity_lower_bound(0.5) == pytest.approx(0.5, abs=1e-15)

    def test_frozen_intermediate_value(self):
        # (1 - sqrt(1/2))/2, the smaller eigenvalue at purity 3/4.
        assert purity_lower_bound(0.75) == pytest.approx(0.14644660940672627, abs=1e-14)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            purity_lower_bound(0.4)

    def test_minimization_oracle(self):
        # Brute force: the smallest marked probability seen among many random
        # states of purity ~0.75 must approach the bound from above.
        rng = np.random.default_rng(7)
        bound = purity_lower_bound(0.75)
        smallest = 1.0
        for _ in range(20_000):
            target = rng.uniform(0.749, 0.751)
            rho = random_two_level_density(rng, target_purity=target)
            smallest = min(smallest, rho[0, 0].real)
        assert smallest >= bound - 2e-3  # conditioning window slack
        assert smallest == pytest.approx(bound, abs=2e-2)

    def test_bound_holds_for_random_states(self):
        rng = np.random.default_rng(11)
        for _ in range(2_000):
            rho = random_two_level_density(rng)
            p = np.trace(rho @ rho).real
            assert rho[0, 0].real >= purity_lower_bound(p) - 1e-12


class TestDecomposePm:
    def test_pure_unmarked(self):
        result = decompose_pm(SystemState.unmarked_start())
        assert result.p_m == pytest.approx(0.0, abs=1e-14)
        assert result.p_psi == pytest.approx(1.0, abs=1e-14)
        assert_allclose(np.abs(result.psi), [0.0, 1.0], atol=1e-12)

    def test_maximally_mixed(self):
        result = decompose_pm(embed(0.5 * np.eye(2)))
        assert result.p_m == pytest.approx(0.5, abs=1e-14)
        assert result.p_psi == pytest.approx(0.5, abs=1e-14)
        assert_allclose(np.abs(result.psi), [0.0, 1.0], atol=1e-12)

    def test_degenerate_pure_marked(self):
        result = decompose_pm(SystemState.from_two_level(np.array([1.0, 0.0])))
        assert result.p_m == 1.0
        assert result.p_psi == 0.0
        assert_allclose(np.abs(result.psi), [0.0, 1.0])

    def test_reconstruction_over_random_states(self):
        rng = np.random.default_rng(3)
        for _ in range(1_000):
            rho = random_two_level_density(rng, target_purity=0.8)
            result = decompose_pm(embed(rho))
            assert result.p_m + result.p_psi == pytest.approx(1.0, abs=1e-12)
            assert result.p_m >= -1e-14 and result.p_psi >= -1e-14
            assert np.max(np.abs(result.reconstruct() - rho)) < 1e-10

    def test_p_m_at_least_purity_bound(self):
        rng = np.random.default_rng(5)
        for _ in range(500):
            rho = random_two_level_density(rng)
            p = np.trace(rho @ rho).real
            result = decompose_pm(embed(rho))
            assert result.p_m >= purity_lower_bound(p) - 1e-10

    def test_rejects_discarded_population(self):
        rho = np.diag([0.4, 0.4, 0.2]).astype(complex)
        with pytest.raises(ValueError):
            decompose_pm(SystemState(rho))

    def test_reconstruct_shape(self):
        recon = PmDecomposition(0.25, 0.75, np.array([0.0, 1.0], dtype=complex)).reconstruct()
        assert_allclose(recon, np.diag([0.25, 0.75]))
