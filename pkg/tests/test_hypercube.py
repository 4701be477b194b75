"""Shell-basis search Hamiltonian, gap scaling, and the full-space oracle."""

import numpy as np
import pytest

from zenosearch.hypercube import (
    SpectrumSlice,
    build_hamiltonian,
    full_space_eigenvalues,
    min_gap,
    shell_projection,
    spectrum,
)

RNG = np.random.default_rng(271828)


def kron_hamiltonian(n, s, marked_sign=-1):
    """Independent full-space construction used as the test-side oracle."""
    dim = 2**n
    pauli_x = np.array([[0.0, 1.0], [1.0, 0.0]])
    ham = np.zeros((dim, dim))
    for i in range(n):
        ham -= (1.0 - s) * np.kron(
            np.eye(2**i), np.kron(pauli_x, np.eye(2 ** (n - i - 1)))
        )
    ham[0, 0] += marked_sign * s
    return ham


class TestBuildHamiltonian:
    def test_single_qubit_driver(self):
        ham = build_hamiltonian(1, 0.0)
        assert np.array_equal(ham.matrix, np.array([[0.0, -1.0], [-1.0, 0.0]]))
        assert np.allclose(np.linalg.eigvalsh(ham.matrix), [-1.0, 1.0])

    def test_two_qubit_driver(self):
        ham = build_hamiltonian(2, 0.0)
        root2 = np.sqrt(2.0)
        assert ham.matrix[0, 1] == pytest.approx(-root2, abs=1e-15)
        assert ham.matrix[1, 2] == pytest.approx(-root2, abs=1e-15)
        assert np.linalg.eigvalsh(ham.matrix)[0] == pytest.approx(-2.0, abs=1e-12)

    def test_pure_marked_end(self):
        ham = build_hamiltonian(5, 1.0)
        expected = np.zeros((6, 6))
        expected[0, 0] = -1.0
        assert np.array_equal(ham.matrix, expected)
        # the marked shell is the ground state at the far end of the sweep
        _, vectors = np.linalg.eigh(ham.matrix)
        assert abs(vectors[0, 0]) == pytest.approx(1.0, abs=1e-12)

    def test_positive_sign_variant(self):
        ham = build_hamiltonian(4, 0.6, marked_sign=1)
        assert ham.matrix[0, 0] == pytest.approx(0.6, abs=1e-15)

    def test_offdiagonal_formula(self):
        ham = build_hamiltonian(6, 0.3)
        for k in range(6):
            expected = -0.7 * np.sqrt((k + 1) * (6 - k))
            assert ham.matrix[k, k + 1] == pytest.approx(expected, rel=1e-14)

    def test_symmetric_tridiagonal(self):
        ham = build_hamiltonian(9, 0.41)
        assert np.array_equal(ham.matrix, ham.matrix.T)
        beyond = ham.matrix - np.triu(np.tril(ham.matrix, 1), -1)
        assert np.all(beyond == 0.0)

    @pytest.mark.parametrize(
        "n,s,sign", [(0, 0.5, -1), (65, 0.5, -1), (4, -0.1, -1), (4, 1.1, -1), (4, 0.5, 2)]
    )
    def test_bad_arguments_rejected(self, n, s, sign):
        with pytest.raises(ValueError):
            build_hamiltonian(n, s, sign)


class TestSpectrum:
    def test_single_qubit_levels(self):
        sl = spectrum(1, 0.0)
        assert np.allclose(sl.eigenvalues, [-1.0, 1.0])

    def test_eigenvalues_ascending_and_overlaps_bounded(self):
        for _ in range(10):
            n = int(RNG.integers(1, 24))
            sl = spectrum(n, float(RNG.uniform(0.0, 1.0)))
            assert np.all(np.diff(sl.eigenvalues) >= -1e-12)
            for overlaps in (sl.marked_overlaps, sl.unmarked_overlaps):
                assert np.all(overlaps >= -1e-15)
                assert np.all(overlaps <= 1.0 + 1e-12)

    def test_overlap_completeness(self):
        sl = spectrum(15, 0.63)
        assert sl.marked_overlaps.sum() == pytest.approx(1.0, abs=1e-10)
        assert sl.unmarked_overlaps.sum() == pytest.approx(1.0, abs=1e-10)

    def test_ground_state_exchanges_character(self):
        s_star, _ = min_gap(20)
        before = spectrum(20, s_star - 0.02)
        after = spectrum(20, s_star + 0.02)
        assert before.unmarked_overlaps[0] > 0.99
        assert before.marked_overlaps[0] < 0.01
        assert after.marked_overlaps[0] > 0.95
        assert after.unmarked_overlaps[0] < 0.01
        # the excited state swaps the other way
        assert after.unmarked_overlaps[1] > 0.99

    def test_even_mixing_at_the_crossing(self):
        s_star, _ = min_gap(20)
        sl = spectrum(20, s_star)
        assert 0.3 < sl.marked_overlaps[0] < 0.7
        assert 0.3 < sl.unmarked_overlaps[0] < 0.7


class TestFullSpaceOracle:
    @pytest.mark.parametrize("n", [2, 4, 8, 10])
    def test_shell_eigenvalues_appear_in_full_spectrum(self, n):
        s = 0.37
        full = full_space_eigenvalues(n, s)
        shell = np.linalg.eigvalsh(build_hamiltonian(n, s).matrix)
        worst = max(np.min(np.abs(full - value)) for value in shell)
        assert worst < 1e-10

    def test_projected_hamiltonian_recovers_shell_matrix(self):
        n, s = 6, 0.61
        projection = shell_projection(n)
        projected = projection.T @ kron_hamiltonian(n, s) @ projection
        assert np.max(np.abs(projected - build_hamiltonian(n, s).matrix)) < 1e-12

    def test_projection_is_isometry(self):
        projection = shell_projection(7)
        assert np.max(np.abs(projection.T @ projection - np.eye(8))) < 1e-12

    def test_module_matches_literal_two_qubit_matrix(self):
        s = 0.5
        literal = np.array(
            [
                [-0.5, -0.5, -0.5, 0.0],
                [-0.5, 0.0, 0.0, -0.5],
                [-0.5, 0.0, 0.0, -0.5],
                [0.0, -0.5, -0.5, 0.0],
            ]
        )
        assert np.allclose(
            full_space_eigenvalues(2, s), np.linalg.eigvalsh(literal), atol=1e-12
        )

    def test_oracle_size_guard(self):
        with pytest.raises(ValueError):
            full_space_eigenvalues(13, 0.5)
        with pytest.raises(ValueError):
            shell_projection(13)


class TestMinGap:
    def test_single_qubit_analytic_minimum(self):
        # gap(s) = sqrt(5 s^2 - 8 s + 4), minimized at s = 4/5
        s_star, g = min_gap(1)
        assert abs(s_star - 0.8) < 2e-8
        assert abs(g - 2.0 / np.sqrt(5.0)) < 1e-10

    def test_gap_halves_per_added_qubit_pair(self):
        gaps = {n: min_gap(n)[1] for n in (14, 16, 18, 20)}
        for n in (14, 16, 18):
            ratio = gaps[n + 2] / gaps[n]
            assert 0.45 <= ratio <= 0.55

    def test_scaled_gap_converges(self):
        values = [min_gap(n)[1] * 2 ** (n / 2) for n in (12, 14, 16, 18, 20)]
        for previous, current in zip(values, values[1:]):
            assert abs(current / previous - 1.0) < 0.15

    def test_crossing_narrow_and_isolated_at_twenty_qubits(self):
        s_star, g = min_gap(20)
        assert s_star == pytest.approx(0.94967206, abs=1e-6)
        assert g == pytest.approx(1.78797120e-3, abs=1e-8)
        sl = spectrum(20, s_star)
        isolation = (sl.eigenvalues[2] - sl.eigenvalues[1]) / (
            sl.eigenvalues[1] - sl.eigenvalues[0]
        )
        assert isolation >= 10.0

    def test_crossing_approaches_marked_end(self):
        # unit-weight marked branch crosses the driver branch at n/(n+1)
        for n in (8, 12, 16):
            s_star, _ = min_gap(n)
            assert s_star == pytest.approx(n / (n + 1.0), abs=0.02)

    def test_positive_sign_minimum_sits_at_boundary(self):
        s_star, g = min_gap(4, marked_sign=1)
        assert s_star > 0.99
        assert 0.0 < g < 0.1

    def test_bad_qubit_count_rejected(self):
        with pytest.raises(ValueError):
            min_gap(0)


class TestEigenvalueContinuity:
    def test_no_ordering_glitches_along_sweep(self):
        n = 12
        grid = np.linspace(0.02, 0.98, 241)
        levels = np.array([np.linalg.eigvalsh(build_hamiltonian(n, s).matrix) for s in grid])
        for track in range(3):
            jumps = np.abs(np.diff(levels[:, track]))
            for j in range(1, len(jumps) - 1):
                local = 0.5 * (jumps[j - 1] + jumps[j + 1])
                assert jumps[j] <= 10.0 * local + 1e-9
