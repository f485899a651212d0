"""
Unit tests for the dense Hermitian linear algebra layer.

Run: pytest scripts/test_linalg.py
"""
import itertools

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import hermitian_matrices
from isostokes.core.errors import (
    IndexOutOfRange,
    InputError,
    MismatchedSelection,
    NonHermitianInput,
    NonPositiveBase,
    OverflowRisk,
    WrongDimension,
)
from isostokes.core.linalg import (
    TWO_PI_I,
    antidiag_P,
    check_hermitian,
    delta_k,
    eta_k,
    herm_eigen,
    hermitian_to_params,
    matrix_exp,
    minor_det,
    p_flip,
    params_to_hermitian,
    perm_matrix,
    random_hermitian,
    random_straight_path,
    scaled_power,
)


def cofactor_det(M):
    """Laplace expansion along the first row."""
    n = M.shape[0]
    if n == 0:
        return 1.0
    total = 0j
    for j in range(n):
        sub = np.delete(np.delete(M, 0, axis=0), j, axis=1)
        total += (-1) ** j * M[0, j] * cofactor_det(sub)
    return total


class TestCheckHermitian:

    def test_returns_exact_hermitian_part(self):
        A = np.array([[1.0, 2 + 1j], [2 - 1j + 1e-15, 3.0]])
        H = check_hermitian(A)
        assert np.array_equal(H, H.conj().T)

    def test_rejects_non_hermitian(self):
        with pytest.raises(NonHermitianInput) as info:
            check_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))
        assert info.value.details["defect"] == pytest.approx(1.0)

    def test_rejects_non_square(self):
        with pytest.raises(WrongDimension):
            check_hermitian(np.zeros((2, 3)))

    def test_rejects_non_finite(self):
        with pytest.raises(InputError):
            check_hermitian(np.array([[np.nan]]))


class TestHermEigen:

    def test_diagonal_input(self):
        eig = herm_eigen(np.diag([3.0, 1.0, 2.0]))
        np.testing.assert_allclose(eig.values, [1.0, 2.0, 3.0])
        expected = np.eye(3)[:, [1, 2, 0]]
        np.testing.assert_allclose(eig.vectors, expected, atol=1e-15)

    def test_pauli_x_phase_fixed(self):
        eig = herm_eigen(np.array([[0.0, 1.0], [1.0, 0.0]]))
        np.testing.assert_allclose(eig.values, [-1.0, 1.0], atol=1e-15)
        s = 1 / np.sqrt(2)
        np.testing.assert_allclose(eig.vectors[:, 0], [s, -s], atol=1e-14)
        np.testing.assert_allclose(eig.vectors[:, 1], [s, s], atol=1e-14)

    def test_random_4x4_reconstruction(self, rng):
        A = random_hermitian(rng, 4, 2.0)
        eig = herm_eigen(A)
        assert np.linalg.norm(eig.reconstruct() - A) <= 1e-12 * np.linalg.norm(A)
        assert np.linalg.norm(eig.vectors.conj().T @ eig.vectors - np.eye(4)) <= 1e-12

    def test_matches_numpy_spectrum(self, rng):
        A = random_hermitian(rng, 6, 5.0)
        np.testing.assert_allclose(herm_eigen(A).values, np.linalg.eigvalsh(A), atol=1e-12)

    def test_deterministic(self, rng):
        A = random_hermitian(rng, 5)
        a, b = herm_eigen(A), herm_eigen(A)
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.vectors, b.vectors)

    def test_extended_precision_agrees(self, rng):
        A = random_hermitian(rng, 4)
        np.testing.assert_allclose(herm_eigen(A, extended_precision=True).values, herm_eigen(A).values, atol=1e-13)

    @settings(max_examples=60, deadline=None)
    @given(hermitian_matrices(min_n=1, max_n=5))
    def test_invariants(self, A):
        eig = herm_eigen(A)
        scale = max(np.linalg.norm(A), 1.0)
        assert np.all(np.diff(eig.values) >= 0)
        assert np.linalg.norm(A @ eig.vectors - eig.vectors * eig.values) <= 1e-11 * scale
        assert np.linalg.norm(eig.vectors.conj().T @ eig.vectors - np.eye(A.shape[0])) <= 1e-11
        for j in range(A.shape[0]):
            col = eig.vectors[:, j]
            top = int(np.argmax(np.abs(col)))
            assert abs(col[top].imag) <= 1e-12
            assert col[top].real > 0


class TestMatrixExp:

    def test_zero(self):
        np.testing.assert_array_equal(matrix_exp(np.zeros((3, 3))), np.eye(3))

    def test_diagonal(self):
        np.testing.assert_allclose(matrix_exp(np.diag([0.5, -1.0])), np.diag(np.exp([0.5, -1.0])))

    def test_anti_hermitian_is_unitary(self, rng):
        M = 1j * random_hermitian(rng, 4, 3.0)
        U = matrix_exp(M)
        assert np.linalg.norm(U.conj().T @ U - np.eye(4)) <= 1e-10

    def test_general_matches_scipy(self, rng):
        from scipy.linalg import expm
        M = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        np.testing.assert_allclose(matrix_exp(M), expm(M), rtol=1e-12)

    def test_overflow_guard(self):
        with pytest.raises(OverflowRisk):
            matrix_exp(np.diag([800.0, 0.0]))


class TestScaledPower:

    def test_unit_base(self, rng):
        M = random_hermitian(rng, 3)
        np.testing.assert_allclose(scaled_power(M, 1.0, 0.7 - 0.2j), np.eye(3), atol=1e-14)

    def test_identity_exponent(self):
        np.testing.assert_allclose(scaled_power(np.eye(3), np.e, 1.0), np.e * np.eye(3), rtol=1e-14)

    def test_unitary_for_imaginary_scale(self, rng):
        M = random_hermitian(rng, 4, 3.0)
        R = scaled_power(M, 7.0, 1 / TWO_PI_I)
        assert np.linalg.norm(R.conj().T @ R - np.eye(4)) <= 1e-10

    def test_rejects_non_positive_base(self):
        with pytest.raises(NonPositiveBase):
            scaled_power(np.eye(2), -1.0, 1.0)


class TestTruncations:

    def test_delta_limits(self, rng):
        A = random_hermitian(rng, 4)
        np.testing.assert_array_equal(delta_k(A, 4), A)
        np.testing.assert_array_equal(delta_k(A, 0), np.diag(np.diag(A)))

    def test_delta_zero_pattern(self, rng):
        A = random_hermitian(rng, 3) + 0.1
        D = delta_k(A, 2)
        for i, j in [(0, 2), (2, 0), (1, 2), (2, 1)]:
            assert D[i, j] == 0
        np.testing.assert_array_equal(D[:2, :2], A[:2, :2])

    def test_eta_limits(self, rng):
        A = random_hermitian(rng, 4)
        np.testing.assert_array_equal(eta_k(A, 4), A)
        np.testing.assert_array_equal(eta_k(A, 0), np.diag(np.diag(A)))

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_eta_is_flipped_delta(self, rng, n):
        A = random_hermitian(rng, n)
        P = antidiag_P(n)
        for k in range(n + 1):
            np.testing.assert_array_equal(eta_k(A, k), P @ delta_k(P @ A @ P, k) @ P)

    def test_index_out_of_range(self):
        with pytest.raises(IndexOutOfRange):
            delta_k(np.eye(3), 4)
        with pytest.raises(IndexOutOfRange):
            eta_k(np.eye(3), -1)


class TestMinorDet:

    def test_single_entry(self, rng):
        M = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        assert minor_det(M, [0], [0]) == pytest.approx(M[0, 0])

    def test_empty_selection(self):
        assert minor_det(np.eye(2), [], []) == 1.0

    def test_against_cofactor_expansion(self, rng):
        M = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        for size in (1, 2, 3):
            for rows in itertools.combinations(range(4), size):
                for cols in itertools.combinations(range(4), size):
                    expected = cofactor_det(M[np.ix_(rows, cols)])
                    assert minor_det(M, rows, cols) == pytest.approx(expected, rel=1e-12, abs=1e-12)

    def test_rows_1_3_cols_1_2(self, rng):
        M = rng.standard_normal((3, 3))
        expected = M[0, 0] * M[2, 1] - M[0, 1] * M[2, 0]
        assert minor_det(M, [0, 2], [0, 1]) == pytest.approx(expected, rel=1e-12)

    def test_mismatched_selection(self):
        with pytest.raises(MismatchedSelection):
            minor_det(np.eye(3), [0, 1], [0])

    def test_index_out_of_range(self):
        with pytest.raises(IndexOutOfRange):
            minor_det(np.eye(3), [3], [0])


class TestPermutations:

    def test_antidiag_2(self):
        np.testing.assert_array_equal(antidiag_P(2), [[0, 1], [1, 0]])

    def test_antidiag_reverses_diagonal(self):
        P = antidiag_P(4)
        u = np.array([1.0, 2.0, 5.0, 7.0])
        np.testing.assert_array_equal(P @ np.diag(u) @ P, np.diag(u[::-1]))

    def test_p_flip_matches_conjugation(self, rng):
        M = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        P = antidiag_P(5)
        np.testing.assert_array_equal(p_flip(M), P @ M @ P)
        np.testing.assert_array_equal(p_flip(p_flip(M)), M)

    def test_identity_permutation(self):
        np.testing.assert_array_equal(perm_matrix([0, 1, 2]), np.eye(3))

    def test_permutation_moves_basis_vectors(self):
        P = perm_matrix([2, 0, 1])
        np.testing.assert_array_equal(P @ np.array([1, 0, 0]), [0, 0, 1])


class TestHelpers:

    def test_hermitian_params_round_trip(self, rng):
        H = random_hermitian(rng, 4)
        x = hermitian_to_params(H)
        assert x.shape == (16,)
        np.testing.assert_allclose(params_to_hermitian(x, 4), H, atol=1e-15)

    def test_random_hermitian_norm(self, rng):
        H = random_hermitian(rng, 5, 2.5)
        assert np.linalg.norm(H) == pytest.approx(2.5)
        assert np.array_equal(H, H.conj().T)

    def test_straight_path_keeps_gaps(self, rng):
        u0, u1 = random_straight_path(rng, 4, length=2.0)
        assert np.linalg.norm(u1 - u0) == pytest.approx(2.0)
        assert np.all(np.diff(u1) >= np.diff(u0) - 1e-12)
