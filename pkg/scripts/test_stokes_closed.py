"""
Tests for the Gelfand-Tsetlin pattern and the closed-form Stokes sub-diagonals.

Run: pytest scripts/test_stokes_closed.py
"""
import numpy as np
import pytest
from hypothesis import given, settings

from conftest import hermitian_matrices
from isostokes.core.errors import DegenerateSpectrum, IndexOutOfRange
from isostokes.core.linalg import TWO_PI_I, random_hermitian
from isostokes.core.models import PrefactorConvention, StokesPair, SubdiagonalData
from isostokes.core.special import gamma
from isostokes.monodromy.stokes_closed import (
    closed_stokes_band,
    closed_subdiagonals,
    genericity_check,
    gt_pattern,
    m_coeff,
    subdiagonals_of,
    transform_minus,
)


def two_by_two_closed_form(A, convention=PrefactorConvention.SUM):
    a11, a22, b = A[0, 0].real, A[1, 1].real, A[0, 1]
    lam = np.linalg.eigvalsh(A)
    exponent = (a11 + a22) / 4 if convention is PrefactorConvention.SUM else (a11 - a22) / 4
    denom = gamma(1 + (lam[0] - a11) / TWO_PI_I) * gamma(1 + (lam[1] - a11) / TWO_PI_I)
    return np.exp(exponent) * b / denom


class TestGTPattern:

    def test_diagonal(self):
        pat = gt_pattern(np.diag([1.0, 2.0, 3.0]))
        assert pat.n == 3
        np.testing.assert_allclose(pat.level(1), [1.0])
        np.testing.assert_allclose(pat.level(2), [1.0, 2.0])
        np.testing.assert_allclose(pat.level(3), [1.0, 2.0, 3.0])
        np.testing.assert_allclose(pat.extensions, [1.0, 2.0, 3.0])
        assert pat.level(0).size == 0

    def test_pauli_x(self):
        pat = gt_pattern(np.array([[0.0, 1.0], [1.0, 0.0]]))
        np.testing.assert_allclose(pat.level(1), [0.0])
        np.testing.assert_allclose(pat.level(2), [-1.0, 1.0], atol=1e-15)
        assert pat.extensions[1] == pytest.approx(0.0, abs=1e-15)

    @settings(max_examples=200, deadline=None)
    @given(hermitian_matrices(min_n=1, max_n=6))
    def test_interlacing_and_telescoping(self, A):
        pat = gt_pattern(A)
        tol = 1e-10 * max(1.0, np.linalg.norm(A))
        for k in range(1, pat.n):
            upper, lower = pat.level(k + 1), pat.level(k)
            assert np.all(upper[:-1] <= lower + tol)
            assert np.all(lower <= upper[1:] + tol)
        for k in range(1, pat.n + 1):
            assert pat.level(k).sum() == pytest.approx(np.trace(A[:k, :k]).real, abs=tol)


class TestGenericity:

    def test_generic(self):
        assert genericity_check(gt_pattern(np.diag([1.0, 2.0, 3.0]))) is None

    def test_repeated_eigenvalue(self):
        failure = genericity_check(gt_pattern(np.diag([1.0, 1.0, 2.0])))
        assert isinstance(failure, DegenerateSpectrum)
        assert failure.level == 2
        assert failure.indices == (0, 1)

    def test_equal_diagonal_splits(self):
        assert genericity_check(gt_pattern(np.array([[0.5, 0.3j], [-0.3j, 0.5]]))) is None

    def test_closed_form_rejects_degenerate(self):
        with pytest.raises(DegenerateSpectrum):
            closed_subdiagonals(np.diag([1.0, 1.0, 2.0]))


class TestMCoeff:

    def test_first_level_is_matrix_entry(self, hermitian_3x3):
        pat = gt_pattern(hermitian_3x3)
        assert m_coeff(hermitian_3x3, pat, 1, 1) == pytest.approx(hermitian_3x3[0, 1])

    def test_diagonal_vanishes(self):
        A = np.diag([0.1, 0.7, -0.4, 1.2])
        pat = gt_pattern(A)
        for k in range(1, 4):
            for i in range(1, k + 1):
                assert m_coeff(A, pat, k, i) == 0

    def test_second_level_brute_force(self, hermitian_3x3):
        A = hermitian_3x3
        pat = gt_pattern(A)
        level = pat.level(2)
        for i in (1, 2):
            lam = level[i - 1]
            other = level[2 - i]
            # rows {1,2}\{j}, column {1} of (lam - A): j = 1 keeps row 2, j = 2 keeps row 1
            expected = (-(-A[1, 0]) * A[0, 2] + (lam - A[0, 0]) * A[1, 2]) / (lam - other)
            assert m_coeff(A, pat, 2, i) == pytest.approx(expected, rel=1e-12)

    def test_index_range(self, hermitian_3x3):
        pat = gt_pattern(hermitian_3x3)
        with pytest.raises(IndexOutOfRange):
            m_coeff(hermitian_3x3, pat, 3, 1)
        with pytest.raises(IndexOutOfRange):
            m_coeff(hermitian_3x3, pat, 1, 2)


class TestClosedSubdiagonals:

    def test_scalar_is_empty(self):
        sub = closed_subdiagonals([[0.7]])
        assert sub.s_plus.size == 0 and sub.s_minus.size == 0

    def test_diagonal_is_zero(self):
        sub = closed_subdiagonals(np.diag([0.3, -1.0, 2.0, 0.8]))
        np.testing.assert_array_equal(sub.s_plus, 0)
        np.testing.assert_array_equal(sub.s_minus, 0)

    @pytest.mark.parametrize("convention", list(PrefactorConvention))
    def test_two_by_two_formula(self, hermitian_2x2, convention):
        sub = closed_subdiagonals(hermitian_2x2, convention)
        assert sub.s_plus[0] == pytest.approx(two_by_two_closed_form(hermitian_2x2, convention), rel=1e-12)

    def test_two_by_two_modulus(self, hermitian_2x2):
        A = hermitian_2x2
        lam = np.linalg.eigvalsh(A)
        s = closed_subdiagonals(A).s_plus[0]
        expected = np.exp(lam).sum() - np.exp(A[0, 0].real) - np.exp(A[1, 1].real)
        assert abs(s) ** 2 == pytest.approx(expected, rel=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(hermitian_matrices(min_n=2, max_n=5, max_abs=2.0))
    def test_minus_is_conjugate(self, A):
        if genericity_check(gt_pattern(A)) is not None:
            return
        sub = closed_subdiagonals(A)
        np.testing.assert_allclose(sub.s_minus, np.conj(sub.s_plus), rtol=1e-10, atol=1e-12)

    def test_printed_convention_is_shift_invariant(self, rng):
        A = random_hermitian(rng, 4)
        base = closed_subdiagonals(A, PrefactorConvention.PRINTED)
        shifted = closed_subdiagonals(A + 0.7 * np.eye(4), PrefactorConvention.PRINTED)
        np.testing.assert_allclose(shifted.s_plus, base.s_plus, rtol=1e-10, atol=1e-12)

    def test_sum_convention_scales_with_shift(self, rng):
        A = random_hermitian(rng, 4)
        c = 0.7
        base = closed_subdiagonals(A)
        shifted = closed_subdiagonals(A + c * np.eye(4))
        np.testing.assert_allclose(shifted.s_plus, np.exp(c / 2) * base.s_plus, rtol=1e-10, atol=1e-12)

    def test_band(self, hermitian_3x3):
        pair = closed_stokes_band(hermitian_3x3)
        sub = closed_subdiagonals(hermitian_3x3)
        np.testing.assert_allclose(np.diag(pair.S_plus), np.exp(np.diag(hermitian_3x3).real / 2))
        assert pair.S_plus[0, 2] == 0 and pair.S_minus[2, 0] == 0
        np.testing.assert_array_equal(subdiagonals_of(pair).s_plus, sub.s_plus)
        assert pair.diagnostics["source"] == "closed_form"


class TestTransformMinus:

    def test_subdiagonal_involution(self):
        sub = SubdiagonalData(s_plus=np.array([1 + 1j, 2.0, 3j]), s_minus=np.array([4.0, 5j, 6.0]))
        back = transform_minus(transform_minus(sub))
        np.testing.assert_array_equal(back.s_plus, sub.s_plus)
        np.testing.assert_array_equal(back.s_minus, sub.s_minus)

    def test_subdiagonal_reversal(self):
        sub = SubdiagonalData(s_plus=np.array([1.0, 2.0]), s_minus=np.array([3.0, 4.0]))
        flipped = transform_minus(sub)
        np.testing.assert_array_equal(flipped.s_plus, [4.0, 3.0])
        np.testing.assert_array_equal(flipped.s_minus, [2.0, 1.0])

    def test_pair_swaps_triangles(self, rng):
        U = np.triu(rng.standard_normal((4, 4)))
        pair = StokesPair(S_plus=U, S_minus=U.T.copy(), sigma=(0, 1, 2, 3))
        flipped = transform_minus(pair)
        np.testing.assert_array_equal(np.triu(flipped.S_minus, 1), 0)
        assert flipped.S_plus[0, 1] == pair.S_minus[3, 2]
        twice = transform_minus(flipped)
        np.testing.assert_array_equal(twice.S_plus, pair.S_plus)

    def test_rejects_other_types(self):
        with pytest.raises(TypeError):
            transform_minus(np.eye(2))
