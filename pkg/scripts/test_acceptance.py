"""
Acceptance suite: oracle and property checks at desk scale.

Slow; deselect with -m "not slow".

Run: pytest scripts/test_acceptance.py -m slow
"""
import cmath
import math

import numpy as np
import pytest

from conftest import relative_error
from isostokes.core.linalg import p_flip, random_hermitian, random_regular_point, random_straight_path
from isostokes.core.models import PrefactorConvention, StokesOptions
from isostokes.core.special import branched_log, log_gamma
from isostokes.monodromy.connection import (
    compare_closed_form,
    connect_via_flow,
    connect_via_stokes,
    seeded_stokes,
    stokes_of_solution,
    verify_connection,
)
from isostokes.monodromy.flow import integrate_path, make_path
from isostokes.monodromy.stokes_closed import closed_subdiagonals, genericity_check, gt_pattern
from isostokes.monodromy.stokes_numeric import linear_system, stokes_numeric

pytestmark = pytest.mark.slow


def generic_hermitian(rng, n, norm):
    """Random Hermitian draw whose GT pattern is non-degenerate."""
    while True:
        A = random_hermitian(rng, n, norm)
        if genericity_check(gt_pattern(A), 1e-3) is None:
            return A


class TestNumericStokes:

    def test_diagonal_oracle(self, rng):
        for _ in range(50):
            n = int(rng.integers(1, 6))
            lam = rng.uniform(-2.0, 2.0, size=n)
            pair = stokes_numeric(linear_system(random_regular_point(rng, n), np.diag(lam)))
            expected = np.diag(np.exp(lam / 2))
            assert relative_error(pair.S_plus, expected) <= 1e-8
            assert relative_error(pair.S_minus, expected) <= 1e-8

    def test_dagger_and_triangularity(self, rng):
        opts = StokesOptions(use_dagger=False)
        for _ in range(50):
            n = int(rng.integers(2, 5))
            A = random_hermitian(rng, n, rng.uniform(0.1, 2.0))
            pair = stokes_numeric(linear_system(random_regular_point(rng, n), A), opts)
            assert pair.triangularity_defect <= 1e-8
            assert np.linalg.norm(pair.S_minus - pair.S_plus.conj().T) <= 1e-6

    def test_p_flip_identity(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 5))
            A = random_hermitian(rng, n, 1.0)
            u = random_regular_point(rng, n)
            pair = stokes_numeric(linear_system(u, A))
            mirrored = stokes_numeric(linear_system(-u[::-1], p_flip(A)))
            np.testing.assert_allclose(pair.S_plus, p_flip(mirrored.S_minus), atol=1e-6)
            np.testing.assert_allclose(pair.S_minus, p_flip(mirrored.S_plus), atol=1e-6)


class TestClosedFormAgainstNumerics:

    @pytest.mark.parametrize("n", [2, 3])
    def test_error_decreases_in_rho(self, rng, n):
        A = generic_hermitian(rng, n, 0.5)
        errors = [compare_closed_form(A, seeded_stokes(A, rho)) for rho in (1e2, 1e3, 1e4)]
        assert errors[1] <= 1e-2
        assert errors[1] < errors[0]
        assert errors[2] <= errors[1] + 1e-7


class TestIsomonodromy:

    @pytest.fixture
    def trajectory(self, rng):
        phi0 = random_hermitian(rng, 3, 2.0)
        u0, u1 = random_straight_path(rng, 3, length=1.0)
        path = make_path([u0, (u0 + u1) / 2, u1])
        return integrate_path(phi0, path, tol=1e-10)

    def test_stokes_data_are_constant(self, trajectory):
        pairs = [stokes_of_solution(s.phi, s.point) for s in trajectory.samples]
        assert len(pairs) == 3
        for pair in pairs[1:]:
            assert relative_error(pair.S_plus, pairs[0].S_plus) <= 1e-6

    def test_conservation_laws(self, trajectory):
        assert trajectory.hermiticity_defect <= 1e-8
        assert trajectory.spectrum_drift <= 1e-8
        assert trajectory.diagonal_drift <= 1e-8


class TestConnection:

    def test_round_trip_residual(self, rng):
        for _ in range(5):
            A = random_hermitian(rng, 3, 1.0)
            coarse = verify_connection(A, connect_via_flow(A, 1e3), 1e3)
            fine = verify_connection(A, connect_via_flow(A, 1e4), 1e4)
            assert coarse.relative_residual <= 1e-2
            assert fine.relative_residual <= coarse.relative_residual + 1e-8

    def test_perturbation_is_detected(self, rng):
        A = random_hermitian(rng, 2, 0.5)
        B = connect_via_flow(A, 1e4)
        base = verify_connection(A, B, 1e4)
        perturbed = B.copy()
        perturbed[0, 1] += 0.1
        perturbed[1, 0] += 0.1
        assert verify_connection(A, perturbed, 1e4).residual >= 10 * base.residual

    def test_dual_route_agreement(self, rng):
        rho = 1e4
        A = random_hermitian(rng, 2, 0.5)
        B = connect_via_flow(A, rho)
        report = verify_connection(A, B, rho)
        result = connect_via_stokes(A, B, rho)
        assert result.residual <= report.residual
        assert np.linalg.norm(result.A_minus_inf - B) <= 1e-4


class TestGTStructure:

    def test_interlacing_and_telescoping(self, rng):
        for _ in range(1000):
            n = int(rng.integers(1, 7))
            A = random_hermitian(rng, n, rng.uniform(0.1, 5.0))
            pat = gt_pattern(A)
            for k in range(1, n):
                upper, lower = pat.level(k + 1), pat.level(k)
                assert np.all(upper[:-1] <= lower + 1e-10)
                assert np.all(lower <= upper[1:] + 1e-10)
            for k in range(1, n + 1):
                assert abs(pat.level(k).sum() - np.trace(A[:k, :k]).real) <= 1e-10

    def test_shift_invariance(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 6))
            A = generic_hermitian(rng, n, 1.0)
            c = rng.uniform(-2.0, 2.0)
            base = closed_subdiagonals(A, PrefactorConvention.PRINTED).s_plus
            shifted = closed_subdiagonals(A + c * np.eye(n), PrefactorConvention.PRINTED).s_plus
            assert relative_error(shifted, base) <= 1e-10


class TestSpecialFunctions:

    def test_gamma_values(self):
        assert abs(log_gamma(1.0)) <= 1e-12
        assert abs(cmath.exp(log_gamma(0.5)) - math.sqrt(math.pi)) <= 1e-12 * math.sqrt(math.pi)

    def test_recurrence_and_critical_line(self):
        z = 1.7 + 0.9j
        assert abs(cmath.exp(log_gamma(z + 1) - log_gamma(z)) - z) <= 1e-12 * abs(z)
        for t in (0.5, 2.0, 4.0):
            modulus_sq = math.exp(2 * log_gamma(1 + 1j * t).real)
            assert modulus_sq == pytest.approx(math.pi * t / math.sinh(math.pi * t), rel=1e-12)

    def test_branched_log_boundary(self):
        assert branched_log(-1.0) == -1j * math.pi
