"""
Tests for the isomonodromy vector field, path integration and the
caterpillar zone seeding/extraction.

Run: pytest scripts/test_flow.py
"""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import hermitian_matrices, regular_points
from isostokes.core.errors import (
    DegenerateU,
    InputError,
    NonPositiveRatio,
    NonzeroDiagonal,
)
from isostokes.core.linalg import TWO_PI_I, herm_eigen, p_flip, random_hermitian, random_straight_path
from isostokes.core.models import RegularPoint, Side
from isostokes.monodromy.flow import (
    ad_u_inverse,
    conjugator_minus,
    conjugator_plus,
    extract,
    extract_minus,
    extract_plus,
    flow_invariants,
    integrate_path,
    iso_vector_field,
    make_path,
    minus_point,
    plus_point,
    reference_path,
    regular_point,
    seed,
    seed_minus,
    seed_minus_direct,
    seed_plus,
)


class TestPoints:

    def test_regular_point_accepts_increasing(self):
        assert regular_point([0.0, 1.0, 3.0]).n == 3

    def test_regular_point_rejects_collision(self):
        with pytest.raises(DegenerateU) as info:
            regular_point([0.0, 1.0, 1.0])
        assert info.value.details["index"] == 1

    def test_regular_point_rejects_decreasing(self):
        with pytest.raises(DegenerateU):
            regular_point([2.0, 1.0])

    def test_zone_points(self):
        np.testing.assert_allclose(plus_point(10.0, 3).u, [10.0, 100.0, 1000.0])
        np.testing.assert_allclose(minus_point(10.0, 3).u, [-1000.0, -100.0, -10.0])

    def test_make_path_dimension_mismatch(self):
        with pytest.raises(InputError):
            make_path([[0.0, 1.0], [0.0, 1.0, 2.0]])

    def test_reference_path_ends_equally_spaced(self):
        path = reference_path(RegularPoint(np.array([0.0, 0.1, 5.0])))
        np.testing.assert_allclose(path.end.u, [0.0, 2.5, 5.0])


class TestVectorField:

    def test_ad_u_inverse_defining_property(self, rng):
        u = np.array([0.0, 1.0, 2.5, 4.0])
        N = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        np.fill_diagonal(N, 0.0)
        M = ad_u_inverse(u, N)
        np.testing.assert_allclose(np.diag(u) @ M - M @ np.diag(u), N, atol=1e-14)

    def test_ad_u_inverse_hand_value(self):
        b = 0.3 - 0.8j
        N = np.array([[0, b], [-np.conj(b), 0]])
        M = ad_u_inverse([0.0, 1.0], N)
        np.testing.assert_allclose(M, [[0, -b], [-np.conj(b), 0]])

    @settings(max_examples=30, deadline=None)
    @given(hermitian_matrices(min_n=2, max_n=5), st.data())
    def test_ad_u_inverse_keeps_hermiticity(self, H, data):
        n = H.shape[0]
        u = data.draw(regular_points(n))
        N = 1j * H
        np.fill_diagonal(N, 0.0)
        M = ad_u_inverse(u, N)
        np.testing.assert_allclose(M, M.conj().T, atol=1e-12)

    def test_ad_u_inverse_rejects_diagonal(self):
        with pytest.raises(NonzeroDiagonal):
            ad_u_inverse([0.0, 1.0], np.eye(2))

    def test_diagonal_phi_has_zero_field(self):
        fields = iso_vector_field(RegularPoint(np.array([0.0, 1.0, 3.0])), np.diag([1.0, -2.0, 0.5]))
        for V in fields:
            np.testing.assert_array_equal(V, np.zeros((3, 3)))

    def test_two_by_two_hand_expansion(self):
        a, d, b = 0.7, -0.4, 0.2 + 0.5j
        u1, u2 = 0.5, 2.0
        phi = np.array([[a, b], [np.conj(b), d]])
        V1, V2 = iso_vector_field(RegularPoint(np.array([u1, u2])), phi)
        expected = (a - d) / (TWO_PI_I * (u1 - u2)) * np.array([[0, b], [-np.conj(b), 0]])
        np.testing.assert_allclose(V1, expected, atol=1e-15)
        np.testing.assert_allclose(V2, -expected, atol=1e-15)

    def test_fields_are_hermitian_and_sum_to_zero(self, rng):
        phi = random_hermitian(rng, 4)
        fields = iso_vector_field(RegularPoint(np.array([-1.0, 0.0, 2.0, 2.5])), phi)
        for V in fields:
            np.testing.assert_allclose(V, V.conj().T, atol=1e-14)
            np.testing.assert_allclose(np.diag(V), 0.0, atol=1e-14)
        np.testing.assert_allclose(sum(fields), 0.0, atol=1e-14)

    def test_homogeneity(self, rng, regular_u3):
        phi = random_hermitian(rng, 3)
        c = 3.7
        base = iso_vector_field(RegularPoint(regular_u3), phi)
        scaled = iso_vector_field(RegularPoint(c * regular_u3), phi)
        for V, W in zip(base, scaled):
            np.testing.assert_allclose(W, V / c, atol=1e-14)


class TestIntegratePath:

    def test_diagonal_is_constant(self):
        phi0 = np.diag([1.0, 0.0, -1.0])
        path = make_path([[0.0, 1.0, 2.0], [0.5, 3.0, 4.0], [-1.0, 0.0, 6.0]])
        traj = integrate_path(phi0, path)
        assert len(traj.samples) == 3
        for sample in traj.samples:
            np.testing.assert_array_equal(sample.phi, phi0)

    def test_reversibility(self, rng):
        phi0 = random_hermitian(rng, 3)
        u0, u1 = random_straight_path(rng, 3, length=1.0)
        path = make_path([u0, u1])
        tol = 1e-10
        forward = integrate_path(phi0, path, tol=tol)
        back = integrate_path(forward.final_phi, path.reversed(), tol=tol)
        assert np.linalg.norm(back.final_phi - phi0) <= 100 * tol * path.length

    def test_invariants_are_conserved(self, rng):
        phi0 = random_hermitian(rng, 3)
        u0, u1 = random_straight_path(rng, 3, length=1.0)
        traj = integrate_path(phi0, make_path([u0, u1]), tol=1e-10, record_steps=True)
        assert len(traj.samples) > 2
        assert traj.spectrum_drift <= 1e-8
        assert traj.diagonal_drift <= 1e-8
        assert traj.hermiticity_defect == 0.0
        assert traj.diagnostics.accepted_steps > 0

    def test_flow_moves_generic_data(self, rng):
        phi0 = random_hermitian(rng, 3)
        traj = integrate_path(phi0, make_path([[0.0, 1.0, 2.0], [0.0, 1.5, 4.0]]))
        assert np.linalg.norm(traj.final_phi - phi0) > 1e-4

    def test_flow_invariants(self, rng):
        phi = random_hermitian(rng, 3)
        inv = flow_invariants(phi)
        np.testing.assert_allclose(inv["spectrum"], np.linalg.eigvalsh(phi), atol=1e-13)
        np.testing.assert_allclose(inv["diagonal"], np.real(np.diag(phi)))


class TestConjugators:

    def test_diagonal_a_commutes(self):
        A = np.diag([0.3, -1.2, 2.0])
        C = conjugator_plus(A, plus_point(50.0, 3))
        np.testing.assert_allclose(C, np.diag(np.diag(C)), atol=1e-15)
        np.testing.assert_allclose(C @ A @ np.linalg.inv(C), A, atol=1e-13)

    def test_scalar(self):
        a, u1 = 0.8, 20.0
        C = conjugator_plus(np.array([[a]]), RegularPoint(np.array([u1])))
        expected = np.exp(np.log(1 / u1) * a / TWO_PI_I)
        assert C[0, 0] == pytest.approx(expected)
        assert abs(C[0, 0]) == pytest.approx(1.0)

    def test_unitary(self, rng):
        A = random_hermitian(rng, 4, 2.0)
        C = conjugator_plus(A, plus_point(100.0, 4))
        assert np.linalg.norm(C.conj().T @ C - np.eye(4)) <= 1e-10

    def test_plus_conjugator_rejects_minus_zone(self, rng):
        with pytest.raises(NonPositiveRatio):
            conjugator_plus(random_hermitian(rng, 2), minus_point(20.0, 2))

    def test_minus_conjugator_unitary(self, rng):
        A = random_hermitian(rng, 3)
        C = conjugator_minus(A, minus_point(100.0, 3))
        assert np.linalg.norm(C.conj().T @ C - np.eye(3)) <= 1e-10


class TestSeeds:

    def test_diagonal_plus_seed(self):
        A = np.diag([1.0, -0.5, 2.0])
        s = seed_plus(A, 100.0)
        assert s.zone is Side.PLUS
        np.testing.assert_allclose(s.phi, A, atol=1e-14)
        np.testing.assert_allclose(s.point.u, [100.0, 1e4, 1e6])

    def test_diagonal_minus_seed(self):
        A = np.diag([1.0, -0.5, 2.0])
        s = seed_minus(A, 100.0)
        assert s.zone is Side.MINUS
        np.testing.assert_allclose(s.phi, A, atol=1e-14)
        np.testing.assert_allclose(s.point.u, [-1e6, -1e4, -100.0])

    def test_plus_seed_preserves_spectrum(self, rng):
        A = random_hermitian(rng, 4, 2.0)
        s = seed_plus(A, 1000.0)
        np.testing.assert_allclose(herm_eigen(s.phi).values, herm_eigen(A).values, atol=1e-12)
        np.testing.assert_allclose(np.diag(s.phi).real, np.diag(A).real, atol=1e-12)

    def test_minus_seed_preserves_spectrum(self, rng):
        A = random_hermitian(rng, 4, 2.0)
        s = seed_minus(A, 1000.0)
        np.testing.assert_allclose(herm_eigen(s.phi).values, herm_eigen(A).values, atol=1e-12)

    def test_minus_seed_matches_direct_product(self, rng):
        A = random_hermitian(rng, 4)
        reduced = seed_minus(A, 1000.0)
        direct = seed_minus_direct(A, 1000.0)
        np.testing.assert_allclose(direct.point.u, reduced.point.u)
        np.testing.assert_allclose(direct.phi, reduced.phi, atol=1e-11)

    def test_rho_floor(self):
        with pytest.raises(InputError):
            seed_plus(np.eye(2), 5.0)

    def test_dispatch(self, hermitian_2x2):
        np.testing.assert_array_equal(seed(hermitian_2x2, 50.0, Side.MINUS).phi, seed_minus(hermitian_2x2, 50.0).phi)


class TestExtraction:

    def test_diagonal(self):
        phi = np.diag([0.5, -1.0, 1.5])
        np.testing.assert_allclose(extract_plus(phi, plus_point(100.0, 3)), phi, atol=1e-15)
        np.testing.assert_allclose(extract_minus(phi, minus_point(100.0, 3)), phi, atol=1e-15)

    def test_plus_round_trip(self, rng):
        A = random_hermitian(rng, 3, 0.5)
        s = seed_plus(A, 1000.0)
        np.testing.assert_allclose(extract_plus(s.phi, s.point), A, atol=1e-8)

    def test_minus_round_trip(self, rng):
        A = random_hermitian(rng, 3, 0.5)
        s = seed_minus(A, 1000.0)
        np.testing.assert_allclose(extract_minus(s.phi, s.point), A, atol=1e-8)

    def test_deterministic(self, rng):
        phi = seed_plus(random_hermitian(rng, 3, 0.5), 1000.0).phi
        point = plus_point(1000.0, 3)
        assert np.array_equal(extract_plus(phi, point), extract_plus(phi, point))

    def test_minus_is_flipped_plus(self, rng):
        point = minus_point(1000.0, 3)
        phi = seed_minus(random_hermitian(rng, 3, 0.5), 1000.0).phi
        expected = p_flip(extract_plus(p_flip(phi), point.flipped()))
        assert np.array_equal(extract_minus(phi, point), expected)
        assert np.array_equal(extract(phi, point, Side.MINUS), expected)

