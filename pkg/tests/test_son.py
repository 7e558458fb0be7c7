import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import geodesic, random_deformation, random_rotation
from cosserat_critic.energy import UNIT, MaterialParams, energy, energy_gradient
from cosserat_critic.matlin import fro, polar_decompose, symmetric_sqrt
from cosserat_critic.son import (
    classify,
    critical_from_square_root,
    embedded_gradient,
    energy_embedded_gradient,
    grioli_is_critical,
    is_critical,
    is_tangent,
    restricted_hessian,
    sigma_matrix,
    skew_basis,
    tangent_basis,
)


def rot2(a):
    return np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])


class TestSigmaAndGradient:
    def test_sigma_examples(self):
        assert np.array_equal(sigma_matrix(np.eye(3), -np.eye(3)), -np.eye(3))
        assert np.array_equal(sigma_matrix(np.eye(3), np.zeros((3, 3))), np.zeros((3, 3)))
        assert np.array_equal(sigma_matrix(np.eye(2), [[0, 1], [0, 0]]), [[0, 0.5], [0.5, 0]])

    def test_identity_is_critical_for_unit_F(self):
        assert np.array_equal(embedded_gradient(np.eye(3), -np.eye(3)), np.zeros((3, 3)))
        R = random_rotation(np.random.default_rng(0), 4)
        assert np.array_equal(embedded_gradient(R, np.zeros((4, 4))), np.zeros((4, 4)))

    @given(st.integers(2, 8), st.integers(0, 2**32 - 1))
    def test_tangency_and_projection(self, n, seed):
        rng = np.random.default_rng(seed)
        R = random_rotation(rng, n)
        G = rng.standard_normal((n, n))
        dG = embedded_gradient(R, G)
        assert fro(R.T @ dG + dG.T @ R) <= 1e-9
        for A in skew_basis(n):
            U = R @ A
            assert float(np.sum(dG * U)) == pytest.approx(float(np.sum(G * U)), abs=1e-9)

    def test_stable_formula_matches_definition(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 7))
            R, F = random_rotation(rng, n), random_deformation(rng, n)
            p = MaterialParams(rng.uniform(0.1, 3), rng.uniform(0, 3))
            ref = embedded_gradient(R, energy_gradient(R, F, p))
            assert fro(energy_embedded_gradient(R, F, p) - ref) <= 1e-12 * (1 + fro(ref))


class TestCriticality:
    def test_identity_always_critical_for_diagonal(self):
        for p in (UNIT, MaterialParams(2, 0.5), MaterialParams(1, 3)):
            assert is_critical(np.eye(2), np.diag([2.0, 1.0]), p).critical

    def test_r3_plus(self):
        R3 = np.array([[2 / 3, -math.sqrt(5) / 3], [math.sqrt(5) / 3, 2 / 3]])
        assert is_critical(R3, np.diag([2.0, 1.0]), UNIT).critical

    def test_non_critical(self):
        chk = is_critical(rot2(0.3), np.diag([2.0, 1.0]), UNIT)
        assert not chk.critical and chk.residual > 0.1

    def test_grioli(self):
        F = np.array([[2.0, 0.3], [0.3, 1.0]])
        assert grioli_is_critical(np.eye(2), F).critical
        rng = np.random.default_rng(5)
        G = random_deformation(rng, 3)
        assert grioli_is_critical(polar_decompose(G)[0], G).critical
        assert not grioli_is_critical(rot2(math.pi / 2), np.diag([2.0, 1.0])).critical

    def test_polar_rotation_is_critical(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 9))
            F = random_deformation(rng, n)
            p = MaterialParams(rng.uniform(0.1, 3), rng.uniform(0, 3))
            assert is_critical(polar_decompose(F)[0], F, p).critical

    def test_gradient_residual_equivalence(self, rng):
        # near catalog points and far from them
        D = np.diag([2.0, 1.0])
        R3 = np.array([[2 / 3, -math.sqrt(5) / 3], [math.sqrt(5) / 3, 2 / 3]])
        for eps in (0.0, 1e-13, 1e-6, 0.3):
            R = R3 @ rot2(eps)
            g = fro(energy_embedded_gradient(R, D, UNIT))
            res = is_critical(R, D, UNIT).residual
            assert (g <= 1e-9) == (res <= 1e-8)
        for _ in range(50):
            R = random_rotation(rng, 3)
            F = random_deformation(rng, 3)
            assert fro(energy_embedded_gradient(R, F, UNIT)) > 1e-9
            assert is_critical(R, F, UNIT).residual > 1e-8


class TestSquareRoot:
    def test_symmetric_root_gives_polar(self, rng):
        F = random_deformation(rng, 3)
        X = symmetric_sqrt(F @ F.T)
        chk = critical_from_square_root(X, F, MaterialParams(2, 0.5))
        assert chk.critical
        assert np.allclose(chk.rotation, polar_decompose(F)[0], atol=1e-12)

    def test_sign_flipped_root(self):
        D = np.diag([4.0, 2.0, 1.0])
        chk = critical_from_square_root(np.diag([-4.0, -2.0, 1.0]), D, UNIT)
        assert chk.critical
        assert np.allclose(chk.rotation, np.diag([-1.0, -1.0, 1.0]), atol=1e-15)

    def test_not_a_root(self):
        chk = critical_from_square_root(np.eye(3), np.diag([4.0, 2.0, 1.0]), UNIT)
        assert not chk.critical and chk.rotation is None and chk.root_residual > 0.1


class TestTangentBasis:
    def test_n2_identity(self):
        b = tangent_basis(np.eye(2))
        assert len(b) == 1
        assert np.allclose(b.directions[0], np.array([[0, 1], [-1, 0]]) / math.sqrt(2))

    def test_n3_identity(self):
        b = tangent_basis(np.eye(3))
        assert len(b) == 3 and b.pairs == ((0, 1), (0, 2), (1, 2))

    @given(st.integers(2, 8), st.integers(0, 2**32 - 1))
    def test_orthonormal_and_tangent(self, n, seed):
        R = random_rotation(np.random.default_rng(seed), n)
        b = tangent_basis(R)
        d = n * (n - 1) // 2
        gram = np.array([[np.sum(U * V) for V in b.directions] for U in b.directions])
        assert len(b) == d
        assert np.allclose(gram, np.eye(d), atol=1e-12)
        assert all(is_tangent(R, U) for U in b.directions)


class TestRestrictedHessian:
    def test_n2_identity_formula(self):
        # W(theta) along R = rot(theta); the orthonormal coordinate is sqrt(2) theta,
        # so the Hessian is W''(0) / 2 = (l1 + l2)(2 - (l1 + l2)) / 2
        for l1, l2 in [(2.0, 1.0), (0.6, 0.6), (0.7, 0.2)]:
            h = restricted_hessian(np.eye(2), np.diag([l1, l2]), UNIT)
            assert h.spectrum[0] == pytest.approx((l1 + l2) * (2 - (l1 + l2)) / 2, abs=1e-13)

    def test_minus_identity_is_max(self):
        h = restricted_hessian(-np.eye(2), np.diag([2.0, 1.0]), UNIT)
        assert h.spectrum[0] == pytest.approx(-7.5, abs=1e-13)
        assert classify(h.spectrum) == "max"

    def test_symmetric_and_independent_entries(self, rng):
        R, F = random_rotation(rng, 4), random_deformation(rng, 4)
        p = MaterialParams(1.5, 0.3)
        h = restricted_hessian(R, F, p)
        assert np.array_equal(h.matrix, h.matrix.T)
        # recompute lower entries independently
        from cosserat_critic.energy import ambient_hessian_form

        Sigma = sigma_matrix(R, energy_gradient(R, F, p))
        dirs = h.basis.directions
        for j, k in itertools.combinations(range(len(dirs)), 2):
            U, V = dirs[k], dirs[j]
            hkj = ambient_hessian_form(R, F, p, U, V) - float(np.trace(U @ Sigma @ V.T))
            assert hkj == pytest.approx(h.matrix[j, k], abs=1e-12)

    def test_spectrum_increasing(self, rng):
        h = restricted_hessian(random_rotation(rng, 5), random_deformation(rng, 5), UNIT)
        assert np.all(np.diff(h.spectrum) >= 0)

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_geodesic_second_differences(self, rng, n):
        h_step = 1e-3
        for _ in range(10):
            R, F = random_rotation(rng, n), random_deformation(rng, n)
            p = MaterialParams(rng.uniform(0.1, 3), rng.uniform(0, 3))
            H = restricted_hessian(R, F, p)
            A = [R.T @ U for U in H.basis.directions]
            f = lambda B, t: energy(geodesic(R, B, t), F, p)
            d = len(A)
            fd = np.empty((d, d))
            for j in range(d):
                for k in range(d):
                    B, C = A[j] + A[k], A[j] - A[k]
                    fd[j, k] = (f(B, h_step) + f(B, -h_step) - f(C, h_step) - f(C, -h_step)) / (4 * h_step**2)
            assert fro(H.matrix - fd) <= 1e-5 * max(1.0, fro(H.matrix))


class TestClassify:
    def test_examples(self):
        assert classify([3.2, 5.1, 0.4]) == "min"
        assert classify([-1, 2, 5]) == "saddle"
        assert classify([0, -8, -3], 1e-7) == "degenerate"
        assert classify([-1, -2]) == "max"

    def test_default_tolerance_is_relative(self):
        # zero_tol = 1e-7 (1 + max|ev|) = 1.0001e-4 here
        assert classify([2e-4, 1e3]) == "min"
        assert classify([5e-5, 1e3]) == "degenerate"
        assert classify([5e-5, 1.0]) == "min"


def test_multiplier_term_convention(rng):
    """The Sigma term acts as tr(U Sigma U^T); the left-acting tr(U^T Sigma U) misses the oracle."""
    from cosserat_critic.energy import ambient_hessian_form

    R, F = random_rotation(rng, 3), random_deformation(rng, 3)
    p = MaterialParams(1.0, 0.2)
    Sigma = sigma_matrix(R, energy_gradient(R, F, p))
    A = np.array([[0, 1.0, 0], [-1.0, 0, 0.5], [0, -0.5, 0]])
    U = R @ A
    h = 1e-3
    fd = (energy(geodesic(R, A, h), F, p) - 2 * energy(R, F, p) + energy(geodesic(R, A, -h), F, p)) / h**2
    amb = ambient_hessian_form(R, F, p, U, U)
    right = amb - float(np.trace(U @ Sigma @ U.T))
    left = amb - float(np.trace(U.T @ Sigma @ U))
    assert right == pytest.approx(fd, rel=1e-5)
    assert abs(left - fd) > 1e-3 * abs(fd)
