import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from lincontrol import (
    DimensionError,
    DomainError,
    NumericalError,
    SingularEquationError,
    ToleranceConfig,
    eigenvalues,
    expm,
    numerical_rank,
    resolvent,
    solve_sylvester,
)
from lincontrol.kernels import composite_simpson, rk4_path
from lincontrol.systems import LtvSystem, constant_ltv

import helpers


def small_matrix(max_n=4, scale=2.0):
    return st.integers(1, max_n).flatmap(
        lambda n: st.lists(
            st.floats(-scale, scale, allow_nan=False), min_size=n * n, max_size=n * n
        ).map(lambda vals: np.array(vals).reshape(n, n)))


class TestExpm:
    def test_zero_matrix(self):
        assert_allclose(expm(np.zeros((3, 3))), np.eye(3))

    def test_nilpotent(self):
        assert_allclose(expm([[0.0, 1.0], [0.0, 0.0]]), [[1.0, 1.0], [0.0, 1.0]])

    def test_diagonal(self):
        assert_allclose(expm(np.diag([1.0, 2.0])),
                        np.diag([math.e, math.e ** 2]), rtol=1e-13)

    def test_rejects_nonsquare(self):
        with pytest.raises(DimensionError):
            expm(np.ones((2, 3)))

    @settings(max_examples=30, deadline=None)
    @given(small_matrix())
    def test_inverse_property(self, A):
        norm = np.linalg.norm(A, 2)
        if norm > 5.0:
            A = A * (5.0 / norm)
        n = A.shape[0]
        assert np.abs(expm(A) @ expm(-A) - np.eye(n)).max() < 1e-10

    def test_derivative_matches_generator(self, rng):
        A = rng.uniform(-1.0, 1.0, (4, 4))
        t, h = 0.3, 1e-4
        fd = (expm((t + h) * A) - expm((t - h) * A)) / (2.0 * h)
        assert np.abs(fd - A @ expm(t * A)).max() < 1e-6


class TestEigenvalues:
    def test_diagonal(self):
        assert_allclose(np.sort(eigenvalues(np.diag([-1.0, -2.0])).real), [-2, -1])

    def test_symmetric_involution(self):
        assert_allclose(np.sort(eigenvalues([[0.0, 1.0], [1.0, 0.0]]).real), [-1, 1])

    def test_rotation_generator(self):
        lams = np.sort_complex(eigenvalues([[0.0, 1.0], [-1.0, 0.0]]))
        assert_allclose(lams, [-1j, 1j], atol=1e-14)

    @settings(max_examples=30, deadline=None)
    @given(small_matrix())
    def test_transpose_same_multiset(self, A):
        a = np.sort_complex(eigenvalues(A))
        b = np.sort_complex(eigenvalues(A.T))
        assert np.abs(a - b).max() < 1e-9 * (1.0 + np.abs(a).max())

    def test_conjugate_closure(self, rng):
        A = rng.uniform(-1.0, 1.0, (5, 5))
        lams = eigenvalues(A)
        conj = np.sort_complex(np.conj(lams))
        assert np.abs(np.sort_complex(lams) - conj).max() < 1e-12


class TestNumericalRank:
    def test_identity(self):
        assert numerical_rank(np.eye(3)) == 3

    def test_zero(self):
        assert numerical_rank(np.zeros((2, 2))) == 0

    def test_duplicated_row_direction(self):
        assert numerical_rank([[1.0, 1.0], [0.0, 0.0]]) == 1

    def test_invariance_under_invertible_factors(self, rng):
        for _ in range(25):
            n = int(rng.integers(1, 6))
            k = int(rng.integers(1, 6))
            A = rng.uniform(-1, 1, (n, k))
            r = numerical_rank(A)
            T1 = helpers.well_conditioned_invertible(rng, n)
            T2 = helpers.well_conditioned_invertible(rng, k)
            assert numerical_rank(T1 @ A) == r
            assert numerical_rank(A @ T2) == r


class TestSylvester:
    def test_identity_case(self):
        X = solve_sylvester(-np.eye(2), -np.eye(2), -np.eye(2))
        assert_allclose(X, 0.5 * np.eye(2))

    def test_scalar(self):
        X = solve_sylvester([[1.0]], [[2.0]], [[6.0]])
        assert_allclose(X, [[2.0]])

    def test_residual_bound_random(self, rng):
        cfg = ToleranceConfig()
        for _ in range(10):
            n, k = int(rng.integers(1, 6)), int(rng.integers(1, 6))
            A = helpers.random_stable_matrix(rng, n)
            Bm = helpers.random_stable_matrix(rng, k)
            R = rng.uniform(-1, 1, (n, k))
            X = solve_sylvester(A, Bm, R, cfg)
            res = np.linalg.norm(A @ X + X @ Bm - R)
            assert res <= cfg.residual_tol * (1.0 + np.linalg.norm(R))

    def test_spectra_overlap_raises(self):
        with pytest.raises(SingularEquationError):
            solve_sylvester(np.eye(2), -np.eye(2), np.ones((2, 2)))

    def test_matches_lyapunov_quadrature_oracle(self, rng):
        # A^T X + X A = -R  has  X = int_0^inf e^{tA^T} R e^{tA} dt
        A = helpers.random_stable_matrix(rng, 3)
        R = rng.uniform(-1, 1, (3, 3))
        R = R + R.T + 3.0 * np.eye(3)
        X = solve_sylvester(A.T, A, -R)
        oracle = helpers.lyapunov_by_quadrature(A, R, count=32000)
        assert np.abs(X - oracle).max() < 1e-8


class TestResolvent:
    def test_zero_generator(self):
        sys = constant_ltv(np.zeros((2, 2)), np.zeros((2, 1)), 0.0, 2.0)
        assert_allclose(resolvent(sys, 0.3, 1.7), np.eye(2))
        assert_allclose(resolvent(sys, 1.0, 1.0), np.eye(2))

    def test_constant_matches_expm(self, rng):
        A = rng.uniform(-1, 1, (3, 3))
        sys = constant_ltv(A, np.zeros((3, 1)), 0.0, 2.0)
        R = resolvent(sys, 0.4, 1.6)
        assert np.abs(R - expm(1.2 * A)).max() < 1e-9

    def test_cocycle(self):
        sys = LtvSystem(0.0, 2.0,
                        lambda t: np.array([[0.0, 1.0], [-1.0 - 0.5 * t, -0.1]]),
                        lambda t: np.zeros((2, 1)))
        R20 = resolvent(sys, 0.0, 2.0)
        R21 = resolvent(sys, 1.0, 2.0)
        R10 = resolvent(sys, 0.0, 1.0)
        assert np.abs(R20 - R21 @ R10).max() < 1e-9

    def test_backward_inverts_forward(self):
        sys = LtvSystem(0.0, 1.0,
                        lambda t: np.array([[0.0, t], [-1.0, 0.0]]),
                        lambda t: np.zeros((2, 1)))
        F = resolvent(sys, 0.0, 1.0)
        Binv = resolvent(sys, 1.0, 0.0)
        assert np.abs(F @ Binv - np.eye(2)).max() < 1e-9

    def test_outside_interval_raises(self):
        sys = constant_ltv(np.zeros((1, 1)), np.zeros((1, 1)), 0.0, 1.0)
        with pytest.raises(DomainError):
            resolvent(sys, -0.5, 0.5)


class TestQuadratureAndPaths:
    def test_simpson_exact_on_cubic(self):
        xs = np.linspace(0.0, 1.0, 11)
        vals = xs ** 3
        assert abs(composite_simpson(vals, xs[1] - xs[0]) - 0.25) < 1e-14

    def test_simpson_odd_interval_count(self):
        xs = np.linspace(0.0, 1.0, 10)  # 9 intervals
        vals = xs ** 3
        assert abs(composite_simpson(vals, xs[1] - xs[0]) - 0.25) < 1e-14

    def test_rk4_convergence_order(self):
        f = lambda t, x: -x
        errs = []
        for h in (0.1, 0.05):
            path = rk4_path(f, np.array([1.0]), np.array([0.0, 1.0]), h)
            errs.append(abs(path[-1, 0] - math.exp(-1.0)))
        assert errs[0] / errs[1] > 8.0


class TestToleranceConfig:
    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            ToleranceConfig(rank_rtol=0.0)
        with pytest.raises(ValueError):
            ToleranceConfig(ode_step=-1e-3)
        with pytest.raises(ValueError):
            ToleranceConfig(max_iter=0)

    def test_eigenvalue_error_wrapped(self):
        with pytest.raises((NumericalError, DimensionError)):
            eigenvalues(np.ones((2, 3)))
