"""Shared test utilities: random-system factories and quadrature oracles.

The oracles here deliberately avoid the code paths they check: Lyapunov
solutions are re-derived from the defining improper integral, Gramians
from explicit matrix-exponential quadrature, costs from Simpson sums of
sampled integrands.
"""

import numpy as np
import scipy.linalg

from lincontrol import LtiSystem, kalman_test
from lincontrol.kernels import DEFAULT_TOLERANCES


def random_system(rng, n, p, shift=0.0):
    A = rng.uniform(-1.0, 1.0, (n, n)) - shift * np.eye(n)
    B = rng.uniform(-1.0, 1.0, (n, p))
    return LtiSystem(A, B)


def random_controllable(rng, n, p, shift=0.0):
    while True:
        sys = random_system(rng, n, p, shift)
        if kalman_test(sys).controllable:
            return sys


def random_stable_matrix(rng, n, margin=0.3):
    """Shift a random matrix left until its spectrum clears the margin."""
    A = rng.uniform(-1.0, 1.0, (n, n))
    omega = np.max(np.linalg.eigvals(A).real)
    return A - (omega + margin) * np.eye(n)


def random_observable(rng, n, m):
    while True:
        A = rng.uniform(-1.0, 1.0, (n, n))
        C = rng.uniform(-1.0, 1.0, (m, n))
        if kalman_test(LtiSystem(A.T, C.T)).controllable:
            return A, C


def well_conditioned_invertible(rng, n):
    """Orthogonal factors around singular values in [0.5, 2]."""
    Q1, _ = np.linalg.qr(rng.standard_normal((n, n)))
    Q2, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return Q1 @ np.diag(rng.uniform(0.5, 2.0, n)) @ Q2


def simpson_integral(f, a, b, count):
    """Composite Simpson of a vector/matrix-valued callable, count even."""
    xs = np.linspace(a, b, count + 1)
    vals = np.array([f(x) for x in xs])
    w = np.ones(count + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    h = (b - a) / count
    return np.tensordot(w, vals, axes=(0, 0)) * (h / 3.0)


def _stepped_simpson(make_integrand, generator, horizon, count):
    """Simpson over [0, horizon] with e^{t G} accumulated by products."""
    h = horizon / count
    Eh = scipy.linalg.expm(h * generator)
    E = np.eye(generator.shape[0])
    w = np.ones(count + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    total = np.zeros_like(make_integrand(E))
    for k in range(count + 1):
        total = total + w[k] * make_integrand(E)
        E = E @ Eh
    return total * (h / 3.0)


def lyapunov_by_quadrature(A, R, count=8000):
    """int_0^inf e^{tA^T} R e^{tA} dt for stable A, truncated at 40/|omega|."""
    omega = np.max(np.linalg.eigvals(A).real)
    assert omega < 0
    horizon = min(40.0 / abs(omega), 1e4)
    return _stepped_simpson(lambda E: E.T @ R @ E, A, horizon, count)


def weighted_gramian_by_quadrature(A, B, lam, count=8000):
    """int_0^inf e^{-2 lam t} e^{-tA} B B^T e^{-tA^T} dt, truncated."""
    shifted = -(A + lam * np.eye(A.shape[0]))
    omega = np.max(np.linalg.eigvals(shifted).real)
    assert omega < 0
    horizon = min(40.0 / abs(omega), 1e4)

    def integrand(E):
        F = E @ B
        return F @ F.T

    return _stepped_simpson(integrand, shifted, horizon, count)


def control_quadrature_cost(u_of, t0, t1, count=2000):
    return float(simpson_integral(
        lambda s: np.sum(np.asarray(u_of(s)) ** 2), t0, t1, count))


def grid(t0, t1, points=401):
    return np.linspace(t0, t1, points)


CFG = DEFAULT_TOLERANCES
