"""Dense numerical kernels: matrix exponential, eigenvalues, rank with
tolerance, Sylvester/Lyapunov solves, fixed-step RK4 and resolvent
integration, composite Simpson quadrature, and Hermite dense output.

Everything here is a pure function of its inputs. Matrices are plain
float64 numpy arrays; eigenvalue lists are complex numpy arrays that come
in conjugate pairs when produced from a real matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, TYPE_CHECKING

import numpy as np
import scipy.linalg

from .errors import (
    DimensionError,
    DomainError,
    NumericalError,
    SingularEquationError,
)

if TYPE_CHECKING:  # pragma: no cover
    from .systems import LtvSystem


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical knobs shared across the library.

    rank_rtol        relative singular-value cutoff factor for rank decisions
    residual_tol     acceptance bound for linear matrix-equation residuals
    ode_step         default integrator / quadrature step, in time units
    fixed_point_tol  terminal-error target of the nonlinear steering iteration
    max_iter         cap on fixed-point iterations
    """

    rank_rtol: float = 1e-10
    residual_tol: float = 1e-10
    ode_step: float = 1e-3
    fixed_point_tol: float = 1e-9
    max_iter: int = 50

    def __post_init__(self):
        for name in ("rank_rtol", "residual_tol", "ode_step", "fixed_point_tol"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


DEFAULT_TOLERANCES = ToleranceConfig()


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float64 array and reject non-finite entries."""
    A = np.atleast_2d(np.asarray(M, dtype=float))
    if A.ndim != 2:
        raise DimensionError(f"{name} must be two-dimensional, got ndim={A.ndim}")
    if A.size and not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return A


def as_vector(v, name: str = "vector") -> np.ndarray:
    x = np.asarray(v, dtype=float).reshape(-1)
    if x.size and not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return x


def require_square(A: np.ndarray, name: str = "matrix") -> np.ndarray:
    A = as_matrix(A, name)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    return A


def is_symmetric(M: np.ndarray, tol: float = 1e-10) -> bool:
    return bool(np.all(np.abs(M - M.T) <= tol * (1.0 + np.abs(M).max(initial=0.0))))


def expm(A) -> np.ndarray:
    """Matrix exponential e@A by scaling-and-squaring with a Pade approximant.

    Delegates to the vetted scipy implementation (order-13 rational
    approximant), which meets the 1e-12 relative-accuracy contract for
    norms up to ~10.
    """
    A = require_square(A, "A")
    return scipy.linalg.expm(A)


def eigenvalues(A) -> np.ndarray:
    """All eigenvalues of a real square matrix, with multiplicity.

    Hessenberg reduction plus shifted QR via LAPACK. Conjugate pairs are
    exact for real input.
    """
    A = require_square(A, "A")
    try:
        return np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration failed: {exc}") from exc


def spectra_separation(A: np.ndarray, B: np.ndarray) -> float:
    """min |lambda_i(A) + mu_j(B)|, the singularity margin of AX + XB = R."""
    la = eigenvalues(A)
    lb = eigenvalues(B)
    return float(np.abs(la[:, None] + lb[None, :]).min())


def numerical_rank(A, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> int:
    """Count singular values above rank_rtol * max(rows, cols) * sigma_max."""
    A = as_matrix(A, "A")
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    cutoff = cfg.rank_rtol * max(A.shape) * s[0]
    return int(np.count_nonzero(s > cutoff))


def solve_sylvester(A, Bm, R, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
    """Solve A X + X Bm = R by vectorizing into an (n k) x (n k) system.

    Parameters
    ----------
    A : (n, n) array
    Bm : (k, k) array
    R : (n, k) array

    The Lyapunov equation A^T Q + Q A = -R is the (A^T, A, -R) special
    case. A unique solution exists iff the spectra of A and -Bm are
    disjoint; the separation is checked before solving and the residual
    after, so every successful return satisfies
    ||A X + X Bm - R||_F <= residual_tol * (1 + ||R||_F).
    """
    A = require_square(A, "A")
    Bm = require_square(Bm, "Bm")
    R = as_matrix(R, "R")
    n, k = A.shape[0], Bm.shape[0]
    if R.shape != (n, k):
        raise DimensionError(f"R must have shape {(n, k)}, got {R.shape}")
    sep = spectra_separation(A, Bm)
    if sep <= cfg.residual_tol:
        raise SingularEquationError(
            f"spectra of A and -Bm are not disjoint (separation {sep:.3e}); "
            "the equation has no unique solution"
        )
    # vec is column-stacking: vec(AX) = (I (x) A) vec(X), vec(XB) = (B^T (x) I) vec(X)
    K = np.kron(np.eye(k), A) + np.kron(Bm.T, np.eye(n))
    x = np.linalg.solve(K, R.flatten(order="F"))
    X = x.reshape((n, k), order="F")
    residual = np.linalg.norm(A @ X + X @ Bm - R)
    bound = cfg.residual_tol * (1.0 + np.linalg.norm(R))
    if residual > bound:
        raise NumericalError(
            f"Sylvester residual {residual:.3e} exceeds bound {bound:.3e}"
        )
    return X


def rk4_step(f: Callable, t: float, x: np.ndarray, h: float) -> np.ndarray:
    """One classical Runge-Kutta step for x' = f(t, x); x may be any array."""
    k1 = f(t, x)
    k2 = f(t + 0.5 * h, x + (0.5 * h) * k1)
    k3 = f(t + 0.5 * h, x + (0.5 * h) * k2)
    k4 = f(t + h, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_path(f: Callable, x0: np.ndarray, grid: np.ndarray, max_step: float) -> np.ndarray:
    """Integrate x' = f(t, x) through every grid point with RK4 substeps.

    Each grid gap is split uniformly into substeps no longer than
    max_step. Returns the states stacked along axis 0, one per grid
    point, with the initial state stored exactly.
    """
    grid = np.asarray(grid, dtype=float)
    out = np.empty((grid.size,) + np.shape(x0), dtype=float)
    x = np.array(x0, dtype=float)
    out[0] = x
    for i in range(grid.size - 1):
        ta, tb = grid[i], grid[i + 1]
        m = max(1, math.ceil(abs(tb - ta) / max_step))
        h = (tb - ta) / m
        t = ta
        for _ in range(m):
            x = rk4_step(f, t, x, h)
            t += h
        out[i + 1] = x
    return out


def resolvent(sys: "LtvSystem", s: float, t: float,
              cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
    """State-transition matrix R(t, s) of x' = A(tau) x.

    Solves the matrix ODE d/dt R(t, s) = A(t) R(t, s), R(s, s) = I with
    fixed-step RK4 (step <= cfg.ode_step). Works in both time directions.
    """
    lo, hi = sys.t0, sys.t1
    slack = 1e-9 * (1.0 + abs(hi - lo))
    for tau, label in ((s, "s"), (t, "t")):
        if tau < lo - slack or tau > hi + slack:
            raise DomainError(f"{label}={tau} outside system interval [{lo}, {hi}]")
    n = sys.n
    if t == s:
        return np.eye(n)
    path = rk4_path(lambda tau, M: sys.A_of(tau) @ M, np.eye(n),
                    np.array([s, t]), cfg.ode_step)
    return path[-1]


def simpson_intervals(span: float, max_step: float) -> int:
    """Even interval count with spacing at most max_step."""
    m = max(2, math.ceil(span / max_step))
    return m + (m % 2)


def simpson_weights(count: int) -> np.ndarray:
    """Composite Simpson weights for count+1 nodes (count even), without h/3."""
    if count % 2 != 0 or count < 2:
        raise ValueError("Simpson rule needs an even, positive interval count")
    w = np.ones(count + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w


def composite_simpson(values: np.ndarray, h: float) -> np.ndarray:
    """Composite Simpson quadrature of uniformly sampled values.

    values has the node axis first. An odd interval count is handled by
    Simpson on the leading even part plus the 3/8 rule on the last three
    intervals, so any uniform grid with >= 3 nodes integrates at fourth
    order.
    """
    values = np.asarray(values, dtype=float)
    K = values.shape[0]
    if K < 2:
        return np.zeros(values.shape[1:])
    if K == 2:
        return 0.5 * h * (values[0] + values[1])
    m = K - 1
    if m % 2 == 0:
        w = simpson_weights(m) * (h / 3.0)
    else:
        w = np.zeros(K)
        if m >= 5:
            w[: m - 3 + 1] += simpson_weights(m - 3) * (h / 3.0)
        else:  # m == 3: pure 3/8 rule
            pass
        w[m - 3:] += np.array([1.0, 3.0, 3.0, 1.0]) * (3.0 * h / 8.0)
    return np.tensordot(w, values, axes=(0, 0))


@dataclass(frozen=True)
class SampledMatrixFunction:
    """Cubic-Hermite dense output over uniform samples of a smooth function.

    values[k] and derivs[k] are the function and its time derivative at
    t0 + k h; the interpolation error is O(h^4), matching the RK4 paths
    the samples come from. Values may have any trailing shape.
    """

    t0: float
    h: float
    values: np.ndarray
    derivs: np.ndarray

    def __call__(self, t: float) -> np.ndarray:
        K = self.values.shape[0] - 1
        u = (t - self.t0) / self.h
        k = int(min(max(math.floor(u), 0), K - 1))
        th = u - k
        th2 = th * th
        th3 = th2 * th
        h00 = 2.0 * th3 - 3.0 * th2 + 1.0
        h10 = th3 - 2.0 * th2 + th
        h01 = -2.0 * th3 + 3.0 * th2
        h11 = th3 - th2
        return (h00 * self.values[k] + h01 * self.values[k + 1]
                + self.h * (h10 * self.derivs[k] + h11 * self.derivs[k + 1]))


def sign_normalize_columns(U: np.ndarray) -> np.ndarray:
    """Flip column signs so the largest-magnitude entry of each is positive."""
    U = U.copy()
    for j in range(U.shape[1]):
        i = int(np.argmax(np.abs(U[:, j])))
        if U[i, j] < 0:
            U[:, j] = -U[:, j]
    return U
