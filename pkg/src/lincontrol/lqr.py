"""Linear-quadratic optimal control in finite and infinite horizons.

The finite-horizon value matrix P_T(t) solves the backward Riccati
differential equation

    P' + P A + A^T P - P B B^T P + C^T C = 0,   P(T) = P0,

and the optimal feedback is u = -B^T P_T(t) x with adjoint
y(t) = P_T(t) x(t). The infinite-horizon value matrix is obtained as the
horizon limit of P_T(0) and satisfies the algebraic Riccati equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels, reachability
from .errors import (
    ConvergenceError,
    DimensionError,
    DomainError,
    EscapeTimeError,
    FiniteCostViolationError,
    NumericalInconsistencyError,
)
from .kernels import DEFAULT_TOLERANCES, ToleranceConfig
from .stability import STABILITY_MARGIN, spectral_abscissa
from .systems import LtiSystem, LtvSystem, Trajectory, simulate

BLOWUP_NORM = 1e12


@dataclass(frozen=True)
class LqrProblem:
    """System (A, B, C), PSD terminal weight P0, and a horizon.

    The running cost is ||C x||^2 + ||u||^2; the terminal cost is
    <P0 x(T), x(T)>. P0 defaults to zero.
    """

    sys: LtiSystem
    P0: Optional[np.ndarray] = None
    horizon: float = math.inf

    def __post_init__(self):
        n = self.sys.n
        P0 = np.zeros((n, n)) if self.P0 is None else kernels.require_square(self.P0, "P0")
        if P0.shape[0] != n:
            raise DimensionError(f"P0 must be {n} x {n}, got {P0.shape}")
        if not kernels.is_symmetric(P0, 1e-10):
            raise DimensionError("P0 must be symmetric")
        if np.linalg.eigvalsh(P0)[0] < -1e-10 * (1.0 + np.linalg.norm(P0, 2)):
            raise DimensionError("P0 must be positive semidefinite")
        object.__setattr__(self, "P0", 0.5 * (P0 + P0.T))
        if not self.horizon > 0.0:
            raise DomainError("horizon must be positive")


@dataclass(frozen=True)
class RiccatiSolution:
    grid: np.ndarray          # increasing samples on [0, T]
    P_samples: np.ndarray     # (K, n, n), symmetric PSD
    terminal_matches_P0: bool
    max_residual: float
    _dense: kernels.SampledMatrixFunction = None

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    def P_at(self, t: float) -> np.ndarray:
        """Cubic-Hermite dense output between the stored samples."""
        return self._dense(t)


@dataclass(frozen=True)
class LqrRun:
    trajectory: Trajectory    # closed-loop states with control samples
    adjoint: np.ndarray       # y(t_k) = P(t_k) x(t_k)
    cost: float

    @property
    def control(self) -> np.ndarray:
        return self.trajectory.controls


@dataclass(frozen=True)
class AreSolution:
    P: np.ndarray
    residual: float
    closed_loop_abscissa: float
    horizon_used: float


def _rde_rhs(P: np.ndarray, A: np.ndarray, BBt: np.ndarray, CtC: np.ndarray) -> np.ndarray:
    PA = P @ A
    return -(PA + PA.T - P @ BBt @ P + CtC)


def _integrate_rde(A, BBt, CtC, P_terminal, duration, h_target):
    """March the backward equation over `duration`, returning the value at
    the early end. Symmetry is restored after every step.

    The RK4 stages are unrolled: this loop dominates the cost of the
    horizon-doubling limit, and symmetric stage values let A^T P be
    taken as (P A)^T.
    """
    m = max(1, math.ceil(duration / h_target))
    h = -duration / m
    P = P_terminal
    check_every = max(1, m // 64)
    for i in range(m):
        PA = P @ A
        k1 = -(PA + PA.T - P @ BBt @ P + CtC)
        Q = P + (0.5 * h) * k1
        QA = Q @ A
        k2 = -(QA + QA.T - Q @ BBt @ Q + CtC)
        Q = P + (0.5 * h) * k2
        QA = Q @ A
        k3 = -(QA + QA.T - Q @ BBt @ Q + CtC)
        Q = P + h * k3
        QA = Q @ A
        k4 = -(QA + QA.T - Q @ BBt @ Q + CtC)
        P = P + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        P = 0.5 * (P + P.T)
        if i % check_every == 0 and not np.abs(P).max() < BLOWUP_NORM:
            raise EscapeTimeError("Riccati solution blew up during integration")
    return P


def riccati_finite(prob: LqrProblem, cfg: ToleranceConfig = DEFAULT_TOLERANCES,
                   step: Optional[float] = None) -> RiccatiSolution:
    """Backward RK4 sweep of the Riccati equation with dense storage.

    The step defaults to min(cfg.ode_step, T/2000) so the layer near
    t = T stays resolved when P0 = 0 and C is large. Samples are
    symmetrized every step and monitored for positive semidefiniteness;
    the reported max_residual re-evaluates the equation on the stored
    grid with central differences.
    """
    if not math.isfinite(prob.horizon):
        raise DomainError("riccati_finite needs a finite horizon")
    T = prob.horizon
    A, B, C = prob.sys.A, prob.sys.B, prob.sys.C
    BBt = B @ B.T
    CtC = C.T @ C
    h_target = step if step is not None else min(cfg.ode_step, T / 2000.0)
    m = max(2, math.ceil(T / h_target))
    h = T / m
    K = m + 1
    n = prob.sys.n
    P = np.empty((K, n, n))
    P[K - 1] = prob.P0
    cur = prob.P0
    for k in range(K - 1, 0, -1):
        cur = kernels.rk4_step(lambda t, M: _rde_rhs(M, A, BBt, CtC), 0.0, cur, -h)
        cur = 0.5 * (cur + cur.T)
        if not np.all(np.isfinite(cur)) or np.abs(cur).max() > BLOWUP_NORM:
            raise EscapeTimeError(
                f"Riccati solution blew up near t = {(k - 1) * h:.6g}")
        P[k - 1] = cur
    grid = np.linspace(0.0, T, K)

    min_eig = min(float(np.linalg.eigvalsh(Pk)[0]) for Pk in P[:: max(1, K // 256)])
    if min_eig < -1e-9:
        raise NumericalInconsistencyError(
            f"Riccati sample lost positive semidefiniteness (min eig {min_eig:.3e})")

    dP = np.array([_rde_rhs(Pk, A, BBt, CtC) for Pk in P])
    if K > 4:
        # five-point stencil keeps the O(h^4) measurement error below the bound
        fd = (-P[4:] + 8.0 * P[3:-1] - 8.0 * P[1:-3] + P[:-4]) / (12.0 * h)
        max_residual = float(np.max(np.abs(fd - dP[2:-2])))
    elif K > 2:
        fd = (P[2:] - P[:-2]) / (2.0 * h)
        max_residual = float(np.max(np.abs(fd - dP[1:-1])))
    else:
        max_residual = 0.0
    if max_residual > 1e-6:
        raise NumericalInconsistencyError(
            f"Riccati finite-difference residual {max_residual:.3e} exceeds 1e-6")

    dense = kernels.SampledMatrixFunction(0.0, h, P, dP)
    return RiccatiSolution(
        grid=grid,
        P_samples=P,
        terminal_matches_P0=bool(np.array_equal(P[-1], prob.P0)),
        max_residual=max_residual,
        _dense=dense,
    )


def lqr_trajectory(prob: LqrProblem, ric: RiccatiSolution, xi,
                   grid=None, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> LqrRun:
    """Closed-loop run x' = (A - B B^T P(t)) x from xi, with the sampled
    optimal control, the adjoint y = P x, and the achieved cost."""
    xi = kernels.as_vector(xi, "xi")
    A, B = prob.sys.A, prob.sys.B
    T = ric.horizon
    if grid is None:
        grid = ric.grid
    else:
        grid = np.asarray(grid, dtype=float)
        if grid[0] < -1e-12 or grid[-1] > T + 1e-12:
            raise DomainError(
                f"grid [{grid[0]}, {grid[-1]}] does not match the Riccati "
                f"solution on [0, {T}]")
    closed = LtvSystem(
        float(grid[0]), float(grid[-1]),
        lambda t: A - B @ (B.T @ ric.P_at(t)),
        lambda t: B,
    )
    traj = simulate(closed, xi, None, grid, cfg)
    P_on_grid = np.array([ric.P_at(t) for t in grid])
    adjoint = np.einsum("kij,kj->ki", P_on_grid, traj.states)
    controls = -np.einsum("ij,kj->ki", B.T, adjoint)
    full = Trajectory(grid=traj.grid, states=traj.states, controls=controls)
    return LqrRun(trajectory=full, adjoint=adjoint, cost=evaluate_cost(prob, full))


def evaluate_cost(prob: LqrProblem, traj: Trajectory) -> float:
    """Simpson quadrature of ||C x||^2 + ||u||^2 plus the terminal term."""
    if traj.controls is None:
        raise ValueError("trajectory carries no control samples")
    diffs = np.diff(traj.grid)
    h = float(diffs[0])
    if np.max(np.abs(diffs - h)) > 1e-9 * (1.0 + h):
        raise ValueError("cost quadrature expects a uniform grid")
    Cx = traj.states @ prob.sys.C.T
    integrand = np.sum(Cx ** 2, axis=1) + np.sum(traj.controls ** 2, axis=1)
    running = float(kernels.composite_simpson(integrand, h))
    xT = traj.states[-1]
    return running + float(xT @ prob.P0 @ xT)


def check_finite_cost_condition(sys: LtiSystem,
                                cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> None:
    """Stabilizability in PBH form: rank [lam I - A, B] = n on every
    eigenvalue in the closed right half plane. Raises when violated."""
    for lam in kernels.eigenvalues(sys.A):
        if lam.real < -STABILITY_MARGIN:
            continue
        if reachability.hautus_rank_at(sys.A, sys.B, complex(lam), cfg) < sys.n:
            raise FiniteCostViolationError(
                f"unstable mode at {lam:.6g} is unreachable from the input; "
                "the finite cost condition fails", bad_eigenvalue=complex(lam))


def are_solve(sys: LtiSystem, cfg: ToleranceConfig = DEFAULT_TOLERANCES,
              initial_horizon: float = 1.0,
              convergence_tol: Optional[float] = None,
              max_doublings: int = 20) -> AreSolution:
    """Stabilizing solution of A^T P + P A - P B B^T P + C^T C = 0.

    P is the horizon limit of the value matrix: the Riccati equation is
    integrated backward over horizons T, 2T, 4T, ... until
    ||P_{2T}(0) - P_T(0)||_F drops below the convergence tolerance.
    Since the equation is autonomous, each doubling reuses the previous
    value as terminal data, so horizon 2^k T costs one extra sweep of
    length 2^{k-1} T. The terminal weight is the identity, which steers
    the limit to the stabilizing root even when C misses unstable modes.
    """
    check_finite_cost_condition(sys, cfg)
    tol = cfg.residual_tol if convergence_tol is None else convergence_tol
    A, B, C = sys.A, sys.B, sys.C
    BBt = B @ B.T
    CtC = C.T @ C
    n = sys.n

    def leg_step(duration: float) -> float:
        return min(cfg.ode_step, duration / 2000.0)

    T = initial_horizon
    P_prev = _integrate_rde(A, BBt, CtC, np.eye(n), T, leg_step(T))
    converged = False
    diff = math.inf
    for _ in range(max_doublings):
        P_next = _integrate_rde(A, BBt, CtC, P_prev, T, leg_step(T))
        diff = float(np.linalg.norm(P_next - P_prev))
        P_prev = P_next
        T *= 2.0
        if diff <= tol:
            converged = True
            break
    if not converged:
        raise ConvergenceError(
            f"value matrix did not settle within horizon {T:.6g} "
            f"(last doubling moved {diff:.3e}, tolerance {tol:.1e})")
    P = 0.5 * (P_prev + P_prev.T)
    residual = float(np.linalg.norm(A.T @ P + P @ A - P @ BBt @ P + CtC))
    closed = spectral_abscissa(A - BBt @ P)
    if closed >= 0.0:
        raise NumericalInconsistencyError(
            f"limit matrix is not stabilizing (closed-loop abscissa {closed:.6g})")
    return AreSolution(P=P, residual=residual,
                       closed_loop_abscissa=closed, horizon_used=T)
