"""Local steering of nonlinear systems through the linear test.

A C^1 system x' = f(x, u) linearized along a reference trajectory gives
A(t) = f_x(xbar, ubar), B(t) = f_u(xbar, ubar). When that linear
time-varying system is controllable, nearby endpoints are reached by the
fixed-point iteration

    phi  <-  phi - H(phi) + x1,

where H(phi) is the terminal state of the nonlinear flow driven by
ubar + du(phi) and du is the Gramian-inverse steering control of the
linearization. The map contracts on a small ball around x1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels, reachability
from .errors import (
    DimensionError,
    DivergenceError,
    LinearTestInapplicableError,
    TrustRegionError,
)
from .kernels import DEFAULT_TOLERANCES, ToleranceConfig
from .systems import ControlSignal, LtvSystem, Trajectory

FD_STEP = 1e-6  # relative central-difference step for absent partials


@dataclass(frozen=True)
class VectorField:
    """f: R^n x R^p -> R^n with optional analytic partials.

    Missing f_x or f_u fall back to central finite differences with a
    relative step, accurate enough for every tolerance used here.
    """

    state_dim: int
    control_dim: int
    f: Callable[[np.ndarray, np.ndarray], np.ndarray]
    fx: Optional[Callable] = None
    fu: Optional[Callable] = None

    def __call__(self, x, u) -> np.ndarray:
        out = np.asarray(self.f(np.asarray(x, float), np.asarray(u, float)), float)
        if out.shape != (self.state_dim,):
            raise DimensionError(
                f"f must return a vector of length {self.state_dim}")
        return out

    def jacobian_x(self, x, u) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        if self.fx is not None:
            return np.asarray(self.fx(x, u), dtype=float)
        return _central_jacobian(lambda xv: self(xv, u), x, self.state_dim)

    def jacobian_u(self, x, u) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        if self.fu is not None:
            return np.asarray(self.fu(x, u), dtype=float)
        return _central_jacobian(lambda uv: self(x, uv), u, self.state_dim)


def _central_jacobian(g: Callable, z: np.ndarray, rows: int) -> np.ndarray:
    J = np.empty((rows, z.size))
    for i in range(z.size):
        h = FD_STEP * (1.0 + abs(z[i]))
        zp = z.copy()
        zm = z.copy()
        zp[i] += h
        zm[i] -= h
        J[:, i] = (g(zp) - g(zm)) / (2.0 * h)
    return J


@dataclass(frozen=True)
class ReferenceTrajectory:
    """A C^1 trajectory (xbar, ubar) of a vector field on [t0, t1].

    Construction verifies xbar' = f(xbar, ubar) on an interior grid, the
    derivative taken by central differences of the callable.
    """

    vf: VectorField
    t0: float
    t1: float
    xbar: Callable[[float], np.ndarray]
    ubar: Callable[[float], np.ndarray]

    def __post_init__(self):
        if not self.t0 < self.t1:
            raise ValueError("need t0 < t1")
        span = self.t1 - self.t0
        hd = 1e-5 * span
        worst = 0.0
        for t in np.linspace(self.t0 + 2 * hd, self.t1 - 2 * hd, 17):
            xdot = (np.asarray(self.xbar(t + hd), float)
                    - np.asarray(self.xbar(t - hd), float)) / (2.0 * hd)
            worst = max(worst, float(np.linalg.norm(
                xdot - self.vf(self.xbar(t), self.ubar(t)))))
        if worst > 1e-6:
            raise ValueError(
                f"reference does not solve the dynamics (residual {worst:.3e})")


def equilibrium_reference(vf: VectorField, x_eq, u_eq, t0: float, t1: float,
                          tol: float = 1e-9) -> ReferenceTrajectory:
    """Constant reference at an equilibrium, after checking f(x_e, u_e) = 0."""
    x_eq = kernels.as_vector(x_eq, "x_eq")
    u_eq = np.atleast_1d(np.asarray(u_eq, dtype=float))
    drift = float(np.linalg.norm(vf(x_eq, u_eq)))
    if drift > tol:
        raise ValueError(f"(x_eq, u_eq) is not an equilibrium: |f| = {drift:.3e}")
    return ReferenceTrajectory(vf, t0, t1, lambda t: x_eq, lambda t: u_eq)


@dataclass(frozen=True)
class SteeringResult:
    trajectory: Trajectory
    control: ControlSignal
    iterations: int
    terminal_error: float
    converged: bool
    error_history: tuple


def linearize_along(vf: VectorField, ref: ReferenceTrajectory) -> LtvSystem:
    """Time-varying linearization A(t), B(t) along the reference."""
    return LtvSystem(
        ref.t0, ref.t1,
        lambda t: vf.jacobian_x(ref.xbar(t), ref.ubar(t)),
        lambda t: vf.jacobian_u(ref.xbar(t), ref.ubar(t)),
    )


def integrate_field(vf: VectorField, x0, u: ControlSignal, grid,
                    cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> Trajectory:
    """RK4 flow of x' = f(x, u(t)) through the grid points."""
    x0 = kernels.as_vector(x0, "x0")
    states = kernels.rk4_path(
        lambda t, x: vf(x, u.u_of(t)), x0, np.asarray(grid, float), cfg.ode_step)
    controls = np.array([np.atleast_1d(np.asarray(u.u_of(t), float)) for t in grid])
    return Trajectory(grid=np.asarray(grid, float), states=states, controls=controls)


def steer_nonlinear(vf: VectorField, ref: ReferenceTrajectory, x0, x1,
                    cfg: ToleranceConfig = DEFAULT_TOLERANCES,
                    delta: float = 0.1) -> SteeringResult:
    """Steer x0 at t0 to x1 at t1 along the reference.

    Both endpoints must lie within `delta` of the reference endpoints.
    Each pass recomputes the linear steering control for the current
    target iterate phi, flows the nonlinear system, and updates
    phi <- phi - H(phi) + x1. Divergence is declared when the iterate
    leaves the ball of radius 10 delta around x1.
    """
    x0 = kernels.as_vector(x0, "x0")
    x1 = kernels.as_vector(x1, "x1")
    t0, t1 = ref.t0, ref.t1
    xbar0 = np.asarray(ref.xbar(t0), dtype=float)
    xbar1 = np.asarray(ref.xbar(t1), dtype=float)
    dx0 = x0 - xbar0
    if np.linalg.norm(dx0) > delta:
        raise TrustRegionError(
            f"x0 is {np.linalg.norm(dx0):.3g} from the reference start, "
            f"beyond the trust radius {delta}")
    if np.linalg.norm(x1 - xbar1) > delta:
        raise TrustRegionError(
            f"x1 is {np.linalg.norm(x1 - xbar1):.3g} from the reference end, "
            f"beyond the trust radius {delta}")

    ltv = linearize_along(vf, ref)
    nodes, E, dE, B_at = reachability._transition_samples(ltv, t0, t1, cfg)
    G = reachability._gramian_from_samples(nodes, E, B_at)
    min_eig = float(np.linalg.eigvalsh(G)[0])
    if min_eig <= reachability.gramian_invertibility_cutoff(G, cfg):
        raise LinearTestInapplicableError(
            "the linearized system is not controllable on the interval "
            f"(Gramian min eigenvalue {min_eig:.3e})", min_eigenvalue=min_eig)
    R10 = E[0]
    h = nodes[1] - nodes[0]
    grid = nodes  # simulate on the quadrature grid; spacing <= ode_step

    def control_for(phi: np.ndarray) -> ControlSignal:
        z = np.linalg.solve(G, (phi - xbar1) - R10 @ dx0)
        w = np.einsum("kji,j->ki", E, z)
        dw = np.einsum("kji,j->ki", dE, z)
        w_fun = kernels.SampledMatrixFunction(nodes[0], h, w, dw)

        def u_of(s, _w=w_fun):
            return (np.atleast_1d(np.asarray(ref.ubar(s), float))
                    + vf.jacobian_u(ref.xbar(s), ref.ubar(s)).T @ _w(s))

        return ControlSignal(t0, t1, vf.control_dim, u_of)

    phi = x1.copy()
    errors = []
    traj = None
    control = None
    for iteration in range(1, cfg.max_iter + 1):
        control = control_for(phi)
        traj = integrate_field(vf, x0, control, grid, cfg)
        endpoint = traj.final_state()
        err = float(np.linalg.norm(endpoint - x1))
        errors.append(err)
        if err <= cfg.fixed_point_tol:
            return SteeringResult(
                trajectory=traj, control=control, iterations=iteration,
                terminal_error=err, converged=True, error_history=tuple(errors))
        phi = phi - endpoint + x1
        if np.linalg.norm(phi - x1) > 10.0 * delta:
            raise DivergenceError(
                f"iterate left the trust ball after {iteration} passes",
                history=errors)
    return SteeringResult(
        trajectory=traj, control=control, iterations=cfg.max_iter,
        terminal_error=errors[-1], converged=False, error_history=tuple(errors))
