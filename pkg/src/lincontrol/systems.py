"""System models and trajectory simulation.

The solution of x' = A(t) x + B(t) u is integrated with fixed-step RK4;
for constant coefficients this realizes the variation-of-constants
(Duhamel) formula x(t) = e^{(t-t0)A} x0 + int e^{(t-s)A} B u(s) ds
numerically at fourth order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .errors import DimensionError, DomainError
from .kernels import DEFAULT_TOLERANCES, ToleranceConfig, as_matrix, as_vector


@dataclass(frozen=True)
class LtiSystem:
    """Constant-coefficient system x' = A x + B u with observation y = C x.

    C defaults to the identity, which matches the convention used when a
    full-state cost or observation is intended.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray = None

    def __post_init__(self):
        A = kernels.require_square(self.A, "A")
        B = as_matrix(self.B, "B")
        if B.shape[0] != A.shape[0]:
            raise DimensionError(
                f"B must have {A.shape[0]} rows, got shape {B.shape}")
        C = np.eye(A.shape[0]) if self.C is None else as_matrix(self.C, "C")
        if C.shape[1] != A.shape[0]:
            raise DimensionError(
                f"C must have {A.shape[0]} columns, got shape {C.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.B.shape[1]

    @property
    def m(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class LtvSystem:
    """Time-varying pair (A(t), B(t)) on a closed interval [t0, t1]."""

    t0: float
    t1: float
    A_of: Callable[[float], np.ndarray]
    B_of: Callable[[float], np.ndarray]

    def __post_init__(self):
        if not self.t0 < self.t1:
            raise DomainError(f"need t0 < t1, got [{self.t0}, {self.t1}]")
        A0 = kernels.require_square(self.A_of(self.t0), "A(t0)")
        B0 = as_matrix(self.B_of(self.t0), "B(t0)")
        if B0.shape[0] != A0.shape[0]:
            raise DimensionError(
                f"B(t) must have {A0.shape[0]} rows, got shape {B0.shape}")
        object.__setattr__(self, "_n", A0.shape[0])
        object.__setattr__(self, "_p", B0.shape[1])

    @property
    def n(self) -> int:
        return self._n

    @property
    def p(self) -> int:
        return self._p

    @property
    def interval(self) -> tuple:
        return (self.t0, self.t1)


def constant_ltv(A, B, t0: float, t1: float) -> LtvSystem:
    """Wrap constant matrices as a time-varying system on [t0, t1]."""
    A = kernels.require_square(A, "A")
    B = as_matrix(B, "B")
    return LtvSystem(t0, t1, lambda t: A, lambda t: B)


@dataclass(frozen=True)
class ControlSignal:
    """A control u: [t0, t1] -> R^p given by a reentrant callable."""

    t0: float
    t1: float
    dim: int
    u_of: Callable[[float], np.ndarray]

    @property
    def interval(self) -> tuple:
        return (self.t0, self.t1)

    @classmethod
    def zero(cls, dim: int, t0: float, t1: float) -> "ControlSignal":
        z = np.zeros(dim)
        return cls(t0, t1, dim, lambda t: z)

    @classmethod
    def from_samples(cls, grid, values) -> "ControlSignal":
        """Piecewise-linear interpolation of sampled control values."""
        grid = np.asarray(grid, dtype=float)
        values = np.atleast_2d(np.asarray(values, dtype=float))
        if values.shape[0] != grid.size:
            values = values.T
        if values.shape[0] != grid.size:
            raise DimensionError("values must supply one row per grid point")
        dim = values.shape[1]

        def u_of(t, _g=grid, _v=values):
            return np.array([np.interp(t, _g, _v[:, i]) for i in range(dim)])

        return cls(float(grid[0]), float(grid[-1]), dim, u_of)


@dataclass(frozen=True)
class Trajectory:
    """Time grid with state samples and, optionally, control samples."""

    grid: np.ndarray
    states: np.ndarray
    controls: Optional[np.ndarray] = None

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        states = np.asarray(self.states, dtype=float)
        if np.any(np.diff(grid) <= 0):
            raise DomainError("trajectory grid must be strictly increasing")
        if states.shape[0] != grid.size:
            raise DimensionError("states must have one row per grid point")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "states", states)
        if self.controls is not None:
            controls = np.asarray(self.controls, dtype=float)
            if controls.shape[0] != grid.size:
                raise DimensionError("controls must have one row per grid point")
            object.__setattr__(self, "controls", controls)

    @property
    def n(self) -> int:
        return self.states.shape[1]

    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, path) -> None:
        """Write `t,x1,...,xn[,u1,...,up]` rows at 17 significant digits."""
        n = self.states.shape[1]
        header = ["t"] + [f"x{i + 1}" for i in range(n)]
        blocks = [self.grid[:, None], self.states]
        if self.controls is not None:
            header += [f"u{i + 1}" for i in range(self.controls.shape[1])]
            blocks.append(self.controls)
        data = np.hstack(blocks)
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for row in data:
                fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def uniform_grid(t0: float, t1: float, points: int) -> np.ndarray:
    if points < 2:
        raise DomainError("a grid needs at least two points")
    return np.linspace(t0, t1, points)


def _check_grid(grid: np.ndarray, lo: float, hi: float, what: str) -> None:
    slack = 1e-9 * (1.0 + abs(hi - lo))
    if grid[0] < lo - slack or grid[-1] > hi + slack:
        raise DomainError(
            f"grid [{grid[0]}, {grid[-1]}] leaves the {what} interval [{lo}, {hi}]")


def simulate(sys, x0, u: Optional[ControlSignal], grid,
             cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> Trajectory:
    """Integrate the system from x0 along the grid, driven by u (or zero).

    States are produced at every grid point by RK4 with internal substeps
    no longer than cfg.ode_step; the initial state is stored exactly.
    Superposition holds to integration accuracy since everything is
    linear in (x0, u).
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise DomainError("grid must be a strictly increasing 1-D sequence")
    x0 = as_vector(x0, "x0")

    if isinstance(sys, LtiSystem):
        if x0.size != sys.n:
            raise DimensionError(f"x0 must have length {sys.n}")
        A, B = sys.A, sys.B
        A_of = lambda t: A
        B_of = lambda t: B
        p = sys.p
    elif isinstance(sys, LtvSystem):
        if x0.size != sys.n:
            raise DimensionError(f"x0 must have length {sys.n}")
        _check_grid(grid, sys.t0, sys.t1, "system")
        A_of, B_of, p = sys.A_of, sys.B_of, sys.p
    else:
        raise TypeError(f"cannot simulate object of type {type(sys).__name__}")

    if u is None:
        f = lambda t, x: A_of(t) @ x
    else:
        if u.dim != p:
            raise DimensionError(f"control dimension {u.dim} does not match p={p}")
        _check_grid(grid, u.t0, u.t1, "control")
        u_of = u.u_of
        f = lambda t, x: A_of(t) @ x + B_of(t) @ np.asarray(u_of(t), dtype=float)

    states = kernels.rk4_path(f, x0, grid, cfg.ode_step)
    controls = None
    if u is not None:
        controls = np.array([np.asarray(u.u_of(t), dtype=float) for t in grid])
    return Trajectory(grid=grid, states=states, controls=controls)
