"""Controllability analysis and minimum-energy steering.

Implements the rank test on M = [B, AB, ..., A^{n-1}B], the eigenvalue
(PBH) test, the controllability Gramian

    Gc = int_{t0}^{t1} R(t1, s) B(s) B(s)^T R(t1, s)^T ds,

the Gramian-inverse minimum-energy control, and the orthogonal
decomposition into controllable and uncontrollable blocks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from . import kernels
from .errors import DomainError, UncontrollableIntervalError
from .kernels import DEFAULT_TOLERANCES, ToleranceConfig
from .systems import ControlSignal, LtiSystem, LtvSystem


@dataclass(frozen=True)
class ControllabilityReport:
    kalman_matrix: np.ndarray
    rank: int
    controllable: bool
    reachable_basis: np.ndarray      # n x r, orthonormal columns
    unreachable_basis: np.ndarray    # n x (n - r), orthonormal columns


@dataclass(frozen=True)
class HautusRecord:
    eigenvalue: complex
    rank: int
    passed: bool


@dataclass(frozen=True)
class HautusReport:
    records: tuple

    @property
    def controllable(self) -> bool:
        return all(r.passed for r in self.records)


@dataclass(frozen=True)
class GramianReport:
    gramian: np.ndarray
    interval: tuple
    min_eigenvalue: float
    invertible: bool


@dataclass(frozen=True)
class KalmanDecomposition:
    T: np.ndarray    # orthogonal change of coordinates
    r: int
    A1: np.ndarray   # r x r, controllable block
    A2: np.ndarray   # r x (n - r) coupling
    A3: np.ndarray   # (n - r) x (n - r), uncontrollable block
    B1: np.ndarray   # r x p


def kalman_matrix(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Horizontal stack [B, AB, ..., A^{n-1}B] built by repeated products."""
    n = A.shape[0]
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def _range_split(M: np.ndarray, cfg: ToleranceConfig):
    """Rank and orthonormal bases of range(M) and its complement via SVD."""
    U, s, _ = np.linalg.svd(M)
    if s.size == 0 or s[0] == 0.0:
        r = 0
    else:
        cutoff = cfg.rank_rtol * max(M.shape) * s[0]
        r = int(np.count_nonzero(s > cutoff))
    reachable = kernels.sign_normalize_columns(U[:, :r])
    unreachable = kernels.sign_normalize_columns(U[:, r:])
    return r, reachable, unreachable


def kalman_test(sys: LtiSystem, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> ControllabilityReport:
    """Rank test: (A, B) is controllable iff rank M = n."""
    M = kalman_matrix(sys.A, sys.B)
    r, reach, unreach = _range_split(M, cfg)
    return ControllabilityReport(
        kalman_matrix=M,
        rank=r,
        controllable=(r == sys.n),
        reachable_basis=reach,
        unreachable_basis=unreach,
    )


def hautus_rank_at(A: np.ndarray, B: np.ndarray, lam: complex,
                   cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> int:
    """Complex rank of [lam I - A, B] for real A, B.

    Non-real lam is handled through the real doubled embedding
    [[X, -Y], [Y, X]] of X + iY, whose real rank is exactly twice the
    complex rank, so all kernels stay real.
    """
    n = A.shape[0]
    X = lam.real * np.eye(n) - A
    if lam.imag == 0.0:
        return kernels.numerical_rank(np.hstack([X, B]), cfg)
    Y = lam.imag * np.eye(n)
    Z = np.hstack([X, B])
    W = np.hstack([Y, np.zeros_like(B)])
    doubled = np.block([[Z, -W], [W, Z]])
    return kernels.numerical_rank(doubled, cfg) // 2


def hautus_test(sys: LtiSystem, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> HautusReport:
    """Eigenvalue test: rank [lam I - A, B] = n at every eigenvalue of A."""
    records = []
    for lam in kernels.eigenvalues(sys.A):
        rank = hautus_rank_at(sys.A, sys.B, complex(lam), cfg)
        records.append(HautusRecord(complex(lam), rank, rank == sys.n))
    return HautusReport(records=tuple(records))


def _transition_samples(sys: Union[LtiSystem, LtvSystem], t0: float, t1: float,
                        cfg: ToleranceConfig):
    """Samples of E(s) = R(t1, s) on Simpson nodes of [t0, t1].

    Returns (nodes, E, dE, B_at) where dE(s) = -E(s) A(s) supports cubic
    Hermite dense output and B_at samples the input matrix at the nodes.
    For constant systems E is accumulated from e^{h A} products; for
    time-varying systems the adjoint resolvent ODE is integrated
    backward from E(t1) = I.
    """
    span = t1 - t0
    m = kernels.simpson_intervals(span, cfg.ode_step)
    nodes = np.linspace(t0, t1, m + 1)
    h = span / m
    if isinstance(sys, LtiSystem):
        A, B = sys.A, sys.B
        n = sys.n
        Eh = kernels.expm(h * A)
        E = np.empty((m + 1, n, n))
        E[m] = np.eye(n)
        for k in range(m, 0, -1):
            E[k - 1] = Eh @ E[k]
        dE = -E @ A
        B_at = np.broadcast_to(B, (m + 1,) + B.shape)
    else:
        slack = 1e-9 * (1.0 + abs(sys.t1 - sys.t0))
        if t0 < sys.t0 - slack or t1 > sys.t1 + slack:
            raise DomainError(
                f"[{t0}, {t1}] leaves the system interval [{sys.t0}, {sys.t1}]")
        n = sys.n
        E = np.empty((m + 1, n, n))
        E[m] = np.eye(n)
        A_nodes = np.array([sys.A_of(s) for s in nodes])
        cur = np.eye(n)
        for k in range(m, 0, -1):
            cur = kernels.rk4_step(lambda s, M: -(M @ sys.A_of(s)), nodes[k], cur, -h)
            E[k - 1] = cur
        dE = -np.einsum("kij,kjl->kil", E, A_nodes)
        B_at = np.array([sys.B_of(s) for s in nodes])
    return nodes, E, dE, B_at


def _gramian_from_samples(nodes: np.ndarray, E: np.ndarray, B_at: np.ndarray) -> np.ndarray:
    h = nodes[1] - nodes[0]
    F = np.einsum("kij,kjl->kil", E, B_at)
    w = kernels.simpson_weights(nodes.size - 1) * (h / 3.0)
    G = np.einsum("k,kil,kjl->ij", w, F, F)
    return 0.5 * (G + G.T)


def gramian_invertibility_cutoff(G: np.ndarray,
                                 cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> float:
    """Invertibility threshold for a PSD Gramian.

    Gramian eigenvalues sit on the energy scale, the square of the rank
    test's singular-value scale, so the cutoff is (rank_rtol * dim)^2
    with a floor of a few machine epsilons; anything smaller cannot be
    distinguished from quadrature rounding either way.
    """
    floor = max((cfg.rank_rtol * max(G.shape)) ** 2, 4.0 * np.finfo(float).eps)
    return floor * (1.0 + float(np.linalg.norm(G, 2)))


def controllability_gramian(sys: Union[LtiSystem, LtvSystem], t0: float, t1: float,
                            cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> GramianReport:
    """Composite-Simpson quadrature of the controllability Gramian on [t0, t1]."""
    if not t0 < t1:
        raise DomainError(f"need t0 < t1, got [{t0}, {t1}]")
    nodes, E, _, B_at = _transition_samples(sys, t0, t1, cfg)
    G = _gramian_from_samples(nodes, E, B_at)
    min_eig = float(np.linalg.eigvalsh(G)[0])
    return GramianReport(
        gramian=G,
        interval=(t0, t1),
        min_eigenvalue=min_eig,
        invertible=min_eig > gramian_invertibility_cutoff(G, cfg),
    )


def min_energy_control(sys: Union[LtiSystem, LtvSystem], t0: float, t1: float,
                       x0, x1, cfg: ToleranceConfig = DEFAULT_TOLERANCES):
    """Least-L2-norm control steering x0 at t0 to x1 at t1.

    Returns (u, cost) with u(s) = B(s)^T R(t1, s)^T z for
    z = Gc^{-1} (x1 - R(t1, t0) x0) and cost = <z, Gc z>, the exact
    minimum of int ||u||^2 over all steering controls.
    """
    if not t0 < t1:
        raise DomainError(f"need t0 < t1, got [{t0}, {t1}]")
    x0 = kernels.as_vector(x0, "x0")
    x1 = kernels.as_vector(x1, "x1")
    nodes, E, dE, B_at = _transition_samples(sys, t0, t1, cfg)
    G = _gramian_from_samples(nodes, E, B_at)
    min_eig = float(np.linalg.eigvalsh(G)[0])
    if min_eig <= gramian_invertibility_cutoff(G, cfg):
        raise UncontrollableIntervalError(
            f"controllability Gramian on [{t0}, {t1}] is singular "
            f"(min eigenvalue {min_eig:.3e})", min_eigenvalue=min_eig)
    defect = x1 - E[0] @ x0
    z = np.linalg.solve(G, defect)
    cost = float(z @ G @ z)

    h = nodes[1] - nodes[0]
    w_samples = np.einsum("kji,j->ki", E, z)       # w(s) = E(s)^T z
    dw_samples = np.einsum("kji,j->ki", dE, z)
    w_fun = kernels.SampledMatrixFunction(nodes[0], h, w_samples, dw_samples)

    if isinstance(sys, LtiSystem):
        B = sys.B

        def u_of(s, _w=w_fun, _B=B):
            return _B.T @ _w(s)
    else:
        def u_of(s, _w=w_fun, _B=sys.B_of):
            return np.asarray(_B(s)).T @ _w(s)

    return ControlSignal(t0, t1, B_at.shape[2], u_of), cost


def steering_endpoint_by_quadrature(sys, t0: float, t1: float, u: ControlSignal,
                                    cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
    """int R(t1, s) B(s) u(s) ds, the from-zero endpoint of the input map."""
    nodes, E, _, B_at = _transition_samples(sys, t0, t1, cfg)
    h = nodes[1] - nodes[0]
    vals = np.array([E[k] @ (B_at[k] @ np.asarray(u.u_of(s), dtype=float))
                     for k, s in enumerate(nodes)])
    return kernels.composite_simpson(vals, h)


def control_energy(u: ControlSignal, t0: float, t1: float,
                   cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> float:
    """Simpson quadrature of int_{t0}^{t1} ||u(s)||^2 ds."""
    m = kernels.simpson_intervals(t1 - t0, cfg.ode_step)
    nodes = np.linspace(t0, t1, m + 1)
    vals = np.array([float(np.sum(np.asarray(u.u_of(s)) ** 2)) for s in nodes])
    return float(kernels.composite_simpson(vals, nodes[1] - nodes[0]))


def kalman_decomposition(sys: LtiSystem,
                         cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> KalmanDecomposition:
    """Orthogonal coordinates splitting controllable from uncontrollable.

    T = [V_reach, V_unreach] built from orthonormal bases of the
    controllable space R(A, B) and its complement; T^T A T is block
    upper triangular and T^T B has zero lower block.
    """
    report = kalman_test(sys, cfg)
    r = report.rank
    T = np.hstack([report.reachable_basis, report.unreachable_basis])
    At = T.T @ sys.A @ T
    Bt = T.T @ sys.B
    return KalmanDecomposition(
        T=T,
        r=r,
        A1=At[:r, :r],
        A2=At[:r, r:],
        A3=At[r:, r:],
        B1=Bt[:r, :],
    )
