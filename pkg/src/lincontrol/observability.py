"""Observability, duality, and detectability.

The rank test stacks C, CA, ..., CA^{n-1}; the Gramian route integrates
R_T = int_0^T e^{tA^T} C^T C e^{tA} dt. Both are computed and must agree.
Everything dualizes: (A, C) is observable iff (A^T, C^T) is controllable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels, reachability, synthesis
from .errors import DomainError, NumericalInconsistencyError
from .kernels import DEFAULT_TOLERANCES, ToleranceConfig
from .reachability import GramianReport
from .stability import STABILITY_MARGIN, spectral_abscissa
from .systems import LtiSystem


@dataclass(frozen=True)
class ObservabilityReport:
    observability_matrix: np.ndarray   # (n m) x n stack of C A^k
    rank: int
    observable: bool
    gramian: GramianReport


@dataclass(frozen=True)
class DetectabilityReport:
    detectable: bool
    witness_L: Optional[np.ndarray] = None


def observability_matrix(A: np.ndarray, C: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    blocks = [C]
    for _ in range(n - 1):
        blocks.append(blocks[-1] @ A)
    return np.vstack(blocks)


def observation_gramian(A, C, horizon: float,
                        cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> GramianReport:
    """Simpson quadrature of R_T on [0, horizon]."""
    if not horizon > 0.0:
        raise DomainError("horizon must be positive")
    A = kernels.require_square(A, "A")
    C = kernels.as_matrix(C, "C")
    m_int = kernels.simpson_intervals(horizon, cfg.ode_step)
    h = horizon / m_int
    Eh = kernels.expm(h * A)
    G = np.empty((m_int + 1,) + C.shape)
    G[0] = C
    for k in range(m_int):
        G[k + 1] = G[k] @ Eh
    w = kernels.simpson_weights(m_int) * (h / 3.0)
    R = np.einsum("k,kli,klj->ij", w, G, G)
    R = 0.5 * (R + R.T)
    min_eig = float(np.linalg.eigvalsh(R)[0])
    return GramianReport(
        gramian=R,
        interval=(0.0, horizon),
        min_eigenvalue=min_eig,
        invertible=min_eig > reachability.gramian_invertibility_cutoff(R, cfg),
    )


def observability_test(A, C, horizon: float = 1.0,
                       cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> ObservabilityReport:
    """Rank test and R_T quadrature, cross-checked against each other."""
    A = kernels.require_square(A, "A")
    C = kernels.as_matrix(C, "C")
    if C.shape[1] != A.shape[0]:
        raise DomainError(f"C must have {A.shape[0]} columns, got {C.shape}")
    O = observability_matrix(A, C)
    rank = kernels.numerical_rank(O, cfg)
    by_rank = rank == A.shape[0]
    gram = observation_gramian(A, C, horizon, cfg)
    if by_rank != gram.invertible:
        raise NumericalInconsistencyError(
            f"rank verdict ({by_rank}) and Gramian verdict ({gram.invertible}) "
            "disagree; the pair is too ill-conditioned to classify")
    return ObservabilityReport(
        observability_matrix=O,
        rank=rank,
        observable=by_rank,
        gramian=gram,
    )


def duality_check(A, C, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> bool:
    """Whether the observability verdict of (A, C) matches the
    controllability verdict of (A^T, C^T)."""
    A = kernels.require_square(A, "A")
    C = kernels.as_matrix(C, "C")
    obs = observability_test(A, C, 1.0, cfg).observable
    ctrl = reachability.kalman_test(LtiSystem(A.T, C.T), cfg).controllable
    return obs == ctrl


def _default_targets(count: int) -> np.ndarray:
    # distinct real rates; defective (repeated) targets slow the measured decay
    return -np.arange(1.0, count + 1.0)


def detectability_test(A, C, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> DetectabilityReport:
    """PBH test on the closed right half plane, with an explicit witness.

    (A, C) is detectable iff rank [lam I - A; C] = n at every eigenvalue
    with Re lam >= 0. When detectable, a gain L with A + L C stable is
    synthesized: by dual pole placement if (A, C) is observable,
    otherwise on the observable subsystem of the dual decomposition with
    zero gain on the remaining stable modes.
    """
    A = kernels.require_square(A, "A")
    C = kernels.as_matrix(C, "C")
    n = A.shape[0]
    m = C.shape[0]
    for lam in kernels.eigenvalues(A):
        if lam.real < -STABILITY_MARGIN:
            continue
        #  rank [lam I - A; C] = rank [conj(lam) I - A^T, C^T]
        if reachability.hautus_rank_at(A.T, C.T, complex(lam), cfg) < n:
            return DetectabilityReport(detectable=False, witness_L=None)

    if synthesis._dual_controllable(A, C, cfg):
        target = synthesis.MonicPolynomial.from_roots(_default_targets(n))
        L = synthesis.design_observer(A, C, target, cfg).L
    else:
        dual = reachability.kalman_decomposition(LtiSystem(A.T, C.T), cfg)
        r = dual.r
        if r == 0:
            L = np.zeros((n, m))
        else:
            target = synthesis.MonicPolynomial.from_roots(_default_targets(r))
            F1 = synthesis.pole_place(dual.A1, dual.B1, target, cfg).F
            F_tilde = np.hstack([F1, np.zeros((m, n - r))])
            L = (F_tilde @ dual.T.T).T
    closed = spectral_abscissa(A + L @ C)
    if closed >= -STABILITY_MARGIN:
        raise NumericalInconsistencyError(
            f"detectability witness failed: spectral abscissa of A + LC is {closed:.6g}")
    return DetectabilityReport(detectable=True, witness_L=L)
