"""Steady-state Kalman filter via fixed-point iteration of the Riccati map."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .exceptions import NonConvergence, SingularInnovation, UnstableClosedLoop
from .lti import InnovationModel, StateSpaceModel

__all__ = ["DareSolution", "riccati_map", "dare_defect", "solve_dare", "innovation_model",
           "kalman_model"]


@dataclass(frozen=True)
class DareSolution:
    P: np.ndarray
    K: np.ndarray
    S: np.ndarray
    residual: float
    iterations: int
    defects: tuple = field(default=(), repr=False)


def _gain(A, C, R, P):
    S = C @ P @ C.T + R
    S = 0.5 * (S + S.T)
    try:
        cho = linalg.cho_factor(S, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularInnovation("C P C^T + R is not positive definite") from exc
    # K = A P C^T S^{-1}, solved as S K^T = C P A^T
    K = linalg.cho_solve(cho, C @ P @ A.T).T
    return K, S


def riccati_map(model: StateSpaceModel, P: np.ndarray) -> np.ndarray:
    """One step P -> A P A^T + Q - A P C^T (C P C^T + R)^{-1} C P A^T."""
    A, C = model.A, model.C
    K, _ = _gain(A, C, model.R, P)
    Pn = A @ P @ A.T + model.Q - K @ (C @ P @ A.T)
    return 0.5 * (Pn + Pn.T)


def dare_defect(model: StateSpaceModel, P: np.ndarray) -> float:
    """Spectral norm of the Riccati fixed-point defect at ``P``."""
    return float(np.linalg.norm(riccati_map(model, P) - P, 2))


def solve_dare(model: StateSpaceModel, tol: float = 1e-12, max_iter: int = 1_000_000,
               patience: int = 10_000) -> DareSolution:
    """Iterate the Riccati map from P0 = Q until the defect drops to ``tol``.

    The iteration also stops early once the defect has not improved for
    ``patience`` consecutive steps, which happens when round-off in a badly
    scaled problem sits above ``tol``.

    Raises:
        NonConvergence: if the defect is still above ``tol`` after ``max_iter``
            iterations or has stagnated.
        SingularInnovation: if C P C^T + R cannot be Cholesky-factored.
    """
    P = np.array(model.Q, dtype=float)
    defects = []
    best, since_best = math.inf, 0
    for it in range(max_iter + 1):
        Pn = riccati_map(model, P)
        d = float(np.linalg.norm(Pn - P, 2))
        defects.append(d)
        if d <= tol:
            K, S = _gain(model.A, model.C, model.R, P)
            return DareSolution(P=P, K=K, S=S, residual=d, iterations=it, defects=tuple(defects))
        if d < best:
            best, since_best = d, 0
        else:
            since_best += 1
            if since_best >= patience:
                raise NonConvergence(f"Riccati defect stagnated at {best:.3e} > {tol:.1e} "
                                     f"after {it} iterations")
        P = Pn
    raise NonConvergence(f"Riccati defect {defects[-1]:.3e} > {tol:.1e} after {max_iter} iterations")


def innovation_model(model: StateSpaceModel, sol: DareSolution) -> InnovationModel:
    """Package (A, C, K, P, S), refusing a filter whose closed loop is not stable."""
    rho = float(np.max(np.abs(np.linalg.eigvals(model.A - sol.K @ model.C))))
    if rho >= 1.0:
        raise UnstableClosedLoop(f"spectral radius of A - K C is {rho:.6f}")
    return InnovationModel(A=model.A, C=model.C, K=sol.K, P=sol.P, S=sol.S)


def kalman_model(model: StateSpaceModel, tol: float = 1e-12, max_iter: int = 1_000_000,
                 patience: int = 10_000) -> InnovationModel:
    """Shortcut for ``innovation_model(model, solve_dare(model, tol, max_iter))``."""
    return innovation_model(model, solve_dare(model, tol, max_iter, patience))
