"""Monte-Carlo trajectory generation with per-trajectory counter-based streams.

Trajectory ``i`` of a batch with base seed ``s`` draws all of its randomness
from a Philox generator keyed by ``(s, i)``.  The values of a trajectory
therefore depend only on the seed and its index, never on ``N``, on run
order or on how the work is split across processes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from .lti import InnovationModel, StateSpaceModel

__all__ = [
    "TrajectoryBatch",
    "BatchMatrices",
    "trajectory_rng",
    "stationary_covariance",
    "simulate_state_space",
    "simulate_innovation_form",
    "assemble_batches",
]

_U64 = (1 << 64) - 1


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for trajectory ``index`` under base ``seed``."""
    return np.random.Generator(np.random.Philox(key=[int(seed) & _U64, int(index) & _U64]))


def _draw(seed: int, N: int, width: int) -> np.ndarray:
    Z = np.empty((N, width))
    for i in range(N):
        Z[i] = trajectory_rng(seed, i).standard_normal(width)
    return Z


def _chol(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if not np.any(M):
        return np.zeros_like(M)
    return np.linalg.cholesky(0.5 * (M + M.T))


@dataclass(frozen=True)
class TrajectoryBatch:
    """N output trajectories of length 2T.

    ``outputs`` and ``innovations`` are N x 2T x m, ``init_states`` is N x n.
    For innovation-form batches ``init_states`` holds the filter states x̂_0;
    for raw state-space batches it holds x_0 and ``innovations`` is None.
    """

    outputs: np.ndarray
    innovations: Optional[np.ndarray]
    init_states: np.ndarray
    T: int
    N: int
    seed: int

    def __post_init__(self):
        if self.outputs.shape[:2] != (self.N, 2 * self.T):
            raise ValueError(f"outputs shape {self.outputs.shape} does not match N={self.N}, T={self.T}")
        if self.innovations is not None and self.innovations.shape != self.outputs.shape:
            raise ValueError("innovations must have the same shape as outputs")
        if self.init_states.shape[0] != self.N:
            raise ValueError("init_states must have one row per trajectory")

    @property
    def m(self) -> int:
        return self.outputs.shape[2]

    @property
    def n(self) -> int:
        return self.init_states.shape[1]

    @property
    def is_innovation_form(self) -> bool:
        return self.innovations is not None


@dataclass(frozen=True)
class BatchMatrices:
    Yp: np.ndarray
    Yf: np.ndarray
    Ep: Optional[np.ndarray] = None
    Ef: Optional[np.ndarray] = None
    Xhat: Optional[np.ndarray] = None


def stationary_covariance(A: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Solve Sigma = A Sigma A^T + Q (requires spectral radius of A below one)."""
    if np.max(np.abs(np.linalg.eigvals(A))) >= 1.0:
        raise ValueError("no stationary covariance: A is not strictly stable")
    S = linalg.solve_discrete_lyapunov(A, Q)
    return 0.5 * (S + S.T)


def simulate_state_space(model: StateSpaceModel, P: np.ndarray, N: int, T: int, seed: int,
                         x0_rule: str = "stationary",
                         init_cov: Optional[np.ndarray] = None) -> TrajectoryBatch:
    """Simulate x_{k+1} = A x_k + w_k, y_k = C x_k + v_k for k = 0..2T-1.

    x_0 is drawn from the stationary covariance when A is strictly stable and
    ``x0_rule == "stationary"``; otherwise (or for ``"dare_P"``) from N(0, P).
    ``init_cov`` overrides both; an all-zero matrix forces x_0 = 0.
    """
    if N < 1 or T < 1:
        raise ValueError("N and T must be positive")
    n, m, L = model.n, model.m, 2 * T
    if init_cov is None:
        if x0_rule == "stationary" and np.max(np.abs(np.linalg.eigvals(model.A))) < 1.0:
            init_cov = stationary_covariance(model.A, model.Q)
        elif x0_rule in ("stationary", "dare_P"):
            init_cov = P
        else:
            raise ValueError(f"unknown x0_rule {x0_rule!r}")
    Lx, Lq, Lr = _chol(init_cov), _chol(model.Q), _chol(model.R)

    Z = _draw(seed, N, n + L * n + L * m)
    x = Z[:, :n] @ Lx.T
    W = Z[:, n:n + L * n].reshape(N, L, n) @ Lq.T
    V = Z[:, n + L * n:].reshape(N, L, m) @ Lr.T

    x0 = x.copy()
    Y = np.empty((N, L, m))
    for k in range(L):
        Y[:, k] = x @ model.C.T + V[:, k]
        x = x @ model.A.T + W[:, k]
    return TrajectoryBatch(outputs=Y, innovations=None, init_states=x0, T=T, N=N, seed=seed)


def simulate_innovation_form(model: InnovationModel, N: int, T: int, seed: int,
                             init_cov: Optional[np.ndarray] = None) -> TrajectoryBatch:
    """Simulate x̂_{k+1} = A x̂_k + K e_k, y_k = C x̂_k + e_k with e_k ~ N(0, S).

    x̂_0 ~ N(0, P) unless ``init_cov`` is given.
    """
    if N < 1 or T < 1:
        raise ValueError("N and T must be positive")
    n, m, L = model.n, model.m, 2 * T
    Lx = _chol(model.P if init_cov is None else init_cov)
    Ls = _chol(model.S)

    Z = _draw(seed, N, n + L * m)
    x = Z[:, :n] @ Lx.T
    E = Z[:, n:].reshape(N, L, m) @ Ls.T

    x0 = x.copy()
    Y = np.empty((N, L, m))
    for k in range(L):
        Y[:, k] = x @ model.C.T + E[:, k]
        x = x @ model.A.T + E[:, k] @ model.K.T
    return TrajectoryBatch(outputs=Y, innovations=E, init_states=x0, T=T, N=N, seed=seed)


def _stack(arr: np.ndarray, lo: int, hi: int) -> np.ndarray:
    N = arr.shape[0]
    return np.ascontiguousarray(arr[:, lo:hi, :].reshape(N, -1).T)


def assemble_batches(batch: TrajectoryBatch) -> BatchMatrices:
    """Y_p, Y_f (and E_p, E_f, X̂ for innovation-form batches), one column per trajectory."""
    T = batch.T
    Yp = _stack(batch.outputs, 0, T)
    Yf = _stack(batch.outputs, T, 2 * T)
    if batch.innovations is None:
        return BatchMatrices(Yp=Yp, Yf=Yf)
    return BatchMatrices(
        Yp=Yp,
        Yf=Yf,
        Ep=_stack(batch.innovations, 0, T),
        Ef=_stack(batch.innovations, T, 2 * T),
        Xhat=np.ascontiguousarray(batch.init_states.T),
    )
