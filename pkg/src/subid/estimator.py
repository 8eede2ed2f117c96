"""Subspace identification of (A, C, K) from multiple output trajectories.

The pipeline is the classic four steps: least-squares Hankel regression of
future on past outputs, rank-n truncation by SVD, a balanced split into
observability/controllability factors, and a shift regression for A.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import DimensionError, IllConditionedShift, RankDeficient, SingularGram
from .simulate import TrajectoryBatch, assemble_batches

__all__ = [
    "SimEstimate",
    "TruncatedSVD",
    "estimate_hankel",
    "truncate_rank_n",
    "extract_factors",
    "recover_system",
    "sim_from_hankel",
    "run_sim",
]

PINV_RTOL = 1e-10


@dataclass(frozen=True)
class SimEstimate:
    hankel_hat: np.ndarray
    hankel_hat_n: np.ndarray
    U1: np.ndarray
    S1: np.ndarray
    V1: np.ndarray
    gamma_hat: np.ndarray
    ctrl_hat: np.ndarray
    A_hat: np.ndarray
    C_hat: np.ndarray
    K_hat: np.ndarray
    n: int

    @property
    def m(self) -> int:
        return self.C_hat.shape[0]

    @property
    def T(self) -> int:
        return self.hankel_hat.shape[0] // self.m


class TruncatedSVD(NamedTuple):
    U1: np.ndarray
    S1: np.ndarray
    V1: np.ndarray
    Hn: np.ndarray


def estimate_hankel(Yp: np.ndarray, Yf: np.ndarray, reg: float = 0.0) -> np.ndarray:
    """Least-squares H minimizing ||Y_f - H Y_p||_F.

    Computed from the thin SVD of Y_p, so with ``reg = 0`` this equals
    Y_f Y_p^T (Y_p Y_p^T)^{-1} without forming the Gram matrix; ``reg > 0``
    gives the ridge solution Y_f Y_p^T (Y_p Y_p^T + reg I)^{-1}.

    Raises:
        SingularGram: ``reg == 0`` and Y_p is not numerically full row rank.
    """
    Yp = np.asarray(Yp, dtype=float)
    Yf = np.asarray(Yf, dtype=float)
    if Yp.shape[1] != Yf.shape[1]:
        raise DimensionError("Y_p and Y_f must have the same number of columns")
    if reg < 0:
        raise ValueError("reg must be nonnegative")
    rows, N = Yp.shape
    U, s, Vt = np.linalg.svd(Yp, full_matrices=False)
    if reg == 0.0:
        if N < rows or s[-1] <= PINV_RTOL * s[0]:
            raise SingularGram(f"Y_p Y_p^T is singular (N={N}, Tm={rows}); add trajectories or set reg > 0")
        w = 1.0 / s
    else:
        w = s / (s * s + reg)
    return ((Yf @ Vt.T) * w) @ U.T


def truncate_rank_n(H: np.ndarray, n: int) -> TruncatedSVD:
    """Best rank-n approximation of H with its leading singular triplets."""
    H = np.asarray(H, dtype=float)
    if not 1 <= n <= min(H.shape):
        raise DimensionError(f"order n={n} must lie in [1, {min(H.shape)}]")
    U, s, Vt = np.linalg.svd(H)
    U1, S1, V1 = U[:, :n], s[:n], Vt[:n].T
    return TruncatedSVD(U1=U1, S1=S1, V1=V1, Hn=(U1 * S1) @ V1.T)


def extract_factors(U1: np.ndarray, S1: np.ndarray, V1: np.ndarray,
                    rtol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Balanced split Gamma = U1 S1^{1/2}, K = S1^{1/2} V1^T.

    Raises:
        RankDeficient: a retained singular value is <= ``rtol * S1[0]``.
    """
    S1 = np.asarray(S1, dtype=float)
    if S1.size == 0 or S1[0] <= 0 or S1[-1] <= rtol * S1[0]:
        raise RankDeficient(f"retained singular values {S1} include a (near) zero; order too large")
    root = np.sqrt(S1)
    return U1 * root, (V1 * root).T


def recover_system(gamma_hat: np.ndarray, ctrl_hat: np.ndarray, m: int,
                   rtol: float = PINV_RTOL) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """A from the shift regression Gamma_p^† Gamma_f; C, K from the edge blocks."""
    rows, n = gamma_hat.shape
    if rows % m or rows // m < 2:
        raise DimensionError("gamma_hat needs at least two block rows of height m")
    G_p, G_f = gamma_hat[:-m], gamma_hat[m:]
    U, s, Vt = np.linalg.svd(G_p, full_matrices=False)
    if s.size < n or s[-1] <= rtol * s[0]:
        raise IllConditionedShift(f"sigma_min(Gamma_p)/sigma_max = {s[-1] / s[0]:.3e}")
    A_hat = (Vt.T / s) @ (U.T @ G_f)
    C_hat = gamma_hat[:m].copy()
    K_hat = ctrl_hat[:, -m:].copy()
    return A_hat, C_hat, K_hat


def sim_from_hankel(H: np.ndarray, n: int, m: int) -> SimEstimate:
    """Run steps 2-4 on a given Hankel estimate (or on the exact H_T)."""
    tr = truncate_rank_n(H, n)
    gamma_hat, ctrl_hat = extract_factors(tr.U1, tr.S1, tr.V1)
    A_hat, C_hat, K_hat = recover_system(gamma_hat, ctrl_hat, m)
    return SimEstimate(
        hankel_hat=np.asarray(H, dtype=float),
        hankel_hat_n=tr.Hn, U1=tr.U1, S1=tr.S1, V1=tr.V1,
        gamma_hat=gamma_hat, ctrl_hat=ctrl_hat,
        A_hat=A_hat, C_hat=C_hat, K_hat=K_hat, n=n,
    )


def run_sim(batch: TrajectoryBatch, n: int, reg: float = 0.0) -> SimEstimate:
    """End-to-end identification from a trajectory batch."""
    mats = assemble_batches(batch)
    H_hat = estimate_hankel(mats.Yp, mats.Yf, reg=reg)
    return sim_from_hankel(H_hat, n, batch.m)
