"""Estimation errors measured modulo the gauge freedom of a state-space realization."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .estimator import SimEstimate
from .exceptions import DegenerateAlignment, DimensionError

__all__ = [
    "ErrorReport",
    "procrustes_align",
    "aligned_errors",
    "hausdorff_distance",
    "spectrum",
    "markov_parameters",
    "markov_error",
]


@dataclass(frozen=True)
class ErrorReport:
    hankel_err: float
    C_err: float
    K_err: float
    A_err: float
    pole_err: float
    markov_err: float
    alignment: np.ndarray


def procrustes_align(gamma_ref: np.ndarray, gamma_est: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Orthogonal U minimizing ||gamma_est - gamma_ref U||_F.

    U is the polar factor W Z^T of gamma_ref^T gamma_est = W Sigma Z^T.  When
    that cross product is rank deficient the minimizer is not unique; a
    ``DegenerateAlignment`` warning is issued and the LAPACK SVD gauge is kept.
    """
    gamma_ref = np.asarray(gamma_ref, dtype=float)
    gamma_est = np.asarray(gamma_est, dtype=float)
    if gamma_ref.shape != gamma_est.shape:
        raise DimensionError(f"shape mismatch {gamma_ref.shape} vs {gamma_est.shape}")
    W, sig, Zt = np.linalg.svd(gamma_ref.T @ gamma_est)
    if sig.size and sig[-1] <= rtol * max(sig[0], np.finfo(float).tiny):
        warnings.warn("cross product is rank deficient; alignment is not unique",
                      DegenerateAlignment, stacklevel=2)
    return W @ Zt


def markov_parameters(A: np.ndarray, C: np.ndarray, K: np.ndarray, count: int) -> np.ndarray:
    """Stack C A^k K for k = 0..count-1 into a (count, m, m) array."""
    out = np.empty((count, C.shape[0], K.shape[1]))
    cur = K
    for k in range(count):
        out[k] = C @ cur
        cur = A @ cur
    return out


def markov_error(A1, C1, K1, A2, C2, K2, count: int) -> float:
    """max_k ||C1 A1^k K1 - C2 A2^k K2|| over k < count (similarity invariant)."""
    d = markov_parameters(A1, C1, K1, count) - markov_parameters(A2, C2, K2, count)
    return float(max(np.linalg.norm(block, 2) for block in d))


def aligned_errors(truth: SimEstimate, est: SimEstimate) -> ErrorReport:
    """Errors of ``est`` against the realization SIM returns on the exact H_T.

    The alignment U comes from the observability factors; A, C and K errors
    take the forms ||Â - UᵀĀU||, ||Ĉ - C̄U|| and ||K̂ - UᵀK̄||.
    """
    if truth.n != est.n or truth.hankel_hat.shape != est.hankel_hat.shape:
        raise DimensionError("truth and estimate must share n, m and T")
    U = procrustes_align(truth.gamma_hat, est.gamma_hat)
    T = truth.T
    return ErrorReport(
        hankel_err=float(np.linalg.norm(est.hankel_hat - truth.hankel_hat, 2)),
        C_err=float(np.linalg.norm(est.C_hat - truth.C_hat @ U, 2)),
        K_err=float(np.linalg.norm(est.K_hat - U.T @ truth.K_hat, 2)),
        A_err=float(np.linalg.norm(est.A_hat - U.T @ truth.A_hat @ U, 2)),
        pole_err=hausdorff_distance(spectrum(est.A_hat), spectrum(truth.A_hat)),
        markov_err=markov_error(est.A_hat, est.C_hat, est.K_hat,
                                truth.A_hat, truth.C_hat, truth.K_hat, 2 * T - 1),
        alignment=U,
    )


def hausdorff_distance(spec_a, spec_b) -> float:
    """max of the two directed max-min distances between eigenvalue multisets."""
    a = np.asarray(spec_a, dtype=complex).ravel()
    b = np.asarray(spec_b, dtype=complex).ravel()
    if a.size != b.size:
        raise DimensionError("spectra must have equal cardinality")
    if a.size == 0:
        return 0.0
    D = np.abs(a[:, None] - b[None, :])
    return float(max(D.min(axis=0).max(), D.min(axis=1).max()))


def spectrum(M) -> np.ndarray:
    """Eigenvalues of a real square matrix, with multiplicity.

    Raises:
        numpy.linalg.LinAlgError: if the QR iteration fails to converge.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1]:
        raise DimensionError("spectrum needs a square matrix")
    return np.linalg.eigvals(M)
