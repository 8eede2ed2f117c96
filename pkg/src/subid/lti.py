"""Discrete-time stochastic LTI systems and their structured matrices.

Holds the two model containers used everywhere else (raw state-space form and
steady-state innovation form), the block matrices built from them, a Padé
matrix exponential and the two-mass spring-damper benchmark.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError, NonPhysicalParameters

__all__ = [
    "StateSpaceModel",
    "InnovationModel",
    "StructuredMatrices",
    "AssumptionReport",
    "validate_assumptions",
    "observability_matrix",
    "reversed_controllability",
    "hankel_true",
    "toeplitz_true",
    "structured_matrices",
    "matrix_exponential",
    "build_two_mass",
    "TWO_MASS_STABLE",
    "TWO_MASS_MARGINAL",
    "PRESETS",
    "preset_model",
    "max_abs_entry",
]


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float, copy=True, ndmin=2)
    arr.setflags(write=False)
    return arr


def _symmetric(M: np.ndarray, rtol: float = 1e-10) -> bool:
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    return bool(np.max(np.abs(M - M.T), initial=0.0) <= rtol * scale)


def max_abs_entry(M) -> float:
    """Largest absolute entry of ``M`` (the c-bar / k-bar constants)."""
    M = np.asarray(M, dtype=float)
    return float(np.max(np.abs(M))) if M.size else 0.0


@dataclass(frozen=True)
class StateSpaceModel:
    """x_{k+1} = A x_k + w_k,  y_k = C x_k + v_k  with w ~ N(0, Q), v ~ N(0, R)."""

    A: np.ndarray
    C: np.ndarray
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        for name in ("A", "C", "Q", "R"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        n, m = self.A.shape[0], self.C.shape[0]
        if self.A.shape != (n, n):
            raise DimensionError(f"A must be square, got {self.A.shape}")
        if self.C.shape != (m, n):
            raise DimensionError(f"C must be {m}x{n}, got {self.C.shape}")
        if self.Q.shape != (n, n):
            raise DimensionError(f"Q must be {n}x{n}, got {self.Q.shape}")
        if self.R.shape != (m, m):
            raise DimensionError(f"R must be {m}x{m}, got {self.R.shape}")
        if not (_symmetric(self.Q) and _symmetric(self.R)):
            raise ValueError("Q and R must be symmetric")
        if np.min(np.linalg.eigvalsh(self.Q)) < -1e-12 * max(1.0, np.linalg.norm(self.Q, 2)):
            raise ValueError("Q must be positive semidefinite")
        if np.min(np.linalg.eigvalsh(self.R)) <= 0:
            raise ValueError("R must be positive definite")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class InnovationModel:
    """x̂_{k+1} = A x̂_k + K e_k,  y_k = C x̂_k + e_k  with e ~ N(0, S)."""

    A: np.ndarray
    C: np.ndarray
    K: np.ndarray
    P: np.ndarray
    S: np.ndarray

    def __post_init__(self):
        for name in ("A", "C", "K", "P", "S"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        n, m = self.A.shape[0], self.C.shape[0]
        expected = {"A": (n, n), "C": (m, n), "K": (n, m), "P": (n, n), "S": (m, m)}
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise DimensionError(f"{name} must be {shape}, got {getattr(self, name).shape}")
        if not (_symmetric(self.P) and _symmetric(self.S)):
            raise ValueError("P and S must be symmetric")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.C.shape[0]

    @property
    def A_C(self) -> np.ndarray:
        """Closed-loop filter matrix A - K C."""
        return self.A - self.K @ self.C


@dataclass(frozen=True)
class StructuredMatrices:
    gamma: np.ndarray
    ctrl: np.ndarray
    hankel: np.ndarray
    toeplitz: np.ndarray
    horizon: int


@dataclass
class AssumptionReport:
    """Per-item diagnostics for the identifiability assumptions.

    ``observable`` and ``controllable`` compare numerical rank to n;
    ``eigen_ok`` requires real, pairwise distinct eigenvalues inside
    [-1 - tol, 1 + tol].  Margins are the raw measured quantities.
    """

    observable: bool
    controllable: bool
    eigen_real: bool
    eigen_distinct: bool
    eigen_in_range: bool
    obs_rank: int
    ctrl_rank: int
    obs_sigma_min_rel: float
    ctrl_sigma_min_rel: float
    min_eigen_gap: float
    max_abs_eigen: float
    max_abs_imag: float
    eigenvalues: np.ndarray = field(repr=False)

    @property
    def eigen_ok(self) -> bool:
        return self.eigen_real and self.eigen_distinct and self.eigen_in_range

    @property
    def ok(self) -> bool:
        return self.observable and self.controllable and self.eigen_ok


def _numerical_rank(M: np.ndarray, tol: float) -> tuple[int, float]:
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0, 0.0
    return int(np.sum(s > tol * s[0])), float(s[-1] / s[0])


def _psd_sqrt(Q: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(Q)
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T


def validate_assumptions(model: StateSpaceModel, tol: float = 1e-10,
                         eig_tol: float | None = None) -> AssumptionReport:
    """Check observability, noise controllability and the real-spectrum condition.

    Never raises; every check is reported with its margin.  ``eig_tol``
    defaults to ``1e-8 * max(1, ||A||)`` and governs realness, distinctness
    and the [-1, 1] range test.
    """
    A, C, n = model.A, model.C, model.n
    O = observability_matrix(A, C, n)
    obs_rank, obs_rel = _numerical_rank(O, tol)

    Qh = _psd_sqrt(model.Q)
    blocks, cur = [], Qh
    for _ in range(n):
        blocks.append(cur)
        cur = A @ cur
    ctrl_rank, ctrl_rel = _numerical_rank(np.hstack(blocks), tol)

    if eig_tol is None:
        eig_tol = 1e-8 * max(1.0, float(np.linalg.norm(A, 2)))
    lam = np.linalg.eigvals(A)
    max_imag = float(np.max(np.abs(lam.imag))) if n else 0.0
    if n > 1:
        diffs = np.abs(lam[:, None] - lam[None, :])
        gap = float(np.min(diffs[~np.eye(n, dtype=bool)]))
    else:
        gap = math.inf
    max_abs = float(np.max(np.abs(lam))) if n else 0.0
    in_range = bool(np.all(np.abs(lam) <= 1.0 + eig_tol))

    return AssumptionReport(
        observable=obs_rank == n,
        controllable=ctrl_rank == n,
        eigen_real=max_imag <= eig_tol,
        eigen_distinct=gap > eig_tol,
        eigen_in_range=in_range,
        obs_rank=obs_rank,
        ctrl_rank=ctrl_rank,
        obs_sigma_min_rel=obs_rel,
        ctrl_sigma_min_rel=ctrl_rel,
        min_eigen_gap=gap,
        max_abs_eigen=max_abs,
        max_abs_imag=max_imag,
        eigenvalues=lam,
    )


def observability_matrix(A, C, T: int) -> np.ndarray:
    """Stack [C; CA; ...; CA^{T-1}] into a (T m) x n matrix."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if T < 1:
        raise ValueError("T must be >= 1")
    if A.shape[0] != A.shape[1] or C.shape[1] != A.shape[0]:
        raise DimensionError(f"incompatible A {A.shape} and C {C.shape}")
    rows, cur = [], C
    for _ in range(T):
        rows.append(cur)
        cur = cur @ A
    return np.vstack(rows)


def reversed_controllability(A, K, C, T: int) -> np.ndarray:
    """Return [(A-KC)^{T-1} K, ..., (A-KC) K, K] as an n x (T m) matrix."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    K = np.atleast_2d(np.asarray(K, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if T < 1:
        raise ValueError("T must be >= 1")
    n = A.shape[0]
    if A.shape != (n, n) or K.shape[0] != n or C.shape != (K.shape[1], n):
        raise DimensionError(f"incompatible A {A.shape}, K {K.shape}, C {C.shape}")
    A_C = A - K @ C
    cols, cur = [], K
    for _ in range(T):
        cols.append(cur)
        cur = A_C @ cur
    return np.hstack(cols[::-1])


def _check_horizon(model: InnovationModel, T: int) -> None:
    if T < 1:
        raise ValueError("T must be >= 1")
    if T * model.m < model.n:
        raise DimensionError(f"T*m = {T * model.m} < n = {model.n}; H_T cannot reach rank n")


def hankel_true(model: InnovationModel, T: int) -> np.ndarray:
    """H_T = Gamma_T K_T, block (i, j) = C A^{i-1} (A-KC)^{T-j} K."""
    _check_horizon(model, T)
    return (observability_matrix(model.A, model.C, T)
            @ reversed_controllability(model.A, model.K, model.C, T))


def toeplitz_true(model: InnovationModel, T: int) -> np.ndarray:
    """Block lower-triangular J_T with I_m on the diagonal and C A^{i-j-1} K below."""
    if T < 1:
        raise ValueError("T must be >= 1")
    m = model.m
    J = np.zeros((T * m, T * m))
    markov = [np.eye(m)]
    cur = model.K
    for _ in range(T - 1):
        markov.append(model.C @ cur)
        cur = model.A @ cur
    for i in range(T):
        for j in range(i + 1):
            J[i * m:(i + 1) * m, j * m:(j + 1) * m] = markov[i - j]
    return J


def structured_matrices(model: InnovationModel, T: int) -> StructuredMatrices:
    _check_horizon(model, T)
    gamma = observability_matrix(model.A, model.C, T)
    ctrl = reversed_controllability(model.A, model.K, model.C, T)
    return StructuredMatrices(gamma=gamma, ctrl=ctrl, hankel=gamma @ ctrl,
                              toeplitz=toeplitz_true(model, T), horizon=T)


# Padé(13) coefficients and the 1-norm threshold below which no scaling is
# needed for double precision (Higham 2005).
_PADE13 = (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
           1187353796428800.0, 129060195264000.0, 10559470521600.0,
           670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
           960960.0, 16380.0, 182.0, 1.0)
_THETA13 = 5.371920351148152


def _nilpotent_series(M: np.ndarray):
    """Finite Taylor sum if some power M^k (k <= n) is exactly zero, else None."""
    n = M.shape[0]
    E, term = np.eye(n) + M, M
    for k in range(2, n + 1):
        term = term @ M / k
        if not term.any():
            return E
        E = E + term
    return None


def matrix_exponential(M, tol: float = 1e-13) -> np.ndarray:
    """exp(M) by scaling and squaring with a degree-13 diagonal Padé approximant.

    ``tol`` is only used to sanity-check the result for non-finite entries;
    the Padé(13) scheme targets unit roundoff on its own.

    Raises:
        OverflowError: for non-finite input or if the result overflows.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1]:
        raise DimensionError("matrix_exponential needs a square matrix")
    if not np.all(np.isfinite(M)):
        raise OverflowError("matrix has non-finite entries")
    n = M.shape[0]
    I = np.eye(n)
    norm1 = float(np.max(np.sum(np.abs(M), axis=0))) if n else 0.0
    if norm1 == 0.0:
        return I
    series = _nilpotent_series(M)
    if series is not None:
        return series
    s = max(0, int(math.ceil(math.log2(norm1 / _THETA13))))
    if s > 1000:
        raise OverflowError("matrix norm too large for scaling and squaring")
    X = M / (2.0 ** s)
    b = _PADE13
    X2 = X @ X
    X4 = X2 @ X2
    X6 = X2 @ X4
    U = X @ (X6 @ (b[13] * X6 + b[11] * X4 + b[9] * X2)
             + b[7] * X6 + b[5] * X4 + b[3] * X2 + b[1] * I)
    V = (X6 @ (b[12] * X6 + b[10] * X4 + b[8] * X2)
         + b[6] * X6 + b[4] * X4 + b[2] * X2 + b[0] * I)
    E = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        E = E @ E
    if not np.all(np.isfinite(E)):
        raise OverflowError("matrix exponential overflowed")
    return E


def build_two_mass(m1: float = 1.0, m2: float = 1.0, k1: float = 0.5, k2: float = 0.7,
                   k3: float = 0.6, c1: float = 5.0, c2: float = 5.0, Ts: float = 0.1,
                   q_var: float = 1e-4, r_var: float = 1e-4) -> StateSpaceModel:
    """Two masses in series between walls, ZOH-discretized, positions measured.

    State ordering is (q1, q1_dot, q2, q2_dot).
    """
    if m1 <= 0 or m2 <= 0:
        raise NonPhysicalParameters("masses must be positive")
    if Ts <= 0:
        raise NonPhysicalParameters("sampling interval must be positive")
    if q_var <= 0 or r_var <= 0:
        raise NonPhysicalParameters("noise variances must be positive")
    if min(k1, k2, k3, c1, c2) < 0:
        raise NonPhysicalParameters("stiffness and damping must be nonnegative")
    Ac = np.array([
        [0.0, 1.0, 0.0, 0.0],
        [-(k1 + k2) / m1, -(c1 + c2) / m1, k2 / m1, c2 / m1],
        [0.0, 0.0, 0.0, 1.0],
        [k2 / m2, c2 / m2, -(k2 + k3) / m2, -c2 / m2],
    ])
    Ad = matrix_exponential(Ac * Ts)
    Cd = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]])
    return StateSpaceModel(A=Ad, C=Cd, Q=q_var * np.eye(4), R=r_var * np.eye(2))


TWO_MASS_STABLE = dict(m1=1.0, m2=1.0, k1=0.5, k2=0.7, k3=0.6, c1=5.0, c2=5.0,
                       Ts=0.1, q_var=1e-4, r_var=1e-4)
TWO_MASS_MARGINAL = dict(TWO_MASS_STABLE, c1=60.0)

PRESETS = {
    "two_mass_stable": TWO_MASS_STABLE,
    "two_mass_marginal": TWO_MASS_MARGINAL,
}


def preset_model(name: str) -> StateSpaceModel:
    try:
        params = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return build_two_mass(**params)
