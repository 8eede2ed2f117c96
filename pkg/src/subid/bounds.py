"""Closed-form finite-sample error bounds for subspace identification.

All logarithms are natural and every ``||.||`` is the spectral norm.  The
``*_formula`` helpers evaluate the raw expressions for arbitrary scalar
arguments; the functions taking :class:`BoundInputs` additionally enforce the
preconditions under which the bounds are claimed to hold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .estimator import sim_from_hankel
from .exceptions import ThresholdUnmet
from .lti import (InnovationModel, StateSpaceModel, hankel_true, max_abs_entry)

__all__ = [
    "RHO",
    "BoundInputs",
    "BoundReport",
    "HankelBound",
    "RobustnessBounds",
    "NormBounds",
    "matrix_power",
    "sample_threshold",
    "hankel_constants",
    "hankel_bound_formula",
    "hankel_bound",
    "robustness_formula",
    "robustness_bounds",
    "end_to_end_bounds",
    "sigma_n_upper_formula",
    "sigma_n_upper",
    "pole_bound_formula",
    "pole_bound",
    "appendix_norm_bounds",
    "bound_report",
]

RHO = math.exp(math.pi ** 2 / 4)
THRESHOLD_FACTOR = 6.0 + 4.0 * math.sqrt(2.0)


def matrix_power(M: np.ndarray, k: int) -> np.ndarray:
    """M^k by repeated squaring."""
    M = np.asarray(M, dtype=float)
    result = np.eye(M.shape[0])
    base = M
    while k > 0:
        if k & 1:
            result = result @ base
        base = base @ base
        k >>= 1
    return result


@dataclass(frozen=True)
class BoundInputs:
    """Every scalar the bounds depend on, evaluated for one (model, T, N, delta)."""

    model: InnovationModel
    T: int
    N: int
    delta: float
    c_bar: float
    k_bar: float
    sigma_n_H: float
    norm_ACT: float
    norm_P: float
    norm_S: float
    lambda_min_R: float
    norm_A_bar: float

    @property
    def n(self) -> int:
        return self.model.n

    @property
    def m(self) -> int:
        return self.model.m

    @classmethod
    def from_model(cls, system: StateSpaceModel, model: InnovationModel, T: int, N: int,
                   delta: float) -> "BoundInputs":
        H = hankel_true(model, T)
        sv = np.linalg.svd(H, compute_uv=False)
        sigma_n = float(sv[model.n - 1])
        A_bar = sim_from_hankel(H, model.n, model.m).A_hat if sigma_n > 0 else model.A
        return cls(
            model=model, T=T, N=N, delta=delta,
            c_bar=max_abs_entry(model.C),
            k_bar=max_abs_entry(model.K),
            sigma_n_H=sigma_n,
            norm_ACT=float(np.linalg.norm(matrix_power(model.A_C, T), 2)),
            norm_P=float(np.linalg.norm(model.P, 2)),
            norm_S=float(np.linalg.norm(model.S, 2)),
            lambda_min_R=float(np.min(np.linalg.eigvalsh(system.R))),
            norm_A_bar=float(np.linalg.norm(A_bar, 2)),
        )


class HankelBound(NamedTuple):
    c1: float
    c2: float
    c3: float
    bound: float


class RobustnessBounds(NamedTuple):
    ck_bound: float
    a_bound: float
    perturbation_ok: bool


class NormBounds(NamedTuple):
    gamma_norm_bound: float
    ctrl_norm_bound: float
    hankel_norm_bound: float
    toeplitz_norm_bound: float


@dataclass(frozen=True)
class BoundReport:
    n_threshold: int
    c1: float
    c2: float
    c3: float
    hankel_bound: float
    ck_bound: float
    a_bound: float
    sigma_n_upper: float
    delta_pole: float
    pole_bound: float
    gamma_norm_bound: float
    ctrl_norm_bound: float
    hankel_norm_bound: float
    toeplitz_norm_bound: float
    perturbation_ok: Optional[bool] = None
    hankel_ratio: Optional[float] = None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def sample_threshold(T: int, m: int, delta: float) -> int:
    """Smallest N with N >= (6 + 4 sqrt 2)(sqrt(T m) + sqrt(2 log(1/delta)))^2."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if T < 1 or m < 1:
        raise ValueError("T and m must be positive")
    return int(math.ceil(THRESHOLD_FACTOR * (math.sqrt(T * m) + math.sqrt(2.0 * math.log(1.0 / delta))) ** 2))


def hankel_constants(m: int, n: int, T: int, N: int, delta: float, c_bar: float, k_bar: float,
                     norm_S: float, norm_P: float) -> tuple[float, float, float]:
    """The three constants of the Hankel error bound (no precondition checks)."""
    damp = 1.0 + c_bar * k_bar * n
    c1 = 4.0 * math.sqrt(2.0 * math.log(9.0 / delta)) * m ** 1.5 * damp * math.sqrt(norm_S)
    c2 = math.sqrt(m * n / T) * c_bar * math.sqrt(norm_P) + m * damp * math.sqrt(norm_S)
    c3 = math.sqrt(m * n) * c_bar * (math.sqrt(3.0) * norm_P / T ** 2
                                    + c1 * math.sqrt(norm_P) / math.sqrt(T * N))
    return c1, c2, c3


def hankel_bound_formula(m: int, n: int, T: int, N: int, delta: float, c_bar: float, k_bar: float,
                         norm_S: float, norm_P: float, lambda_min_R: float,
                         norm_ACT: float) -> HankelBound:
    c1, c2, c3 = hankel_constants(m, n, T, N, delta, c_bar, k_bar, norm_S, norm_P)
    bound = (2.0 / lambda_min_R) * (c1 * c2 + math.sqrt(N) * norm_ACT * c3) * math.sqrt(T ** 5 / N)
    return HankelBound(c1, c2, c3, bound)


def _require_threshold(inputs: BoundInputs) -> None:
    need = sample_threshold(inputs.T, inputs.m, inputs.delta)
    if inputs.N < need:
        raise ThresholdUnmet(f"N = {inputs.N} is below the sample threshold {need} "
                             f"(T={inputs.T}, m={inputs.m}, delta={inputs.delta})")


def hankel_bound(inputs: BoundInputs) -> HankelBound:
    """High-probability (1 - 5 delta) bound on ||Ĥ_T - H_T||.

    Raises:
        ThresholdUnmet: N is below :func:`sample_threshold`.
    """
    _require_threshold(inputs)
    return hankel_bound_formula(inputs.m, inputs.n, inputs.T, inputs.N, inputs.delta,
                                inputs.c_bar, inputs.k_bar, inputs.norm_S, inputs.norm_P,
                                inputs.lambda_min_R, inputs.norm_ACT)


def robustness_formula(n: int, sigma_n: float, ck_tmn: float, hankel_err: float) -> RobustnessBounds:
    """Deterministic perturbation bounds given a Hankel error.

    ``ck_tmn`` is the product c_bar * k_bar * T * m * n.
    """
    ck = math.sqrt(39.0 * n / sigma_n) * hankel_err
    a = (math.sqrt(2.0) + 2.0 * math.sqrt(ck_tmn / sigma_n)) * (math.sqrt(39.0 * n) / sigma_n) * hankel_err
    return RobustnessBounds(ck, a, bool(hankel_err <= sigma_n / 4.0))


def robustness_bounds(inputs: BoundInputs, hankel_err: float) -> RobustnessBounds:
    if inputs.sigma_n_H <= 0:
        raise ValueError("sigma_n(H_T) must be positive")
    ck_tmn = inputs.c_bar * inputs.k_bar * inputs.T * inputs.m * inputs.n
    return robustness_formula(inputs.n, inputs.sigma_n_H, ck_tmn, hankel_err)


def end_to_end_bounds(inputs: BoundInputs) -> tuple[float, float]:
    """(ck_bound, a_bound): the robustness bounds evaluated at the Hankel bound."""
    hb = hankel_bound(inputs)
    rb = robustness_bounds(inputs, hb.bound)
    return rb.ck_bound, rb.a_bound


def sigma_n_upper_formula(n: int, m: int, T: int, c_bar: float, k_bar: float) -> float:
    exponent = ((n - 1) // (2 * m)) / math.log(2 * m * T)
    return 4.0 * c_bar * k_bar * T * m * n * RHO ** (-exponent)


def sigma_n_upper(inputs: BoundInputs) -> float:
    """Upper bound on sigma_n(H_T), decaying super-polynomially in n/m."""
    if inputs.T * inputs.m < inputs.n:
        raise ValueError("requires T >= n/m")
    return sigma_n_upper_formula(inputs.n, inputs.m, inputs.T, inputs.c_bar, inputs.k_bar)


def pole_bound_formula(n: int, delta_pole: float, norm_A_bar: float) -> float:
    return (delta_pole + 2.0 * norm_A_bar) ** (1.0 - 1.0 / n) * delta_pole ** (1.0 / n)


def pole_bound(inputs: BoundInputs) -> tuple[float, float]:
    """(Delta, bound on the Hausdorff distance between estimated and reference poles)."""
    _, delta_pole = end_to_end_bounds(inputs)
    return delta_pole, pole_bound_formula(inputs.n, delta_pole, inputs.norm_A_bar)


def appendix_norm_bounds(model: InnovationModel, T: int) -> NormBounds:
    """c̄√(Tmn), k̄√(Tmn), c̄k̄Tmn and Tm(1 + c̄k̄n), valid for (marginally) stable A."""
    n, m = model.n, model.m
    cb, kb = max_abs_entry(model.C), max_abs_entry(model.K)
    root = math.sqrt(T * m * n)
    return NormBounds(cb * root, kb * root, cb * kb * T * m * n, T * m * (1.0 + cb * kb * n))


def bound_report(inputs: BoundInputs, hankel_err: Optional[float] = None) -> BoundReport:
    """Evaluate every bound; optionally compare against a measured Hankel error."""
    hb = hankel_bound(inputs)
    rb = robustness_bounds(inputs, hb.bound)
    nb = appendix_norm_bounds(inputs.model, inputs.T)
    pert = ratio = None
    if hankel_err is not None:
        pert = bool(hankel_err <= inputs.sigma_n_H / 4.0)
        ratio = hankel_err / hb.bound if hb.bound > 0 else math.inf
    return BoundReport(
        n_threshold=sample_threshold(inputs.T, inputs.m, inputs.delta),
        c1=hb.c1, c2=hb.c2, c3=hb.c3,
        hankel_bound=hb.bound,
        ck_bound=rb.ck_bound,
        a_bound=rb.a_bound,
        sigma_n_upper=sigma_n_upper(inputs),
        delta_pole=rb.a_bound,
        pole_bound=pole_bound_formula(inputs.n, rb.a_bound, inputs.norm_A_bar),
        gamma_norm_bound=nb.gamma_norm_bound,
        ctrl_norm_bound=nb.ctrl_norm_bound,
        hankel_norm_bound=nb.hankel_norm_bound,
        toeplitz_norm_bound=nb.toeplitz_norm_bound,
        perturbation_ok=pert,
        hankel_ratio=ratio,
    )
