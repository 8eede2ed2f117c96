"""Monte-Carlo sweeps over the number of trajectories N."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..bounds import BoundInputs, BoundReport, bound_report
from ..estimator import SimEstimate, run_sim, sim_from_hankel
from ..exceptions import SubIdError, ThresholdUnmet
from ..kalman import kalman_model
from ..lti import InnovationModel, StateSpaceModel, hankel_true
from ..metrics import aligned_errors, spectrum
from ..simulate import simulate_innovation_form, simulate_state_space
from .config import ExperimentConfig, resolve_system
from .records import TrialRecord

__all__ = [
    "ExperimentResult",
    "GridContext",
    "horizon",
    "trial_seed",
    "grid_context",
    "simulate_for",
    "run_trial",
    "run_experiment",
    "summarize",
    "fit_decay_rate",
    "SUMMARY_FIELDS",
]

logger = logging.getLogger(__name__)

NAN = float("nan")


def horizon(N: int, t_rule, n: int, m: int) -> int:
    """T for a grid point: ceil(ln N) or a fixed value, floored at ceil(n/m) + 1.

    The floor keeps the shift regression Gamma_p (T - 1 block rows) able to
    reach rank n.
    """
    T = math.ceil(math.log(N)) if t_rule == "ceil_log_n" else int(t_rule)
    return max(T, -(-n // m) + 1, 2)


def trial_seed(base_seed: int, N: int, trial: int) -> int:
    """64-bit seed derived from (base seed, N, trial index) only."""
    ss = np.random.SeedSequence([int(base_seed) & ((1 << 64) - 1), int(N), int(trial)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class GridContext:
    """Quantities shared by every trial at one grid point."""

    N: int
    T: int
    system: StateSpaceModel
    model: InnovationModel
    truth: SimEstimate
    sigma_n: float
    bounds: Optional[BoundReport]


def grid_context(system: StateSpaceModel, model: InnovationModel, N: int, T: int,
                 delta: float) -> GridContext:
    H = hankel_true(model, T)
    truth = sim_from_hankel(H, model.n, model.m)
    inputs = BoundInputs.from_model(system, model, T, N, delta)
    try:
        rep = bound_report(inputs)
    except ThresholdUnmet as exc:
        logger.warning("bounds skipped at N=%d: %s", N, exc)
        rep = None
    return GridContext(N=N, T=T, system=system, model=model, truth=truth,
                       sigma_n=inputs.sigma_n_H, bounds=rep)


def simulate_for(ctx: GridContext, seed: int, x0_rule: str = "dare_P"):
    """Innovation-form batch for ``dare_P``; raw state-space batch for ``stationary``."""
    if x0_rule == "dare_P":
        return simulate_innovation_form(ctx.model, ctx.N, ctx.T, seed)
    return simulate_state_space(ctx.system, ctx.model.P, ctx.N, ctx.T, seed, x0_rule=x0_rule)


def run_trial(ctx: GridContext, trial: int, base_seed: int, x0_rule: str = "dare_P",
              timing: bool = False) -> tuple[TrialRecord, np.ndarray]:
    """Simulate, identify and score one trial; numerical failures yield NaN errors."""
    seed = trial_seed(base_seed, ctx.N, trial)
    t0 = time.perf_counter()
    n = ctx.model.n
    try:
        est = run_sim(simulate_for(ctx, seed, x0_rule), n)
        err = aligned_errors(ctx.truth, est)
        poles = spectrum(est.A_hat)
        errs = (err.hankel_err, err.C_err, err.K_err, err.A_err, err.pole_err, err.markov_err)
    except (SubIdError, np.linalg.LinAlgError) as exc:
        logger.warning("trial N=%d #%d failed: %s", ctx.N, trial, exc)
        errs = (NAN,) * 6
        poles = np.full(n, np.nan, dtype=complex)
    b = ctx.bounds
    rec = TrialRecord(
        N=ctx.N, T=ctx.T, trial=trial, seed=seed,
        hankel_err=errs[0], C_err=errs[1], K_err=errs[2], A_err=errs[3],
        pole_err=errs[4], markov_err=errs[5],
        hankel_bound=b.hankel_bound if b else NAN,
        a_bound=b.a_bound if b else NAN,
        pole_bound=b.pole_bound if b else NAN,
        perturbation_ok=bool(errs[0] <= ctx.sigma_n / 4.0),
        wall_time=time.perf_counter() - t0 if timing else 0.0,
    )
    return rec, poles


def _run_trial_task(args):
    return run_trial(*args)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list
    summary: list
    true_poles: np.ndarray
    poles: dict = field(default_factory=dict, repr=False)
    contexts: dict = field(default_factory=dict, repr=False)
    paths: dict = field(default_factory=dict)


SUMMARY_FIELDS = (
    "N", "T", "trials", "failed",
    "hankel_err_mean", "hankel_err_min", "hankel_err_max",
    "pole_err_mean", "pole_err_min", "pole_err_max",
    "A_err_mean", "C_err_mean", "K_err_mean", "markov_err_mean",
    "hankel_bound", "ck_bound", "a_bound", "pole_bound", "sigma_n",
    "cover_hankel", "cover_C", "cover_K", "cover_A", "cover_pole",
    "perturbation_ok_count", "cover_C_cond", "cover_K_cond", "cover_A_cond", "cover_pole_cond",
)


def _frac(mask: np.ndarray) -> float:
    return float(np.mean(mask)) if mask.size else NAN


def summarize(records: Sequence[TrialRecord], contexts: Optional[dict] = None) -> list[dict]:
    """Per-grid-point aggregates and bound-coverage fractions.

    Coverage is the fraction of non-failed trials whose error is at most the
    corresponding bound; the ``*_cond`` variants restrict to trials where the
    perturbation condition held (NaN when there were none).
    """
    contexts = contexts or {}
    rows = []
    for N in sorted({r.N for r in records}):
        rs = [r for r in records if r.N == N]
        ok = [r for r in rs if not r.failed]
        arr = {k: np.array([getattr(r, k) for r in ok], dtype=float)
               for k in ("hankel_err", "pole_err", "A_err", "C_err", "K_err", "markov_err")}
        pert = np.array([r.perturbation_ok for r in ok], dtype=bool)
        ctx = contexts.get(N)
        b = ctx.bounds if ctx is not None else None
        hb = rs[0].hankel_bound
        ab = rs[0].a_bound
        pb = rs[0].pole_bound
        ckb = b.ck_bound if b else NAN

        def stat(fn, k):
            return float(fn(arr[k])) if arr[k].size else NAN

        cover = {
            "hankel": arr["hankel_err"] <= hb,
            "C": arr["C_err"] <= ckb,
            "K": arr["K_err"] <= ckb,
            "A": arr["A_err"] <= ab,
            "pole": arr["pole_err"] <= pb,
        }
        row = {
            "N": N, "T": rs[0].T, "trials": len(rs), "failed": len(rs) - len(ok),
            "hankel_err_mean": stat(np.mean, "hankel_err"),
            "hankel_err_min": stat(np.min, "hankel_err"),
            "hankel_err_max": stat(np.max, "hankel_err"),
            "pole_err_mean": stat(np.mean, "pole_err"),
            "pole_err_min": stat(np.min, "pole_err"),
            "pole_err_max": stat(np.max, "pole_err"),
            "A_err_mean": stat(np.mean, "A_err"),
            "C_err_mean": stat(np.mean, "C_err"),
            "K_err_mean": stat(np.mean, "K_err"),
            "markov_err_mean": stat(np.mean, "markov_err"),
            "hankel_bound": hb, "ck_bound": ckb, "a_bound": ab, "pole_bound": pb,
            "sigma_n": ctx.sigma_n if ctx is not None else NAN,
            "perturbation_ok_count": int(pert.sum()),
        }
        for k, mask in cover.items():
            row[f"cover_{k}"] = _frac(mask)
            if k != "hankel":
                row[f"cover_{k}_cond"] = _frac(mask[pert])
        rows.append(row)
    return rows


def fit_decay_rate(records: Sequence[TrialRecord], metric: str) -> dict:
    """OLS fit of log(mean metric) against log N across grid points."""
    Ns = sorted({r.N for r in records})
    if len(Ns) < 3:
        raise ValueError(f"need at least 3 grid points, got {len(Ns)}")
    means = []
    for N in Ns:
        vals = [getattr(r, metric) for r in records if r.N == N]
        vals = [v for v in vals if v == v]
        if not vals:
            raise ValueError(f"no finite {metric} values at N={N}")
        means.append(np.mean(vals))
    x, y = np.log(np.array(Ns, dtype=float)), np.log(np.array(means))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return {"slope": float(slope), "intercept": float(intercept), "r2": r2}


def run_experiment(config: ExperimentConfig, workers: int = 1, timing: bool = False,
                   write: bool = True, plots: bool = True) -> ExperimentResult:
    """Run the full sweep described by ``config``.

    Results do not depend on ``workers``: each trial's randomness comes only
    from (seed, N, trial).  With ``write`` the trial CSV, summary CSV and (with
    ``plots``) the SVG figures go to ``config.outputs``.  ``wall_time`` is
    recorded only with ``timing``, so that default output is byte-reproducible.
    """
    system = resolve_system(config.system)
    model = kalman_model(system)
    contexts = {}
    tasks = []
    for N in config.n_grid:
        T = horizon(N, config.t_rule, system.n, system.m)
        ctx = grid_context(system, model, N, T, config.delta)
        contexts[N] = ctx
        tasks.extend((ctx, k, config.seed, config.x0_rule, timing) for k in range(config.trials))

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_trial_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        results = [_run_trial_task(t) for t in tasks]

    records = [r for r, _ in results]
    poles: dict = {}
    for rec, p in results:
        poles.setdefault(rec.N, []).append(p)
    result = ExperimentResult(
        config=config,
        records=records,
        summary=summarize(records, contexts),
        true_poles=spectrum(system.A),
        poles={N: np.array(v) for N, v in poles.items()},
        contexts=contexts,
    )
    if write:
        from .io import write_csv, write_rows

        out = Path(config.outputs)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(records, out / "trials.csv")
        write_rows(result.summary, SUMMARY_FIELDS, out / "summary.csv")
        result.paths = {"trials": out / "trials.csv", "summary": out / "summary.csv"}
        if plots:
            from .plotting import emit_plots

            result.paths.update(emit_plots(records, out, true_poles=result.true_poles,
                                           est_poles=result.poles[config.n_grid[-1]]))
    return result
