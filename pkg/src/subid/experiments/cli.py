"""Command line entry point: ``subid {identify,experiment,bounds,simulate}``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from ..bounds import BoundInputs, bound_report
from ..estimator import run_sim
from ..exceptions import SubIdError
from ..kalman import kalman_model
from ..metrics import aligned_errors, spectrum
from ..simulate import simulate_innovation_form, simulate_state_space
from .config import ExperimentConfig, load_config, resolve_system
from .io import write_batch, write_rows
from .runner import SUMMARY_FIELDS, grid_context, horizon, run_experiment, simulate_for, trial_seed

DEFAULT_PRESET = "two_mass_stable"


def _config(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = ExperimentConfig(system=args.preset or DEFAULT_PRESET,
                               n_grid=tuple(range(500, 5001, 500)))
    return cfg.with_overrides(system=args.preset if args.config and args.preset else None,
                              seed=args.seed, trials=args.trials, outputs=args.out)


def _emit(rows, out=None):
    w = csv.writer(out or sys.stdout, lineterminator="\n")
    for row in rows:
        w.writerow(row)


def _f(v) -> str:
    return format(float(v), ".17g")


def _matrix_rows(name, M):
    M = np.atleast_2d(M)
    return [[name, i] + [_f(v) for v in M[i]] for i in range(M.shape[0])]


def cmd_experiment(args) -> int:
    cfg = _config(args)
    res = run_experiment(cfg, workers=args.workers, timing=args.timing, plots=not args.no_plots)
    w = csv.DictWriter(sys.stdout, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
    w.writeheader()
    for row in res.summary:
        w.writerow(row)
    for name, path in res.paths.items():
        print(f"# wrote {name}: {path}", file=sys.stderr)
    return 0


def cmd_identify(args) -> int:
    cfg = _config(args)
    system = resolve_system(cfg.system)
    model = kalman_model(system)
    N = args.N or cfg.n_grid[0]
    T = args.T or horizon(N, cfg.t_rule, system.n, system.m)
    ctx = grid_context(system, model, N, T, cfg.delta)
    seed = trial_seed(cfg.seed, N, 0)
    est = run_sim(simulate_for(ctx, seed, cfg.x0_rule), system.n)
    err = aligned_errors(ctx.truth, est)

    rows = [["N", N], ["T", T], ["seed", seed], ["sigma_n_H", _f(ctx.sigma_n)]]
    rows += _matrix_rows("A_hat", est.A_hat) + _matrix_rows("C_hat", est.C_hat) + _matrix_rows("K_hat", est.K_hat)
    rows += [["pole", i, _f(p.real), _f(p.imag)] for i, p in enumerate(spectrum(est.A_hat))]
    for k in ("hankel_err", "C_err", "K_err", "A_err", "pole_err", "markov_err"):
        rows.append([k, _f(getattr(err, k))])
    if ctx.bounds is not None:
        for k in ("hankel_bound", "ck_bound", "a_bound", "pole_bound"):
            rows.append([k, _f(getattr(ctx.bounds, k))])
    rows.append(["perturbation_ok", str(err.hankel_err <= ctx.sigma_n / 4.0).lower()])
    _emit(rows)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "identify.csv", "w", newline="") as fh:
            _emit(rows, fh)
    return 0


def cmd_bounds(args) -> int:
    cfg = _config(args)
    system = resolve_system(cfg.system)
    model = kalman_model(system)
    N = args.N or cfg.n_grid[-1]
    T = args.T or horizon(N, cfg.t_rule, system.n, system.m)
    delta = args.delta if args.delta is not None else cfg.delta
    inputs = BoundInputs.from_model(system, model, T, N, delta)
    rep = bound_report(inputs)
    rows = [["N", N], ["T", T], ["delta", delta], ["sigma_n_H", _f(inputs.sigma_n_H)]]
    rows += [[k, v if v is None or isinstance(v, int) else _f(v)] for k, v in rep.as_dict().items()]
    _emit(rows)
    if args.out:
        write_rows([rep.as_dict()], list(rep.as_dict()), Path(args.out) / "bounds.csv")
    return 0


def cmd_simulate(args) -> int:
    cfg = _config(args)
    system = resolve_system(cfg.system)
    model = kalman_model(system)
    N = args.N or cfg.n_grid[0]
    T = args.T or horizon(N, cfg.t_rule, system.n, system.m)
    if args.form == "innovation":
        batch = simulate_innovation_form(model, N, T, cfg.seed)
    else:
        batch = simulate_state_space(system, model.P, N, T, cfg.seed, x0_rule=cfg.x0_rule
                                     if cfg.x0_rule != "dare_P" else "stationary")
    out = Path(args.out or "batch.sidb")
    if out.is_dir():
        out = out / "batch.sidb"
    write_batch(batch, out)
    print(f"wrote {out} (n={batch.n}, m={batch.m}, T={T}, N={N}, seed={cfg.seed})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="subid", description="Subspace identification experiments")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", metavar="PATH")
        sp.add_argument("--out", metavar="DIR")
        sp.add_argument("--seed", type=int, metavar="U64")
        sp.add_argument("--trials", type=int, metavar="K")
        sp.add_argument("--preset", metavar="NAME")
        sp.add_argument("-v", "--verbose", action="store_true")
        return sp

    sp = common(sub.add_parser("experiment", help="full Monte-Carlo sweep"))
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--timing", action="store_true", help="record per-trial wall time")
    sp.add_argument("--no-plots", action="store_true")
    sp.set_defaults(func=cmd_experiment)

    sp = common(sub.add_parser("identify", help="one identification with errors"))
    sp.add_argument("--N", type=int)
    sp.add_argument("--T", type=int)
    sp.set_defaults(func=cmd_identify)

    sp = common(sub.add_parser("bounds", help="print the bound report"))
    sp.add_argument("--N", type=int)
    sp.add_argument("--T", type=int)
    sp.add_argument("--delta", type=float)
    sp.set_defaults(func=cmd_bounds)

    sp = common(sub.add_parser("simulate", help="write a trajectory batch (SIDB1)"))
    sp.add_argument("--N", type=int)
    sp.add_argument("--T", type=int)
    sp.add_argument("--form", choices=("innovation", "state_space"), default="innovation")
    sp.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SubIdError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
