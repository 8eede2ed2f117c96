"""SVG figures for sweeps: error-vs-N curves with min-max bands and a pole scatter."""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .records import TrialRecord  # noqa: E402

__all__ = ["error_figure", "pole_figure", "emit_plots", "MARGIN"]

MARGIN = 0.05

_RC = {
    "svg.hashsalt": "subid",
    "svg.fonttype": "path",
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
}


def _band(records: Sequence[TrialRecord], metric: str):
    Ns = sorted({r.N for r in records})
    lo, mid, hi = [], [], []
    for N in Ns:
        v = np.array([getattr(r, metric) for r in records if r.N == N], dtype=float)
        v = v[np.isfinite(v)]
        if v.size == 0:
            v = np.array([np.nan])
        lo.append(v.min())
        mid.append(v.mean())
        hi.append(v.max())
    return np.array(Ns, dtype=float), np.array(lo), np.array(mid), np.array(hi)


def error_figure(records: Sequence[TrialRecord], metric: str, ylabel: str, color: str = "tab:red"):
    """Log-log mean error against N, shaded between the per-N min and max."""
    N, lo, mid, hi = _band(records, metric)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 3.6))
        ax.fill_between(N, lo, hi, color=color, alpha=0.25, linewidth=0, gid="band")
        ax.plot(N, mid, "-o", color=color, markersize=3, gid="mean")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.margins(MARGIN)
        ax.set_xlabel("number of trajectories N")
        ax.set_ylabel(ylabel)
        fig.tight_layout()
    return fig


def pole_figure(true_poles, est_poles):
    """True poles as open circles, estimated poles as crosses, with the unit circle."""
    true_poles = np.asarray(true_poles, dtype=complex).ravel()
    est = np.asarray(est_poles, dtype=complex).ravel()
    est = est[np.isfinite(est)]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.2, 4.2))
        th = np.linspace(0.0, 2.0 * np.pi, 361)
        ax.plot(np.cos(th), np.sin(th), color="0.6", linewidth=0.8, gid="unit_circle")
        ax.scatter(est.real, est.imag, marker="+", color="tab:blue", s=25, linewidths=0.8,
                   label="estimated", gid="estimated_poles")
        ax.scatter(true_poles.real, true_poles.imag, marker="o", facecolors="none",
                   edgecolors="tab:red", s=45, linewidths=1.2, label="true", gid="true_poles", zorder=3)
        ax.set_aspect("equal", adjustable="datalim")
        ax.margins(MARGIN)
        ax.set_xlabel("Re")
        ax.set_ylabel("Im")
        ax.legend(loc="upper left", fontsize=8)
        fig.tight_layout()
    return fig


def _save(fig, path: Path) -> Path:
    with plt.rc_context(_RC):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def emit_plots(records: Sequence[TrialRecord], outputs,
               true_poles: Optional[np.ndarray] = None,
               est_poles: Optional[np.ndarray] = None) -> dict:
    """Write error_hankel.svg, error_pole.svg and (given poles) poles.svg."""
    if not records:
        raise ValueError("no records to plot")
    out = Path(outputs)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "error_hankel": _save(error_figure(records, "hankel_err", r"$\|\hat H_T - H_T\|$"),
                              out / "error_hankel.svg"),
        "error_pole": _save(error_figure(records, "pole_err", r"$d_H(\hat A, \bar A)$", color="tab:blue"),
                            out / "error_pole.svg"),
    }
    if true_poles is not None:
        paths["poles"] = _save(pole_figure(true_poles, [] if est_poles is None else est_poles),
                               out / "poles.svg")
    return paths
