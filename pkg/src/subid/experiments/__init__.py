"""Config-driven Monte-Carlo sweeps, persistence, figures and the CLI."""

from .config import ExperimentConfig, load_config, parse_config
from .io import read_batch, read_csv, write_batch, write_csv
from .plotting import emit_plots
from .records import TrialRecord
from .runner import ExperimentResult, fit_decay_rate, run_experiment, summarize

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "TrialRecord",
    "emit_plots",
    "fit_decay_rate",
    "load_config",
    "parse_config",
    "read_batch",
    "read_csv",
    "run_experiment",
    "summarize",
    "write_batch",
    "write_csv",
]
