"""Subspace identification of stochastic LTI systems with finite-sample error bounds."""

from .bounds import BoundInputs, BoundReport, bound_report, sample_threshold
from .estimator import SimEstimate, run_sim, sim_from_hankel
from .kalman import DareSolution, innovation_model, kalman_model, solve_dare
from .lti import (InnovationModel, StateSpaceModel, build_two_mass, hankel_true,
                  matrix_exponential, preset_model)
from .metrics import ErrorReport, aligned_errors, hausdorff_distance, spectrum
from .simulate import TrajectoryBatch, simulate_innovation_form, simulate_state_space

__version__ = "0.1.0"

__all__ = [
    "BoundInputs",
    "BoundReport",
    "DareSolution",
    "ErrorReport",
    "InnovationModel",
    "SimEstimate",
    "StateSpaceModel",
    "TrajectoryBatch",
    "aligned_errors",
    "bound_report",
    "build_two_mass",
    "hankel_true",
    "hausdorff_distance",
    "innovation_model",
    "kalman_model",
    "matrix_exponential",
    "preset_model",
    "run_sim",
    "sample_threshold",
    "sim_from_hankel",
    "simulate_innovation_form",
    "simulate_state_space",
    "solve_dare",
    "spectrum",
]
