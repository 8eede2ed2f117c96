from __future__ import annotations

from dataclasses import dataclass, fields

__all__ = ["TrialRecord", "RECORD_FIELDS"]


@dataclass(frozen=True)
class TrialRecord:
    """One end-to-end identification at a given N.

    Error fields are NaN for a failed trial.  Bound fields are constant per
    grid point and NaN when the sample threshold is not met.
    """

    N: int
    T: int
    trial: int
    seed: int
    hankel_err: float
    C_err: float
    K_err: float
    A_err: float
    pole_err: float
    markov_err: float
    hankel_bound: float
    a_bound: float
    pole_bound: float
    perturbation_ok: bool
    wall_time: float

    @property
    def failed(self) -> bool:
        return self.hankel_err != self.hankel_err


RECORD_FIELDS = tuple(f.name for f in fields(TrialRecord))
