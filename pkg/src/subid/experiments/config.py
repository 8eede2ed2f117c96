"""Flat ``key = value`` experiment configuration files.

Example::

    # desk-scale rerun of the stable two-mass sweep
    system  = two_mass_stable
    n_grid  = 500:5000:500
    trials  = 20
    delta   = 0.05
    seed    = 42
    t_rule  = ceil_log_n
    x0_rule = dare_P
    outputs = results/stable

``n_grid`` takes a comma list or an inclusive ``start:stop:step`` range.
``system`` is a preset name or an inline JSON object with keys A, C, Q, R.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Union

import numpy as np

from ..exceptions import ConfigError
from ..lti import PRESETS, StateSpaceModel, preset_model

__all__ = ["ExperimentConfig", "load_config", "parse_config", "resolve_system"]

FIELDS = ("system", "n_grid", "trials", "delta", "seed", "t_rule", "x0_rule", "outputs")
REQUIRED = ("system", "n_grid")


@dataclass(frozen=True)
class ExperimentConfig:
    system: Union[str, StateSpaceModel]
    n_grid: tuple
    trials: int = 20
    delta: float = 0.05
    seed: int = 0
    t_rule: Union[str, int] = "ceil_log_n"
    x0_rule: str = "dare_P"
    outputs: str = "results"

    def __post_init__(self):
        grid = tuple(int(v) for v in self.n_grid)
        object.__setattr__(self, "n_grid", grid)
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError(f"n_grid must be non-empty and strictly increasing, got {grid}")
        if grid[0] < 1:
            raise ConfigError("n_grid entries must be positive")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError("delta must lie in (0, 1)")
        if self.x0_rule not in ("stationary", "dare_P"):
            raise ConfigError(f"x0_rule must be 'stationary' or 'dare_P', got {self.x0_rule!r}")
        if isinstance(self.t_rule, str) and self.t_rule != "ceil_log_n":
            raise ConfigError(f"t_rule must be 'ceil_log_n' or an integer, got {self.t_rule!r}")
        if isinstance(self.t_rule, int) and self.t_rule < 1:
            raise ConfigError("fixed T must be >= 1")
        if isinstance(self.system, str) and self.system not in PRESETS:
            raise ConfigError(f"unknown preset {self.system!r}; choose from {sorted(PRESETS)}")

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    @property
    def system_name(self) -> str:
        return self.system if isinstance(self.system, str) else "inline"


def resolve_system(system: Union[str, StateSpaceModel]) -> StateSpaceModel:
    if isinstance(system, StateSpaceModel):
        return system
    return preset_model(system)


def _parse_grid(text: str, lineno: int) -> tuple:
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) != 3 or parts[2] <= 0:
                raise ValueError
            start, stop, step = parts
            return tuple(range(start, stop + 1, step))
        return tuple(int(p) for p in text.replace(" ", "").split(",") if p)
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse n_grid {text!r}") from None


def _parse_system(text: str, lineno: int):
    if not text.startswith("{"):
        return text
    try:
        d = json.loads(text)
        return StateSpaceModel(A=np.array(d["A"]), C=np.array(d["C"]),
                               Q=np.array(d["Q"]), R=np.array(d["R"]))
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise ConfigError(f"line {lineno}: invalid inline system: {exc}") from None


def parse_config(text: str) -> ExperimentConfig:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            if key == "n_grid":
                values[key] = _parse_grid(value, lineno)
            elif key == "system":
                values[key] = _parse_system(value, lineno)
            elif key in ("trials", "seed"):
                values[key] = int(value)
            elif key == "delta":
                values[key] = float(value)
            elif key == "t_rule":
                values[key] = value if value == "ceil_log_n" else int(value)
            else:
                values[key] = value
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {value!r}") from None
    for key in REQUIRED:
        if key not in values:
            raise ConfigError(f"missing required key {key!r}")
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())
