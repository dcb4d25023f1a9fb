"""Experiment configuration read from a TOML file.

Schema (every key optional except where noted)::

    [profile]                       # required for experiment/suite
    kind = "piecewise"              # or constant, trigonometric, sampled, named
    breakpoints = [[0.0, 2.0], [0.5, 4.0]]

    [run]
    output_dir = "out"
    tau = 10.0                      # spectral parameter of the resolvent sweeps E1-E4
    tau_window = [1.0, 200.0]       # where the homogenized eigenvalue is searched
    eigen_index = 0                 # which homogenized eigenvalue (0 = first)
    eps_list = [0.125, 0.0625, 0.03125, 0.015625]
    delta = 0.5                     # cutoff for the fixed-delta sequences
    N_list = [8, 16, 32, 64]        # eps_k = 1 / (N_k + delta)
    points_per_period = 32
    base_m = 2001                   # mesh for E6/E7 and homogenized-only solves
    scan_step = 0.01                # sign-scan step when locating tau_eps
    h_list = [1e-2, 5e-3, 2.5e-3]   # E7 finite-difference steps

    [thresholds]                    # minimum slopes (and E4 maximum ratio)
    E1 = 0.9

    [E5]                            # per-experiment overrides of [run] keys
    points_per_period = 64
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

from ..errors import ConfigError, TehomogError
from ..periodic_media import PeriodicIndex, named_profile

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

EXPERIMENTS = ("E1", "E2", "E3", "E4", "E5", "E6", "E7", "E8")

# Asymptotic order minus a safety margin for preasymptotic effects.
DEFAULT_THRESHOLDS = {
    "E1": 0.9,          # O(eps) in H^2, margin 0.1
    "E2": 0.9,          # O(eps) in L^2, margin 0.1
    "E2_corrected": 1.7,  # O(eps^2) in L^2, margin 0.3
    "E3": 1.7,          # O(eps^2) in H^2, margin 0.3
    "E4": 2.0,          # max/min of ||theta||, not a slope
    "E5": 1.7,          # O(eps^2) remainder, margin 0.3
    "E5_relative": 0.05,  # (tau_eps - tau_0)/eps against tau1 at the finest eps
    "E6": 1e-3,         # relative gap at base_m, not a slope
    "E6_order": 1.9,    # O(h^2) refinement order of the gap, margin 0.1
    "E7": 1.8,          # O(h^2) remainder, margin 0.2
    "E8": 1.7,          # O(eps^2), margin 0.3
    "theta_limit": 0.8,  # O(eps) corrector convergence, margin 0.2
}

_RUN_KEYS = {
    "output_dir", "tau", "tau_window", "eigen_index", "eps_list", "delta", "N_list",
    "points_per_period", "base_m", "scan_step", "h_list",
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    profile: PeriodicIndex
    tau: float = 10.0
    tau_window: tuple[float, float] = (1.0, 200.0)
    eigen_index: int = 0
    eps_list: tuple[float, ...] = (1 / 8, 1 / 16, 1 / 32, 1 / 64)
    delta: float = 0.5
    N_list: tuple[int, ...] = (8, 16, 32, 64)
    points_per_period: int = 32
    base_m: int = 2001
    scan_step: float = 0.01
    h_list: tuple[float, ...] = (1e-2, 5e-3, 2.5e-3)
    output_dir: Path = Path("out")
    thresholds: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if len(self.eps_list) < 3 or any(not 0 < e < 1 for e in self.eps_list):
            raise ConfigError("eps_list needs at least 3 values in (0, 1)")
        if len(set(self.eps_list)) != len(self.eps_list):
            raise ConfigError("eps_list values must be distinct")
        if len(self.N_list) < 3 or any(b <= a for a, b in zip(self.N_list, self.N_list[1:])):
            raise ConfigError("N_list needs at least 3 strictly increasing integers")
        if any(n < 1 for n in self.N_list):
            raise ConfigError("N_list entries must be positive")
        if not 0.0 <= self.delta < 1.0:
            raise ConfigError("delta must lie in [0, 1)")
        if self.points_per_period < 16:
            raise ConfigError("points_per_period must be at least 16 (resolution rule)")
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ConfigError("tau must be positive")
        lo, hi = self.tau_window
        if not 0 < lo < hi:
            raise ConfigError("tau_window must satisfy 0 < lo < hi")
        if self.base_m < 9 or self.base_m % 2 == 0:
            raise ConfigError("base_m must be an odd integer >= 9")
        if len(self.h_list) < 3:
            raise ConfigError("h_list needs at least 3 steps")

    def threshold(self, key: str) -> float:
        return float(self.thresholds.get(key, DEFAULT_THRESHOLDS[key]))

    def for_experiment(self, experiment: str) -> "ExperimentConfig":
        return replace(self, experiment=experiment)


def _profile(spec: Any) -> PeriodicIndex:
    if isinstance(spec, str):
        return named_profile(spec)
    if not isinstance(spec, Mapping):
        raise ConfigError("[profile] must be a table or a profile name")
    try:
        return PeriodicIndex.from_spec(spec)
    except ConfigError:
        raise
    except TehomogError as exc:
        raise ConfigError(f"invalid profile: {exc}") from exc


def _coerce(key: str, value: Any) -> Any:
    try:
        if key in ("eps_list", "h_list"):
            return tuple(float(v) for v in value)
        if key == "N_list":
            return tuple(int(v) for v in value)
        if key == "tau_window":
            lo, hi = value
            return (float(lo), float(hi))
        if key in ("points_per_period", "base_m", "eigen_index"):
            if int(value) != value:
                raise ValueError("not an integer")
            return int(value)
        if key == "output_dir":
            return Path(value)
        return float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key!r}: {value!r}") from exc


def config_from_mapping(data: Mapping[str, Any], experiment: str) -> ExperimentConfig:
    if "profile" not in data:
        raise ConfigError("config needs a [profile] table")
    unknown = set(data) - {"profile", "run", "thresholds", *EXPERIMENTS}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    kwargs: dict[str, Any] = {}
    for section in ("run", experiment):
        table = data.get(section, {})
        if not isinstance(table, Mapping):
            raise ConfigError(f"[{section}] must be a table")
        for key, value in table.items():
            if key not in _RUN_KEYS:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            kwargs[key] = _coerce(key, value)
    thresholds = dict(DEFAULT_THRESHOLDS)
    for key, value in dict(data.get("thresholds", {})).items():
        if key not in DEFAULT_THRESHOLDS:
            raise ConfigError(f"unknown threshold {key!r}")
        thresholds[key] = _coerce(key, value)
    return ExperimentConfig(experiment=experiment, profile=_profile(data["profile"]), thresholds=thresholds, **kwargs)


def load_config(path: str | Path, experiment: str) -> ExperimentConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}") from exc
    return config_from_mapping(data, experiment)
