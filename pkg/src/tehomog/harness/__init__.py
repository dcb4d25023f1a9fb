"""Experiment harness: configuration, eps sweeps with artifacts, and the CLI."""

from .config import DEFAULT_THRESHOLDS, EXPERIMENTS, ExperimentConfig, config_from_mapping, load_config
from .experiments import ExperimentResult, run_experiment

__all__ = [
    "DEFAULT_THRESHOLDS", "EXPERIMENTS", "ExperimentConfig", "ExperimentResult",
    "config_from_mapping", "load_config", "run_experiment",
]
