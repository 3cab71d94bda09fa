"""Experiment runner: flat-file configuration, named sweeps, CSV/SVG output."""

from .config import ConfigError, RunConfig
from .experiments import EXPERIMENTS, ExperimentSpec, run
from .table import ResultTable

__all__ = ["ConfigError", "RunConfig", "EXPERIMENTS", "ExperimentSpec", "run", "ResultTable"]
