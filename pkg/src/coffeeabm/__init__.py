"""Agent-based simulation of a smallholder coffee value chain."""

from importlib.metadata import PackageNotFoundError, version

from .batch import EnsembleStats, convergence_report, run_batch
from .engine import SERIES, TimeSeriesFrame, World, run
from .scenario import ScenarioConfig, builtin_cases, demand_sweep, full_sweep, get_case, weight_sweep

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

__all__ = [
    "SERIES",
    "EnsembleStats",
    "ScenarioConfig",
    "TimeSeriesFrame",
    "World",
    "builtin_cases",
    "convergence_report",
    "demand_sweep",
    "full_sweep",
    "get_case",
    "run",
    "run_batch",
    "weight_sweep",
]
