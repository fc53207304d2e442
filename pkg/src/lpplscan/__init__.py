"""LPPLS bubble detection: windowed calibration, confidence indicators,
post-mortem crash-time densities."""

from .model import LpplsParams, Window
from .optimizer import FitResult, OptimizerConfig, SearchBox, calibrate
from .qualify import FilterConfig, QualificationReport
from .timeseries import CrashStats, PriceSeries, crash_stats, load_csv

__version__ = "0.1.0"

__all__ = [
    "CrashStats",
    "FilterConfig",
    "FitResult",
    "LpplsParams",
    "OptimizerConfig",
    "PriceSeries",
    "QualificationReport",
    "SearchBox",
    "Window",
    "calibrate",
    "crash_stats",
    "load_csv",
    "__version__",
]
