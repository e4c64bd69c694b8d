"""Bayesian comparison and averaging of two-level binomial models through
posterior deviance distributions."""

__version__ = "0.1.0"

from ._accel import NUMBA_ENABLED
from .dataset import CityRecord, DataError, Dataset, load_csv, missouri
from .models import Model
from .pipeline import Analysis, run_analysis

__all__ = [
    "NUMBA_ENABLED",
    "Analysis",
    "CityRecord",
    "DataError",
    "Dataset",
    "Model",
    "load_csv",
    "missouri",
    "run_analysis",
]
