"""Reliability evaluation for binary real/fake classifiers.

Prediction logs go in; accuracy, ranking, calibration, uncertainty and
selective-risk diagnostics come out, each with deterministic seeding.
"""

__version__ = "0.1.0"

from .core import PredictionLog, PredictionRecord, decide, sigmoid  # noqa: E402
from .errors import ReliabilityError, ValidationError  # noqa: E402

__all__ = ["PredictionLog", "PredictionRecord", "ReliabilityError", "ValidationError",
           "__version__", "decide", "sigmoid"]
