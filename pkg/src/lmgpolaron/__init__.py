"""Dissipative Lipkin-Meshkov-Glick model: exact spectra, oscillator limit,
weak- and polaron-frame reservoir rates, and waiting-time statistics."""

__version__ = "0.1.0"

from .core import BathParams, LmgParams, Phase, classify_phase  # noqa: E402
from .errors import (CapacityError, ConvergenceError, CriticalPointError,  # noqa: E402
                     InsufficientStatisticsError, LmgError, NumericalError,
                     TruncationError, TruncationWarning, ValidationError)

__all__ = [
    "BathParams", "LmgParams", "Phase", "classify_phase",
    "LmgError", "ValidationError", "CriticalPointError", "CapacityError",
    "NumericalError", "ConvergenceError", "TruncationError",
    "InsufficientStatisticsError", "TruncationWarning",
]
