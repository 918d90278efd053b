"""
Exception hierarchy for survchart.

Validation problems derive from ValueError so callers (and the management
commands) can tell bad input apart from runtime failures.
"""


class SurvchartError(Exception):
    """Base class for every error raised by the monitoring package."""


class DataValidationError(SurvchartError, ValueError):
    """
    Input data or parameters violate the documented schema.

    Args:
        message: Human readable description
        rows: Optional list of offending row numbers (1-based, header = row 1)
    """

    def __init__(self, message, rows=None):
        super().__init__(message)
        self.rows = list(rows or [])


class ModelFitError(SurvchartError, RuntimeError):
    """A risk-adjustment model could not be fitted (degenerate design, separation)."""


class ConvergenceError(ModelFitError):
    """Newton-Raphson / IRLS did not reach the score tolerance."""


class CalibrationError(SurvchartError, RuntimeError):
    """Control limit simulation produced no usable information."""
