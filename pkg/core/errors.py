"""
Exception hierarchy for FairForge.

Every error raised on purpose by the engine derives from FairForgeError so
the CLI can map data problems to exit code 2 in one place.
"""
from typing import Optional


class FairForgeError(Exception):
    """Base exception for all FairForge errors."""
    pass


class RecordValidationError(FairForgeError):
    """Exception raised when a prediction log line is invalid."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class DegenerateCohort(FairForgeError):
    """Exception raised when a metric needs a cell the cohort does not have."""
    pass


class DegenerateUtility(FairForgeError):
    """Exception raised when an approach accuracy of zero blocks regularization."""
    pass


class ThresholdPlanError(FairForgeError):
    """Exception raised for incomplete or out-of-range threshold plans."""
    pass


class ShapeMismatchError(FairForgeError):
    """Exception raised when tensor and layer shapes do not line up."""
    pass


class ModelFormatError(FairForgeError):
    """Exception raised for malformed model, tensor or mask files."""
    pass


class PruningError(FairForgeError):
    """Exception raised for invalid pruning requests."""
    pass


class SpecError(FairForgeError):
    """Exception raised for malformed or infeasible synthetic cohort specs."""
    pass
