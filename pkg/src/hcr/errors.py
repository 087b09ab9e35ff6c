"""Exception types shared across the package."""
from __future__ import annotations

__all__ = [
    "HcrError",
    "TableError",
    "MissingCoordinateError",
    "NonpositiveMassError",
    "PositivityError",
]


class HcrError(Exception):
    """Base class for all errors raised by this package."""


class TableError(HcrError):
    """Malformed input table: ragged rows, non-numeric cells, empty input."""


class MissingCoordinateError(HcrError):
    """A coordinate required by the operation is absent from the point."""


class NonpositiveMassError(HcrError):
    """Conditional denominator came out nonpositive for the given evidence.

    Carries the offending denominator so callers can decide between
    repairing the model and falling back to a marginal query.
    """

    def __init__(self, message: str, denominator: float):
        super().__init__(message)
        self.denominator = denominator


class PositivityError(HcrError):
    """Positivity safeguard could not be satisfied (backtracking exhausted)."""
