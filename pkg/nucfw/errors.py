from typing import Any


class NucFWError(Exception):
    """Base exception for nucfw errors."""


class DimensionMismatchError(NucFWError):
    """Raised when operand shapes do not agree."""


class IndexOutOfBoundsError(NucFWError):
    """Raised when an entry index lies outside the matrix."""


class InfeasibleIterateError(NucFWError):
    """Raised when an iterate leaves the nuclear-norm ball."""


class RankDropUnavailableError(NucFWError):
    """Raised when a rank-drop direction is requested for an iterate of rank < 2."""


class DegenerateStepError(NucFWError):
    """Raised when a rank-drop step size is non-positive or non-finite."""


class DecompositionMismatchError(NucFWError):
    """Raised when the away-step atom set no longer reproduces the factored iterate."""


class LMOError(NucFWError):
    """Raised when the linear minimization oracle produces a non-finite result."""


class UnknownStepError(NucFWError):
    """Raised when the step orchestrator has no handler for a step id."""


class ConfigError(NucFWError):
    """Raised for invalid solver or run configuration."""


class DataError(NucFWError):
    """Base exception for dataset loading and preparation errors."""


class MalformedRatingsError(DataError):
    """Raised when a ratings file line cannot be parsed."""

    def __init__(self, path: str, line_number: int, line: str) -> None:
        super().__init__(f"{path}:{line_number}: cannot parse ratings line {line[:80]!r}")
        self.path = path
        self.line_number = line_number


class EmptyObservationsError(DataError):
    """Raised when an operation needs at least one observed entry."""


class DegenerateDataError(DataError):
    """Raised when the data cannot be split or normalized."""


class SolverError(NucFWError):
    """Raised when a solver run fails; carries the trace recorded so far."""

    def __init__(self, message: str, trace: Any = None) -> None:
        super().__init__(message)
        self.trace = trace
