"""Exception hierarchy shared across the toolkit."""
from __future__ import annotations


class TorkitError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(TorkitError):
    """A value, config file, or argument violates its contract."""


class UndefinedMetricError(TorkitError):
    """TOR (or a related ratio) is undefined, e.g. zero observed time."""


class TraceParseError(ValidationError):
    """A trace file is malformed; carries a line number when one applies."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DivergedError(TorkitError):
    """The simulator made no forward progress for too many failure cycles."""

    def __init__(self, message: str, stalled_cycles: int):
        self.stalled_cycles = stalled_cycles
        super().__init__(message)
