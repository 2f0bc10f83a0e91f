"""Exception and warning types shared across the package."""
from __future__ import annotations


class SicaError(Exception):
    """Base class; ``category`` is the machine-readable tag the CLI reports."""

    category = "error"


class StabilityViolation(SicaError):
    """A time step produced non-finite or clearly negative values."""

    category = "stability_violation"

    def __init__(self, message: str, time_index: int | None = None):
        super().__init__(message)
        self.time_index = time_index

    def __str__(self) -> str:
        msg = super().__str__()
        if self.time_index is not None:
            return f"{msg} (time index {self.time_index})"
        return msg


class ParseError(SicaError):
    category = "parse_error"

    def __init__(self, message: str, location: str | None = None):
        super().__init__(message)
        self.location = location

    def __str__(self) -> str:
        msg = super().__str__()
        return f"{self.location}: {msg}" if self.location else msg


class ValidationError(SicaError):
    """A configuration value broke a constraint; ``field`` names it."""

    category = "validation_error"

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class NonConvergenceWarning(UserWarning):
    """The forward-backward sweep hit its iteration limit or stalled."""
