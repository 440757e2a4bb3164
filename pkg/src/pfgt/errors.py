"""Exception and warning types shared across the package."""

from __future__ import annotations


class PfgtError(Exception):
    """Base class for all errors raised by this package."""


class NumericalFailure(PfgtError):
    """A non-finite value appeared in a field or a time step."""


class StabilityWarning(UserWarning):
    """An explicit time step exceeds the documented stability limit."""


class BoundedWithoutClosure(PfgtError):
    """A bounded-grid operator was called without enough ghost layers."""


class SingularClosure(PfgtError):
    """The linear system for the ghost values of a boundary closure is singular."""


class FitFailure(PfgtError):
    """A growth-rate fit could not be performed on the recorded amplitudes."""


class DegenerateFrame(PfgtError):
    """A deformed surface frame is too ill-conditioned to normalize."""


class FormatError(PfgtError):
    """A snapshot file does not match the expected layout."""


class ConfigError(PfgtError):
    """A run configuration is invalid.

    Attributes
    ----------
    key:
        The offending configuration key (may be empty for syntax errors).
    line:
        One-based line number in the source text, or ``None`` when the error
        concerns a missing key.
    reason:
        Human-readable description of the problem.
    """

    def __init__(self, key: str, line: int | None, reason: str):
        self.key = key
        self.line = line
        self.reason = reason
        if key:
            where = f"line {line}" if line is not None else "missing"
            message = f"{key} ({where}): {reason}"
        else:
            message = f"line {line}: {reason}" if line is not None else reason
        super().__init__(message)
