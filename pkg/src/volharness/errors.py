"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: UsageError -> 1,
DataError -> 2, NumericalError -> 3.
"""


class VolharnessError(Exception):
    """Base class for all package errors."""


class UsageError(VolharnessError):
    """Invalid option, unknown name, or malformed request."""


class DataError(VolharnessError):
    """Input data violates a contract (format, emptiness, ordering)."""


class InputFormatError(DataError):
    """Malformed input file; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line


class BvUndefinedError(DataError):
    """Bipower variation needs at least two intraday returns."""


class NumericalError(VolharnessError):
    """A numerical procedure could not produce a usable result."""
