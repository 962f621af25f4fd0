"""Realized-volatility measures, HAR-family panel regressions, and the
jump-diffusion simulation lab used as their correctness oracle."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    BvUndefinedError,
    DataError,
    InputFormatError,
    NumericalError,
    UsageError,
    VolharnessError,
)
