"""Exception hierarchy shared by every pipeline stage.

The CLI maps these onto process exit codes: data problems exit with 2,
numeric failures with 3.
"""

from __future__ import annotations


class GaitlineError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 2


class DataError(GaitlineError, ValueError):
    """Input data violates a format or content contract."""

    exit_code = 2


class ParseError(DataError):
    """A sensor or marker file line could not be parsed."""

    def __init__(self, message: str, line: int | None = None) -> None:
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(GaitlineError, ValueError):
    """Unknown configuration key or out-of-range value."""

    exit_code = 1


class NumericError(GaitlineError, ArithmeticError):
    """A numerical routine failed (non-convergence, indefinite matrix, ...)."""

    exit_code = 3


class ConvergenceError(NumericError):
    pass
