"""Exception types shared across the package.

Each family maps onto one CLI exit code (see :mod:`selo.cli`).
"""


class SeloError(Exception):
    exit_code = 1


class DataError(SeloError, ValueError):
    """Input data is unusable (bad rating, unreadable file, ...)."""

    exit_code = 2


class ParseError(DataError):
    def __init__(self, message, line_number=None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class NumericError(SeloError, ArithmeticError):
    """Non-finite values appeared in a computation."""

    exit_code = 3


class UndefinedMetricError(SeloError, ValueError):
    pass
