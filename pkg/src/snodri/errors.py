"""Exception hierarchy.

The CLI maps the three families onto process exit codes:
``ConfigError`` -> 1, ``DataError`` -> 2, ``NumericError`` -> 3.
"""


class SnodriError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 2


class ConfigError(SnodriError):
    exit_code = 1


class DataError(SnodriError, ValueError):
    exit_code = 2


class NumericError(SnodriError, ArithmeticError):
    exit_code = 3


class IncompleteMonth(DataError):
    pass


class EmptyInput(DataError):
    pass


class ZeroVariance(DataError):
    pass


class InsufficientData(DataError):
    pass


class MissingVariable(DataError):
    pass


class MissingValue(DataError):
    pass


class EmptyIntersection(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class TimestampMismatch(DataError):
    pass


class OutOfRange(DataError):
    pass


class AllZero(DataError):
    pass


class DegenerateFit(NumericError):
    pass


class NonFiniteLoss(NumericError):
    pass


class StageError(SnodriError):
    """Wraps a failure inside one pipeline stage, naming where it happened."""

    def __init__(self, stage, cause, basin=None, variable=None):
        self.stage = stage
        self.basin = basin
        self.variable = variable
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 2)
        where = f"stage '{stage}'"
        if basin is not None:
            where += f", basin '{basin}'"
        if variable is not None:
            where += f", variable '{variable}'"
        super().__init__(f"{where}: {cause}")
