"""Exception types raised across the package."""


class PolarBanditError(Exception):
    """Base class for package errors."""


class NumericalError(PolarBanditError):
    """Failures of a numerical routine (CLI exit code 3)."""


class NotPositiveDefinite(NumericalError):
    pass


class ConvergenceFailure(NumericalError):
    pass


class NotUnitVector(PolarBanditError, ValueError):
    pass


class DimensionMismatch(PolarBanditError, ValueError):
    pass


class MeanNotCentered(PolarBanditError, ValueError):
    pass


class ParseError(PolarBanditError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyGraph(PolarBanditError, ValueError):
    pass


class ConfigError(PolarBanditError, ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
