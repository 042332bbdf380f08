"""Exception hierarchy shared across the package."""


class FinganError(Exception):
    """Base class for all package errors."""


class ConfigError(FinganError):
    """Invalid configuration. ``path`` names the offending field."""

    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class DataError(FinganError):
    """Problems with dataset contents or files."""


class ZeroDistance(DataError):
    pass


class TooFewRps(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class DimensionMismatch(DataError):
    pass


class EmptyDataset(DataError):
    pass


class RpSetMismatch(DataError):
    pass


class UnknownDataset(DataError):
    pass


class BadCheckpoint(DataError):
    pass


class KTooLarge(DataError):
    pass


class NumericError(FinganError):
    """Shape or value violations inside the numeric engine."""


class ShapeMismatch(NumericError, ValueError):
    pass


class NonFiniteError(NumericError, FloatingPointError):
    pass


class BatchTooSmall(NumericError, ValueError):
    pass


class NonPositiveSigma(NumericError, ValueError):
    pass


class NotSymmetric(NumericError, ValueError):
    pass


class DivergenceDetected(NumericError):
    def __init__(self, epoch, message="non-finite loss"):
        self.epoch = epoch
        super().__init__(f"epoch {epoch}: {message}")
