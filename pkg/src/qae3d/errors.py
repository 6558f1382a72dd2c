class QaeError(Exception):
    """Base class for errors raised by qae3d."""


class DataError(QaeError):
    """Malformed or inconsistent input data."""


class ConfigError(QaeError):
    """Inconsistent or unknown configuration; ``key`` names the offender."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class NumericalError(QaeError):
    """Non-finite loss or gradient."""


class DegenerateError(NumericalError):
    """A normalisation step received an all-zero vector."""
