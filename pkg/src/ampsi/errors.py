"""Exception types raised across the package."""


class AmpSiError(Exception):
    """Base class for all package errors."""


class DimensionError(AmpSiError, ValueError):
    """Array shapes are inconsistent or a dimension is non-positive."""


class ParameterError(AmpSiError, ValueError):
    """A model or denoiser parameter is outside its valid range."""


class ConfigError(AmpSiError, ValueError):
    """An experiment configuration is malformed.

    ``key`` names the offending entry when one can be identified.
    """

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class NumericDivergenceError(AmpSiError, ArithmeticError):
    """Non-finite values appeared during an AMP run."""

    def __init__(self, message, iteration=None, trial=None):
        super().__init__(message)
        self.iteration = iteration
        self.trial = trial


class NotComputableError(AmpSiError, ArithmeticError):
    """A quadrature/enumeration posterior has a degenerate normaliser."""
