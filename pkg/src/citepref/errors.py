"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericError -> 4.
"""


class CitePrefError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(CitePrefError):
    """Invalid configuration or command-line usage."""


class DataError(CitePrefError):
    """Malformed, inconsistent, or missing input data."""


class NumericError(CitePrefError):
    """A numeric procedure failed (non-convergence, separation, ...)."""


class UndefinedMeasureError(NumericError):
    """A measure is undefined for the given input (degenerate class sizes,
    empty vectors, fewer than two outcomes, ...)."""
