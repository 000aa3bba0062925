"""Exception hierarchy.

Two branches matter for the CLI contract: ``ConfigError`` (bad flags or
parameters, exit code 1) and ``DataError`` (bad or insufficient input data,
exit code 2).
"""


class QbsdError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(QbsdError):
    """Invalid configuration or usage."""


class DataError(QbsdError):
    """Invalid, malformed, or insufficient input data."""


class GridMisaligned(DataError):
    """Timestamp is not an exact multiple of the grid interval."""


class InvalidScheme(ConfigError):
    """Seasonality scheme violates its structural invariants."""


class InsufficientSpan(DataError):
    """A resolved history slot would fall before the start of time."""


class EmptyInput(DataError):
    """An operation that needs at least one sample got none."""


class InvalidConstant(ConfigError):
    """Contingency constant (or its floor) must be positive."""


class InsufficientHistory(DataError):
    """Not enough present samples to produce a forecast."""


class InvalidWindow(ConfigError):
    """Smoother window parameters are out of range."""


class SeriesTooShort(DataError):
    """Series is shorter than the smoother window."""


class DegenerateVariance(DataError):
    """R^2 is undefined because the actual values have zero variance."""


class TooFewPairs(DataError):
    """Fewer than five informative pairs after dropping zero differences."""


class ParseError(DataError):
    """A CSV row or cell could not be parsed."""


class DuplicateTimestamp(DataError):
    """Two CSV rows map to the same grid slot."""


class StaleSlot(DataError):
    """Arrival older than the retained history window."""
