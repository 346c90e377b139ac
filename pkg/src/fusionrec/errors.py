"""Exception taxonomy shared by the library, service, and CLI.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericError -> 4.
"""


class FusionrecError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(FusionrecError):
    """Invalid configuration: bad ratios, unknown method, malformed config file."""


class DataError(FusionrecError):
    """Problem with input data: missing file, malformed line, bad store header."""


class NumericError(FusionrecError):
    """Numeric failure: shape mismatch, non-finite values, divergence."""


class ShapeError(NumericError):
    """Operand shapes are incompatible for the requested operation."""
