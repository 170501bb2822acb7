"""Exception types shared across the package.

The CLI maps ValidationError to exit code 2 and NumericError to exit code 3.
"""


class SpikeIdError(Exception):
    """Base class for package errors."""


class ValidationError(SpikeIdError):
    """Invalid inputs, shapes, configs or files."""


class ConversionError(ValidationError):
    """ANN-to-SNN conversion failed (e.g. a dead layer)."""


class NumericError(SpikeIdError):
    """Non-finite state or numerical breakdown during computation."""
