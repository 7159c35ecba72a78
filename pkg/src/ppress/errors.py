"""Shared exception types.

The CLI maps these onto distinct exit codes, so raising the right class
matters more than the message text.
"""


class PpressError(Exception):
    """Base class for everything this package raises on purpose."""


class DataFormatError(PpressError):
    """Malformed input: bad CSV cell, ragged row, wrong raw file size."""


class ConfigError(PpressError):
    """Invalid reducer, application, or campaign configuration."""


class CodecError(PpressError):
    """Corrupt, truncated, or internally inconsistent compressed data."""


class ApplicationError(PpressError):
    """A downstream application run failed or produced no usable metric."""


class InfeasibleSearchError(PpressError):
    """No configuration in the search domain satisfies the quality floor."""
