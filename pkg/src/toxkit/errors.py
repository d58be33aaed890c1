"""Shared exception types."""


class ToxkitError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(ToxkitError):
    """Input violates a documented contract (bad value, bad schema)."""


class FormatError(ValidationError):
    """A file does not conform to its declared on-disk format."""
