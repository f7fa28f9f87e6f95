"""Exception hierarchy shared by all pipeline stages."""


class ParcelError(Exception):
    """Base class for every error raised by parcelkit."""


class ParameterError(ParcelError, ValueError):
    """An argument or configuration value violates its contract."""


class DegenerateInputError(ParcelError, ValueError):
    """Geometry input is degenerate (e.g. all vertices collinear)."""


class DegenerateOutputError(ParcelError):
    """An operation would produce an invalid polygon (< 3 vertices)."""


class UndefinedMetricError(ParcelError, ZeroDivisionError):
    """A metric has a zero denominator (no predictions, empty reference)."""


class FormatError(ParcelError, ValueError):
    """A file could not be parsed as the expected format."""


class CoverageWarning(UserWarning):
    """Some output pixels were not covered by any patch."""
