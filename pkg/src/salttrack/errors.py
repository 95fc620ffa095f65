"""Exception hierarchy shared by all salttrack modules.

The CLI maps these onto exit codes: usage errors exit 1, DataError exits 2,
NumericalError exits 3.
"""


class SaltTrackError(Exception):
    """Base class for all salttrack errors."""


class DataError(SaltTrackError):
    """Malformed, inconsistent, or out-of-bounds input data."""


class NumericalError(SaltTrackError):
    """A numerical procedure failed or produced an unusable result."""


class TrackingUnstableError(NumericalError):
    """Too many tracked points were rejected by the outlier filter."""
