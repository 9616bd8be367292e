"""Exception hierarchy.

Every error raised on purpose derives from :class:`DfdError`; the concrete
classes also derive from the closest builtin so callers that only know about
``ValueError`` / ``ArithmeticError`` still catch them.
"""


class DfdError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(DfdError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateCameraError(DomainError):
    """Camera parameters make the blur relation undefined (zero aperture or sensor distance)."""


class InconsistentObservationError(DfdError, ValueError):
    """A measured relative blur cannot be produced by the given camera relation."""


class DepthRangeError(DfdError, ValueError):
    """An inverted depth is non-positive or at/beyond infinity."""


class FormatError(DfdError, ValueError):
    """Malformed or truncated image file."""


class ConfigurationError(DfdError, ValueError):
    """Inconsistent run configuration (empty valid region, bad grid, ...)."""


class NumericError(DfdError, ArithmeticError):
    """A computation produced non-finite values or lost too much precision."""

    def __init__(self, message, sigma=None):
        super().__init__(message)
        self.sigma = sigma


class RankDeficientError(NumericError):
    """A convolution system is (numerically) rank deficient, usually a flat texture."""
