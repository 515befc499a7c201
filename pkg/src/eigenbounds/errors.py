"""Exception hierarchy shared by all modules."""


class EigenBoundsError(Exception):
    """Base class for library errors."""


class ConfigurationError(EigenBoundsError, ValueError):
    """Unknown domain name, bad degree, or another invalid run setting."""


class GeometryError(EigenBoundsError, ValueError):
    """Degenerate (zero-volume) simplex."""


class ConstraintError(EigenBoundsError, ValueError):
    """A linear constraint that cannot be applied (e.g. the zero functional)."""


class PencilShapeError(EigenBoundsError, ValueError):
    """A matrix that must be positive definite is not.

    ``minor`` is the 1-based index of the first leading minor that failed,
    when known.
    """

    def __init__(self, message, minor=None):
        super().__init__(message)
        self.minor = minor


class IntervalDomainError(EigenBoundsError, ArithmeticError):
    """Interval operation outside its domain (division by an interval
    containing zero, square root of a negative interval)."""
