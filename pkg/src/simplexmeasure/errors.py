"""Exception hierarchy shared by all modules."""


class SimplexMeasureError(Exception):
    """Base class for errors raised by this package."""


class DomainError(SimplexMeasureError, ValueError):
    """An argument lies outside the domain of the operation."""


class QuadratureError(SimplexMeasureError, ArithmeticError):
    """Adaptive integration could not reach the requested tolerance."""


class MapError(SimplexMeasureError, KeyError):
    """A finite map is not defined on some source point."""

    def __str__(self):
        return Exception.__str__(self)


class AbsoluteContinuityError(SimplexMeasureError, ValueError):
    """A measure charges a point that the reference measure does not."""


class PreconditionError(SimplexMeasureError, ValueError):
    """A structural precondition (injectivity, morphism, ...) fails."""
