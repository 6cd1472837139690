"""Exception types raised across the package."""


class MacrodivError(Exception):
    """Base class for all package errors."""


class DimensionError(MacrodivError, ValueError):
    """Matrix or profile shapes are incompatible with the requested operation."""


class SizeLimitError(MacrodivError, ValueError):
    """A combinatorial kernel was asked for a size beyond its guard."""


class SingularProfileError(MacrodivError, ValueError):
    """The desired user's power vector has a zero entry where P1 must be inverted."""


class DegenerateRootsError(MacrodivError, ArithmeticError):
    """Denominator roots are clustered and could not be resolved.

    Attributes
    ----------
    cluster : list of complex
        The offending group of roots.
    """

    def __init__(self, message, cluster=()):
        super().__init__(message)
        self.cluster = list(cluster)


class QuadratureError(MacrodivError, ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message, achieved=float("nan")):
        super().__init__(message)
        self.achieved = achieved
