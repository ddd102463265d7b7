"""Exception hierarchy shared across the package."""


class FVSError(Exception):
    """Base class for every error raised by fvshrink."""


class InputError(FVSError, ValueError):
    """Malformed input: wrong shape, non-finite entries, unparsable cells."""


class ParameterError(FVSError, ValueError):
    """A scalar parameter lies outside its admissible range."""


class NumericalError(FVSError, ArithmeticError):
    """A computation could not be completed to the required accuracy."""


class SingularityError(NumericalError):
    """A matrix that must be nonsingular is numerically singular."""


class RankError(FVSError, ValueError):
    """The design does not have the rank an operation requires."""


class RegimeError(FVSError, ValueError):
    """A method was requested outside the regime where it is defined.

    Raised for example when an F-based selector is asked for on a design
    with ``n <= rank(X)``, where the residual variance cannot be estimated.
    """
