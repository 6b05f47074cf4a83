"""Exception types shared across the package."""


class BwtError(Exception):
    """Base class for all package errors."""


class InvalidInput(BwtError, ValueError):
    """Malformed data: non-square, asymmetric beyond tolerance, not PSD, bad file."""


class InvalidParam(BwtError, ValueError):
    """A parameter violates its admissibility constraints."""


class NotInvertible(BwtError):
    """An operation restricted to positive definite matrices got a singular one."""


class Unreachable(BwtError):
    """No optimal transport map exists for the requested direction (rank drops)."""


class NoSpdMap(BwtError):
    """Transport maps exist, but none of them is symmetric PSD."""


class PreconditionFailed(BwtError):
    """A structural requirement (e.g. mutual orthogonality) does not hold."""


class NumericalInconsistency(BwtError):
    """Two independent computations of the same quantity disagree beyond tolerance."""
