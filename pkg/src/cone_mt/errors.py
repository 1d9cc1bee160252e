"""Exception and warning types shared across the package."""


class ConeMTError(Exception):
    """Base class for all package errors."""


class GridMismatchError(ConeMTError):
    """Operands live on different grids or have inconsistent shapes."""


class NumericError(ConeMTError):
    """Non-finite data where finite values are required."""


class RangeOverflowError(ConeMTError):
    """An exponent argument exceeded the overflow guard.

    Raised instead of silently clamping: a clamped exponential would fake
    boundedness of the very functionals this package is meant to probe.
    """


class SolverError(ConeMTError):
    """An iterative solver failed to reach its tolerance."""


class ResolutionError(ConeMTError):
    """The requested feature is finer than the grid can represent."""


class SupportError(ConeMTError):
    """A function's support does not fit the requested domain or radius."""


class AdmissibilityError(ConeMTError):
    """A 1-D profile violates the admissibility constraints w(0)=0, w
    nondecreasing, unit derivative budget."""


class TruncationWarning(UserWarning):
    """Input does not decay at the grid edges; result is truncation-dominated."""


class AliasingWarning(UserWarning):
    """Spectral data does not decay within the frequency window."""
