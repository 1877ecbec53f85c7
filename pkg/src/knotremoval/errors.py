"""Exception hierarchy.

Every error raised for invalid input derives from :class:`SplineError`, which is
itself a :class:`ValueError`, so callers that only care about bad input can catch
``ValueError``.
"""


class SplineError(ValueError):
    """Base class for invalid spline data or arguments."""


class NotSorted(SplineError):
    pass


class MultiplicityExceeded(SplineError):
    pass


class TooShort(SplineError):
    pass


class NotBasic(SplineError):
    pass


class IndexOutOfRange(SplineError):
    pass


class OutsideDomain(SplineError):
    pass


class OrderTooHigh(SplineError):
    pass


class DegreeZero(SplineError):
    pass


class NotOpen(SplineError):
    pass


class NotContinuous(SplineError):
    pass


class NotInterior(SplineError):
    pass


class SingularLocalSystem(SplineError):
    pass


class StaleCache(SplineError):
    """The indicator cache does not belong to the spline being updated."""


class BudgetTooLarge(SplineError):
    pass


class SolverFailure(SplineError):
    """A banded SPD solve failed, which means the space itself is invalid."""


class DuplicateAbscissa(SplineError):
    pass
