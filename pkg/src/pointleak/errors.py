"""Exception hierarchy.

Every error raised by the library derives from :class:`LeakageError`, which
is itself a :class:`ValueError`, so callers that only care about "bad input"
can catch that.
"""


class LeakageError(ValueError):
    """Base class for all library errors."""


class EmptyVector(LeakageError):
    pass


class NegativeEntry(LeakageError):
    pass


class SumOutOfTolerance(LeakageError):
    pass


class LengthMismatch(LeakageError):
    pass


class ShapeMismatch(LeakageError):
    pass


class CountMismatch(LeakageError):
    pass


class AllLikelihoodsZero(LeakageError):
    """The observation is impossible under every x with positive prior."""


class AlphaOutOfRange(LeakageError):
    pass


class DomainError(LeakageError):
    """An aggregator was evaluated outside its domain (e.g. log of z <= 0)."""


class ZeroPriorRealisation(LeakageError):
    pass


class NumericallySingular(LeakageError):
    pass


class SizeLimit(LeakageError):
    pass


class InfiniteLeakage(LeakageError):
    pass


class SingleClass(LeakageError):
    """Fewer than two distinct channel rows remain after merging."""


class InsufficientPoints(LeakageError):
    pass


class NonPositiveGap(LeakageError):
    pass
