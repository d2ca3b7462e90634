"""Exception types shared across the package."""


class ZnLabError(Exception):
    """Base class for all errors raised by this package."""


class EntryBudgetExceeded(ZnLabError):
    """A flat-compressed vector would need more explicit entries than allowed."""


class OrderMismatch(ZnLabError):
    """Tuple orders of two operands (or an operator and its argument) disagree."""


class ToleranceNotReached(ZnLabError):
    """An iterative solver hit its iteration cap before meeting the residual target."""


class EmptyWitnessSet(ZnLabError):
    """A dual-norm lower bound was requested with no usable witness."""


class ZeroVectorInFamily(ZnLabError):
    """A ratio profile was requested over a family containing a zero vector."""


class BlockOverlap(ZnLabError):
    """Block vectors that must be disjointly supported are not."""


class ConfigInvalid(ZnLabError):
    """An experiment configuration is malformed or inconsistent."""


class RowNotFound(ZnLabError):
    """A report row requested for replay does not exist or is not replayable."""


class OperatorParseError(ZnLabError):
    """An operator expression could not be parsed."""
