"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line front end:
2 for usage or configuration problems, 3 for resource or window limits.
"""


class AlphamodError(ValueError):
    """Base class for all package errors."""

    exit_code = 2

    def __init__(self, message="", **info):
        super().__init__(message)
        self.info = info


class ResourceError(AlphamodError):
    """A finite window, budget or grid was too small for the request."""

    exit_code = 3


# group construction
class GradingViolation(AlphamodError):
    pass


class JacobiViolation(AlphamodError):
    pass


class DimensionMismatch(AlphamodError):
    pass


class StepUnsupported(AlphamodError):
    pass


class UnknownName(AlphamodError):
    pass


# norms and lattices
class WrongGroup(AlphamodError):
    pass


class NonPositiveScale(AlphamodError):
    pass


class NotClosed(AlphamodError):
    pass


class RadiusTooLarge(ResourceError):
    pass


# coverings
class NotACovering(AlphamodError):
    pass


class AlphaOutOfRange(AlphamodError):
    pass


class BudgetExceeded(ResourceError):
    pass


class UnknownIndex(AlphamodError):
    pass


class EmptyWindow(ResourceError):
    pass


class InclusionFailed(AlphamodError):
    pass


class GroupMismatch(AlphamodError):
    pass


class WeightMismatch(AlphamodError):
    pass


# metric
class PointOutsideWindow(ResourceError):
    pass


class WindowTooSmall(ResourceError):
    pass


class MapLeavesWindow(ResourceError):
    pass


# partitions and norms
class DenominatorVanishes(AlphamodError):
    pass


class DomainTagMismatch(AlphamodError):
    pass


class GridMismatch(AlphamodError):
    pass


class NotBandLimited(ResourceError):
    pass


class ParamMismatch(AlphamodError):
    pass


class GridIncompatible(AlphamodError):
    pass
