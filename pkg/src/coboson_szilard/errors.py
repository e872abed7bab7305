"""Exception types raised by the calculator.

Every domain error derives from :class:`CobosonError`, which is itself a
``ValueError`` so callers that only care about bad input can catch that.
"""


class CobosonError(ValueError):
    """Base class for domain errors."""


class EmptyDistribution(CobosonError):
    pass


class NegativeWeight(CobosonError):
    pass


class NonNormalizable(CobosonError):
    pass


class InsufficientPowerSums(CobosonError):
    pass


class NonPositiveLength(CobosonError):
    pass


class DepletedMode(CobosonError):
    pass


class OccupationExceedsTable(CobosonError):
    pass


class OutOfRange(CobosonError):
    pass


class AllConfigsForbidden(CobosonError):
    pass


class IrrationalInput(CobosonError):
    pass


class WidthUnderflow(CobosonError):
    pass


class DegenerateConfiguration(CobosonError):
    pass


class DimensionTooLarge(CobosonError):
    pass


class InstanceTooLarge(CobosonError):
    pass
