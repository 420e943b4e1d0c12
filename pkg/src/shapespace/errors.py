"""Exception hierarchy shared by every module.

All errors derive from :class:`ShapeSpaceError` so callers (and the CLI) can
catch one type; subclasses additionally inherit the closest builtin so that
``except ValueError`` keeps working for input problems.
"""


class ShapeSpaceError(Exception):
    """Base class for all library errors."""


class NegativeWeightError(ShapeSpaceError, ValueError):
    pass


class ZeroTotalMassError(ShapeSpaceError, ValueError):
    pass


class DimensionMismatchError(ShapeSpaceError, ValueError):
    pass


class MeasureMismatchError(ShapeSpaceError, ValueError):
    pass


class ParseError(ShapeSpaceError, ValueError):
    pass


class SolverFailureError(ShapeSpaceError, RuntimeError):
    pass


class NumericalUnderflowError(SolverFailureError):
    """Entropic kernel underflowed; anneal epsilon or increase it."""


class OracleTooLargeError(ShapeSpaceError, ValueError):
    pass


class NonUniformWeightsError(ShapeSpaceError, ValueError):
    pass


class TOutOfRangeError(ShapeSpaceError, ValueError):
    pass


class OrthogonalityError(ShapeSpaceError, ValueError):
    pass


class SkewnessViolationError(ShapeSpaceError, ValueError):
    pass


class ConfigInvalidError(ShapeSpaceError, ValueError):
    pass


class UnsupportedPError(ConfigInvalidError):
    """The alternating shape solver only handles p = 2."""


class DimensionNot2Error(ShapeSpaceError, ValueError):
    pass


class BudgetExceededError(ShapeSpaceError, ValueError):
    pass


class DegenerateEndpointsError(ShapeSpaceError, ValueError):
    pass


class BoundaryIndexError(ShapeSpaceError, IndexError):
    pass


class BadSwitchFunctionError(ShapeSpaceError, ValueError):
    pass


class LengthMismatchError(ShapeSpaceError, ValueError):
    pass


class BadStepError(ShapeSpaceError, ValueError):
    pass
