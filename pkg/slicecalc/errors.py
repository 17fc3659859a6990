from __future__ import annotations

from typing import Any, Optional


class SliceCalcError(Exception):
    pass


class AlgebraMismatchError(SliceCalcError, ValueError):
    pass


class SingularInputError(SliceCalcError, ZeroDivisionError):
    pass


class DomainError(SliceCalcError, ValueError):
    pass


class GeometryError(DomainError):
    pass


class SingularityError(SliceCalcError, ArithmeticError):
    """Kernel or operator evaluated where it is not defined.

    `point` is the offending evaluation point, `sphere` the pair (Re[x], |x|)
    describing the sphere [x] the point fell onto, when there is one.
    """

    def __init__(self, message: str, point: Any = None, sphere: Optional[tuple] = None) -> None:
        super().__init__(message)
        self.point = point
        self.sphere = sphere


class ArgumentError(SliceCalcError, ValueError):
    pass


class UnsupportedOrderError(ArgumentError):
    pass


class HypothesisViolationError(ArgumentError):
    pass


class DegreeReductionError(ArgumentError):
    def __init__(self, message: str, condition: float) -> None:
        super().__init__(message)
        self.condition = condition


class ConfigError(SliceCalcError, ValueError):
    pass
