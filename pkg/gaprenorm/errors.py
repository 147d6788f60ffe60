from typing import Any, Dict, Optional


class GapRenormError(Exception):
    """Base class for every error raised by the engine."""

    exit_code: int = 1

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = details

    def to_dict(self) -> Dict[str, Any]:
        return {"error": type(self).__name__, "message": self.message, **self.details}


# Domain errors: the input is outside the modelled space (exit 2).


class DomainError(GapRenormError):
    exit_code = 2


class MalformedInputError(DomainError):
    pass


class NotDissipativeError(DomainError):
    pass


class DiscontinuityError(DomainError):
    """An evaluation or orbit landed on the discontinuity at 0."""


class DegenerateGapError(DomainError):
    pass


# Numeric errors: the input is fine but the computation could not be trusted (exit 3).


class NumericError(GapRenormError):
    exit_code = 3


class QuadratureError(NumericError):
    pass


class AccuracyError(NumericError):
    pass


class DegenerateIntervalError(NumericError):
    pass


class IterationCapError(NumericError):
    def __init__(self, message: str, side: Optional[str] = None, **details: Any) -> None:
        super().__init__(message, side=side, **details)
        self.side = side


class StepTooLargeError(NumericError):
    pass


class EigenSolverError(NumericError):
    pass


# Renormalization could not proceed (exit 4).


class NotRenormalizableError(GapRenormError):
    exit_code = 4

    def __init__(
        self,
        message: str,
        reason: str,
        iterate: int,
        side: Optional[str],
        depth: int = 0,
    ) -> None:
        super().__init__(message, reason=reason, iterate=iterate, side=side, depth=depth)
        self.reason = reason
        self.iterate = iterate
        self.side = side
        self.depth = depth

    def at_depth(self, depth: int) -> "NotRenormalizableError":
        return NotRenormalizableError(
            f"depth {depth}: {self.message}", self.reason, self.iterate, self.side, depth
        )


class UnrealizableCombinatoricsError(GapRenormError):
    exit_code = 4

    def __init__(self, message: str, bracket: tuple, achieved_depth: int = 0) -> None:
        super().__init__(message, bracket=list(bracket), achieved_depth=achieved_depth)
        self.bracket = bracket
        self.achieved_depth = achieved_depth
