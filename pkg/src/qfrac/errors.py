"""Exception hierarchy for qfrac.

Every error carries the CLI exit code it maps to, so the command layer can
translate failures without a lookup table.
"""

from typing import Any, Dict, Optional


class QFracError(Exception):
    """Base class for all library errors."""

    exit_code = 1

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = details

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {"type": type(self).__name__, "message": self.message}
        if self.details:
            payload["details"] = self.details
        return payload


class MatrixParseError(QFracError):
    """Malformed matrix file."""

    exit_code = 2

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        super().__init__(message, line=line, column=column)
        self.line = line
        self.column = column


class PreconditionError(QFracError):
    """An operation was called outside its hypotheses."""

    exit_code = 3


class DomainError(PreconditionError):
    """Scalar argument outside the domain of a function (e.g. qlog on (-inf, 0])."""


class SingularKernelError(PreconditionError):
    """x lies on the sphere [s] where the Cauchy kernel is not defined."""


class SpectralSingularityError(PreconditionError):
    """s lies on (or numerically on) the S-spectrum of the operator."""


class NotSectorialError(PreconditionError):
    """The S-spectrum touches the closed negative real axis."""


class PathInvalidError(PreconditionError):
    """A contour path is not admissible for the integrand."""


class NotInvertibleError(QFracError):
    """Matrix is singular or numerically singular."""

    exit_code = 3

    def __init__(self, message: str, condition: float):
        super().__init__(message, condition=condition)
        self.condition = condition


class NumericalError(QFracError):
    """A numerical kernel (eigen-solver, SVD) failed."""


class ConvergenceError(QFracError):
    """Adaptive quadrature did not reach the requested tolerance."""

    exit_code = 4


class InconsistencyError(QFracError):
    """A post-check between two representations failed beyond tolerance."""

    exit_code = 5

    def __init__(self, message: str, residuals: Dict[str, float]):
        super().__init__(message, residuals=residuals)
        self.residuals = residuals
