"""Exception hierarchy shared by all finslerlab modules."""


class FinslerError(Exception):
    """Base class for all finslerlab errors."""


# --- Taylor engine -----------------------------------------------------------


class DivisionNearZero(FinslerError):
    """Division by a series whose constant term is numerically zero."""


class DomainError(FinslerError):
    """Elementary function applied outside its domain (e.g. sqrt of <= 0)."""


class OrderExceeded(FinslerError):
    """A derivative or coefficient beyond the truncation order was requested."""


class SingularMatrix(FinslerError):
    """Constant-term matrix of a series matrix is not invertible."""


# --- Expressions -------------------------------------------------------------


class ExpressionSyntaxError(FinslerError):
    """Malformed expression text; carries a 1-based character position."""

    def __init__(self, position: int, message: str):
        super().__init__(f"at position {position}: {message}")
        self.position = position
        self.message = message


class UnknownVariable(FinslerError):
    """Expression references a variable that was not declared."""

    def __init__(self, name: str, position: int = 0):
        super().__init__(f"unknown variable '{name}' at position {position}")
        self.name = name
        self.position = position


class EvaluationError(FinslerError):
    """Evaluation failed; carries the offending AST node position."""

    def __init__(self, position: int, cause: Exception):
        super().__init__(f"at position {position}: {cause}")
        self.position = position
        self.cause = cause


# --- Structures and geometry -------------------------------------------------


class ZeroSection(FinslerError):
    """Evaluation point lies on (or too close to) the zero section of TM."""


class TargetZeroSection(FinslerError):
    """Pushed fiber point lies on the zero section of the target bundle."""


class NotPositiveDefinite(FinslerError):
    """Fundamental tensor fails the positive-definiteness threshold."""


class SingularMetric(FinslerError):
    """Fundamental tensor is numerically singular at the evaluation point."""


class SprayMismatch(FinslerError):
    """The two defining formulas for the spray disagree beyond tolerance."""


class CrossCheckFailure(FinslerError):
    """A dual-formula identity failed beyond its tolerance."""


class UnsupportedVariance(FinslerError):
    """Horizontal covariant derivative requested for an unsupported field."""


# --- Curves ------------------------------------------------------------------


class ZeroVelocity(FinslerError):
    """Curve state has (numerically) vanishing velocity."""


class StepSizeUnderflow(FinslerError):
    """Adaptive integrator step size collapsed below the resolution floor."""


# --- Maps --------------------------------------------------------------------


class DimensionMismatch(FinslerError):
    """Source/target dimensions are incompatible for the requested operation."""


class SingularJacobian(FinslerError):
    """Map Jacobian is numerically singular where invertibility is required."""
