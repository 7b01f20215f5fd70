"""Exception hierarchy shared by all seot modules."""


class SeotError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(SeotError, ValueError):
    """An argument violates a documented precondition."""


class ShapeError(InvalidInput):
    """Array dimensions are inconsistent with each other."""


class NumericalError(SeotError, ArithmeticError):
    """A computation produced NaN/Inf or otherwise lost numerical meaning."""


class OracleTooLarge(InvalidInput):
    """Brute-force oracle asked to enumerate an instance beyond its size cap."""


class UnsupportedByOracle(InvalidInput):
    """Instance is outside the restricted class the oracle can solve exactly."""


class UnsupportedCost(InvalidInput):
    """Operation requires squared-Euclidean cost but another exponent was given."""


class DegenerateGraph(SeotError):
    """Graph construction produced no edges at all."""


class InvalidState(SeotError):
    """Object is missing a piece of state required by the requested operation."""


class IterativeSolverError(NumericalError):
    """Eigensolver ran out of budget before reaching the requested residual."""

    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class StageError(SeotError):
    """Pipeline stage failure, wrapping the underlying error with context."""

    def __init__(self, stage: str, cause: Exception, diagnostics: dict | None = None):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.diagnostics = diagnostics or {}
