"""Exception hierarchy.

``DataError`` covers malformed inputs (CLI exit code 2); ``NumericalError``
covers failures inside the numerics (exit code 3).
"""


class S3CError(Exception):
    pass


class DataError(S3CError, ValueError):
    pass


class InconsistentSideInfoError(DataError):
    pass


class NumericalError(S3CError, ArithmeticError):
    pass


class DegenerateScaleError(NumericalError):
    """Every column is non-positively correlated with all the others."""


class DivergenceError(NumericalError):
    def __init__(self, iteration: int, message: str | None = None):
        self.iteration = iteration
        super().__init__(message or f"non-finite value at ADMM iteration {iteration}")


class EigendecompositionError(NumericalError):
    pass


class DegenerateAffinityError(NumericalError):
    """The affinity graph has no edges, so clustering it is meaningless."""
