"""Exception hierarchy shared by every module of the package."""


class CanonsysError(Exception):
    """Base class for all errors raised by canonsys."""


class InvalidDimensionError(CanonsysError, ValueError):
    pass


class InvalidInputError(CanonsysError, ValueError):
    pass


class SingularMatrixError(CanonsysError, ValueError):
    pass


class StructureError(CanonsysError, ValueError):
    """A coefficient sample is not symmetric (or Hermitian)."""

    def __init__(self, message, t=None, residual=None):
        super().__init__(message)
        self.t = t
        self.residual = residual


class PSDViolationError(StructureError):
    """A coefficient sample has a negative eigenvalue below tolerance."""

    def __init__(self, message, t=None, min_eigenvalue=None):
        super().__init__(message, t=t, residual=min_eigenvalue)
        self.min_eigenvalue = min_eigenvalue


class DomainError(CanonsysError, ValueError):
    pass


class DegenerateCoefficientError(CanonsysError, ValueError):
    pass


class StepFailureError(CanonsysError, ArithmeticError):
    pass


class PreconditionError(CanonsysError, ValueError):
    pass


class NumericalError(CanonsysError, ArithmeticError):
    pass


class SingularConstraintError(CanonsysError, ZeroDivisionError):
    pass


class DegeneracyError(CanonsysError, ArithmeticError):
    """Eigenvalue crossing that breaks continuity-based eigenvector tracking."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class GeneratorError(CanonsysError, ValueError):
    pass


class ConfigError(CanonsysError, ValueError):
    pass


__all__ = [
    "CanonsysError",
    "InvalidDimensionError",
    "InvalidInputError",
    "SingularMatrixError",
    "StructureError",
    "PSDViolationError",
    "DomainError",
    "DegenerateCoefficientError",
    "StepFailureError",
    "PreconditionError",
    "NumericalError",
    "SingularConstraintError",
    "DegeneracyError",
    "GeneratorError",
    "ConfigError",
]
