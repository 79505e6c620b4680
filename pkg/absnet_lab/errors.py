"""Exceptions raised by the simulation engines."""

from typing import Optional


class DomainError(ValueError):
    """An argument is outside the domain of the operation."""


class InvalidTeacherError(ValueError):
    """The teacher network violates its invariants."""


class CoverageError(ValueError):
    """Some teacher neuron has no student neuron within the requested angle."""

    def __init__(self, message: str, teacher: int) -> None:
        """Initialize the error with the index of the uncovered teacher."""
        super().__init__(message)
        self.teacher = teacher


class EstimatorError(RuntimeError):
    """A Monte Carlo integrand returned a non-finite value."""

    def __init__(self, message: str, sample_index: int) -> None:
        """Initialize the error with the offending sample index."""
        super().__init__(message)
        self.sample_index = sample_index


class NotPSDError(ValueError):
    """A Gram matrix is not positive semidefinite within tolerance."""


class ConvergenceError(RuntimeError):
    """An iterative solver exceeded its iteration cap."""

    def __init__(self, message: str, residual: Optional[float] = None) -> None:
        """Initialize the error with the last residual."""
        super().__init__(message)
        self.residual = residual


class DivergenceError(RuntimeError):
    """Training produced a non-finite gradient."""


class EigenSolverError(RuntimeError):
    """The symmetric eigensolver failed."""
