"""Exception types shared across the package."""

from __future__ import annotations


class ConfigurationError(ValueError):
    """A config value, precondition, or type invariant was violated."""


class IntegrationBlowupError(RuntimeError):
    """A trajectory left the finite range of float64.

    Carries the failure time and, for ensemble runs, the offending
    trajectory indices.
    """

    def __init__(self, message: str, time: float, indices: tuple[int, ...] = ()):
        super().__init__(message)
        self.time = time
        self.indices = indices


class GridEscapeError(RuntimeError):
    """Significant probability mass reached the phase-space grid boundary."""

    def __init__(self, message: str, time: float, boundary_mass: float):
        super().__init__(message)
        self.time = time
        self.boundary_mass = boundary_mass


class ConvergenceError(RuntimeError):
    """An iterative refinement failed to reach its target tolerance."""
