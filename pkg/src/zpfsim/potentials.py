"""Polynomial potentials V(x) = sum_k c_k x^k and their derivatives."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import ConfigurationError

MAX_DEGREE = 8


@dataclass(frozen=True)
class PotentialSpec:
    """Polynomial potential, coefficients in ascending order (c0, c1, ...)."""

    coefficients: tuple[float, ...]

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if len(coeffs) == 0:
            raise ConfigurationError("potential needs at least one coefficient")
        if len(coeffs) - 1 > MAX_DEGREE:
            raise ConfigurationError(
                f"potential degree {len(coeffs) - 1} exceeds the supported "
                f"maximum {MAX_DEGREE}"
            )
        if not all(np.isfinite(coeffs)):
            raise ConfigurationError("potential coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self) -> int:
        deg = len(self.coefficients) - 1
        while deg > 0 and self.coefficients[deg] == 0.0:
            deg -= 1
        return deg

    def is_confining(self) -> bool:
        """True when V grows at both ends: even degree >= 2, positive leading term."""
        deg = self.degree
        return deg >= 2 and deg % 2 == 0 and self.coefficients[deg] > 0.0

    def derivative(self, order: int = 1) -> tuple[float, ...]:
        """Coefficients of d^order V / dx^order (ascending)."""
        if order < 0:
            raise ConfigurationError("derivative order must be >= 0")
        c = np.asarray(self.coefficients, dtype=float)
        for _ in range(order):
            c = P.polyder(c)
            if c.size == 0:
                c = np.zeros(1)
        return tuple(float(v) for v in c)

    def value(self, x):
        return P.polyval(np.asarray(x, dtype=float), self.coefficients)

    def grad(self, x):
        return P.polyval(np.asarray(x, dtype=float), self.derivative(1))

    def curvature(self, x):
        return P.polyval(np.asarray(x, dtype=float), self.derivative(2))


def harmonic(mass: float, omega: float) -> PotentialSpec:
    """V(x) = (1/2) m omega^2 x^2."""
    return PotentialSpec((0.0, 0.0, 0.5 * mass * omega * omega))


def quartic(lambda_coeff: float) -> PotentialSpec:
    """V(x) = lambda x^4."""
    return PotentialSpec((0.0, 0.0, 0.0, 0.0, float(lambda_coeff)))
