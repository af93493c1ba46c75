"""Internal unit system for the simulations.

Everything runs in oscillator units: hbar, the particle mass, and the
reference frequency omega0 are scale factors (usually all 1.0), and the
single physical dial is the dimensionless damping

    Gamma = tau * omega0,

where tau is the radiation-reaction timescale in m*x''' = ... + m*tau*x'''.
In Gaussian units Gamma factorizes as (2/3) * (e^2/(hbar*c)) * (hbar*omega0
/ (m*c^2)), i.e. fine-structure constant times the ratio of the oscillator
quantum to the rest energy; both factors are tiny, which is why the model
only admits Gamma << 1.  Neither the fine-structure constant nor c is an
independent input here.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigurationError

GAMMA_MAX = 0.1


@dataclass(frozen=True)
class UnitSystem:
    """Scale factors plus the dimensionless radiation damping Gamma."""

    hbar: float = 1.0
    mass: float = 1.0
    omega0: float = 1.0
    gamma: float = 1.0e-2

    def __post_init__(self):
        if not (self.hbar > 0.0 and self.mass > 0.0 and self.omega0 > 0.0):
            raise ConfigurationError(
                "hbar, mass and omega0 must all be positive, got "
                f"hbar={self.hbar}, mass={self.mass}, omega0={self.omega0}"
            )
        if not (0.0 < self.gamma < GAMMA_MAX):
            raise ConfigurationError(
                f"gamma must lie in (0, {GAMMA_MAX}); got {self.gamma}. "
                "The weak-damping expansion behind the radiation-reaction "
                "force is not trustworthy beyond that."
            )

    @property
    def tau(self) -> float:
        """Radiation-reaction timescale tau = Gamma / omega0."""
        return self.gamma / self.omega0
