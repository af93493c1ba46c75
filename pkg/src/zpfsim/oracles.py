"""Quantum reference results used to benchmark the stochastic runs.

Everything here is either closed-form (Gaussian ground states, exact
harmonic phase-space rotation) or a dense diagonalization in a harmonic
oscillator basis (quartic ground state).  No time propagation happens in
this module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ConvergenceError


@dataclass(frozen=True)
class GaussianWignerParams:
    """First and second moments of a Gaussian phase-space density.

    For a pure quantum Gaussian state the uncertainty product
    var_x*var_p - cov_xp^2 equals (hbar/2)^2 exactly.
    """

    mean_x: float
    mean_p: float
    var_x: float
    var_p: float
    cov_xp: float = 0.0

    def __post_init__(self):
        if not (self.var_x > 0.0 and self.var_p > 0.0):
            raise ConfigurationError("variances must be positive")
        if self.uncertainty_product() <= 0.0:
            raise ConfigurationError(
                "covariance matrix must be positive definite: "
                f"var_x*var_p - cov^2 = {self.uncertainty_product()}"
            )

    def uncertainty_product(self) -> float:
        """det of the covariance matrix, var_x*var_p - cov_xp^2."""
        return self.var_x * self.var_p - self.cov_xp**2

    def density(self, x, p):
        """Normalized Gaussian density W(x, p), vectorized over x and p."""
        x = np.asarray(x, dtype=float)
        p = np.asarray(p, dtype=float)
        det = self.uncertainty_product()
        dx = x - self.mean_x
        dp = p - self.mean_p
        quad = (self.var_p * dx * dx - 2.0 * self.cov_xp * dx * dp + self.var_x * dp * dp) / det
        return np.exp(-0.5 * quad) / (2.0 * np.pi * np.sqrt(det))


def vacuum_wigner_mode(omega: float, hbar: float) -> GaussianWignerParams:
    """Vacuum Wigner Gaussian of one radiation mode in quadratures (y, q).

    The mode Hamiltonian is q^2/2 + omega^2 y^2 / 2 (unit mass), so the
    vacuum has var_y = hbar/(2 omega), var_q = hbar omega / 2 and peak
    height omega/(pi hbar); mean energy is hbar*omega/2.
    """
    if omega <= 0.0 or hbar <= 0.0:
        raise ConfigurationError("omega and hbar must be positive")
    return GaussianWignerParams(0.0, 0.0, 0.5 * hbar / omega, 0.5 * hbar * omega)


def oscillator_ground_oracle(mass: float, omega: float, hbar: float) -> GaussianWignerParams:
    """Ground-state Gaussian of H = p^2/2m + m omega^2 x^2 / 2.

    var_x = hbar/(2 m omega), var_p = m hbar omega / 2, mean energy
    hbar*omega/2 split evenly between kinetic and potential.
    """
    if mass <= 0.0 or omega <= 0.0 or hbar <= 0.0:
        raise ConfigurationError("mass, omega and hbar must be positive")
    return GaussianWignerParams(0.0, 0.0, 0.5 * hbar / (mass * omega), 0.5 * mass * hbar * omega)


def rotate_gaussian(
    params: GaussianWignerParams, omega: float, t: float, mass: float = 1.0
) -> GaussianWignerParams:
    """Evolve a Gaussian through the exact harmonic flow for time t.

    The map (x, p) -> (x cos wt + p sin(wt)/(m w), p cos wt - m w x sin wt)
    has unit determinant, so the uncertainty product is preserved exactly.
    """
    if mass <= 0.0 or omega <= 0.0:
        raise ConfigurationError("mass and omega must be positive")
    c = np.cos(omega * t)
    s = np.sin(omega * t)
    mw = mass * omega
    m11, m12 = c, s / mw
    m21, m22 = -mw * s, c
    mean_x = m11 * params.mean_x + m12 * params.mean_p
    mean_p = m21 * params.mean_x + m22 * params.mean_p
    sxx, spp, sxp = params.var_x, params.var_p, params.cov_xp
    var_x = m11 * m11 * sxx + 2.0 * m11 * m12 * sxp + m12 * m12 * spp
    var_p = m21 * m21 * sxx + 2.0 * m21 * m22 * sxp + m22 * m22 * spp
    cov = m11 * m21 * sxx + (m11 * m22 + m12 * m21) * sxp + m12 * m22 * spp
    return GaussianWignerParams(mean_x, mean_p, var_x, var_p, cov)


@dataclass(frozen=True)
class QuarticGroundState:
    """Converged ground state of H = p^2/2m + lambda x^4."""

    energy: float
    var_x: float
    var_p: float
    basis_size: int


def _oscillator_basis_matrices(n: int, mass: float, omega_b: float, hbar: float):
    """Position and kinetic-energy matrices in an n-level oscillator basis."""
    idx = np.arange(n)
    x = np.zeros((n, n))
    off = np.sqrt(hbar * (idx[:-1] + 1.0) / (2.0 * mass * omega_b))
    x[idx[:-1], idx[:-1] + 1] = off
    x[idx[:-1] + 1, idx[:-1]] = off
    kin = np.zeros((n, n))
    kin[idx, idx] = 0.25 * hbar * omega_b * (2.0 * idx + 1.0)
    if n > 2:
        off2 = 0.25 * hbar * omega_b * np.sqrt((idx[:-2] + 1.0) * (idx[:-2] + 2.0))
        kin[idx[:-2], idx[:-2] + 2] = -off2
        kin[idx[:-2] + 2, idx[:-2]] = -off2
    return x, kin


def polynomial_ground_state(
    coefficients,
    mass: float,
    hbar: float,
    basis_size: int,
    basis_omega: float | None = None,
):
    """Ground state of H = p^2/2m + V(x) for polynomial V by diagonalization.

    Returns (energy, var_x, var_p) at the requested basis size.  The basis
    frequency only affects convergence speed, not the converged values.
    """
    coeffs = np.asarray(coefficients, dtype=float)
    if basis_omega is None:
        # variational guesses: curvature at the origin and the quartic scale
        w_quad = np.sqrt(max(2.0 * coeffs[2] / mass, 0.0)) if coeffs.size > 2 else 0.0
        w_quart = (
            (6.0 * coeffs[4] * hbar / mass**2) ** (1.0 / 3.0)
            if coeffs.size > 4 and coeffs[4] > 0.0
            else 0.0
        )
        basis_omega = max(w_quad, w_quart, 0.5)
    x, kin = _oscillator_basis_matrices(basis_size, mass, basis_omega, hbar)
    h = kin + coeffs[0] * np.eye(basis_size)
    xk = np.eye(basis_size)
    for c in coeffs[1:]:
        xk = xk @ x
        if c != 0.0:
            h = h + c * xk
    vals, vecs = np.linalg.eigh(h)
    ground = vecs[:, 0]
    energy = float(vals[0])
    mean_x = float(ground @ x @ ground)
    var_x = float(ground @ x @ x @ ground) - mean_x**2
    mean_kin = float(ground @ kin @ ground)
    # <p^2> = 2 m <T>; <p> = 0 for a real bound ground state
    var_p = 2.0 * mass * mean_kin
    return energy, var_x, var_p


def quartic_ground_oracle(
    lambda_coeff: float,
    hbar: float,
    basis_size: int = 64,
    mass: float = 1.0,
    rtol: float = 1.0e-8,
) -> QuarticGroundState:
    """Ground state of H = p^2/2m + lambda x^4, checked by basis doubling.

    Raises ConvergenceError when doubling the basis still moves the energy
    or the moments by more than rtol relative.
    """
    if lambda_coeff <= 0.0:
        raise ConfigurationError("lambda_coeff must be positive for a bound state")
    if hbar <= 0.0 or mass <= 0.0:
        raise ConfigurationError("hbar and mass must be positive")
    if basis_size < 8:
        raise ConfigurationError("basis_size must be at least 8")
    coeffs = (0.0, 0.0, 0.0, 0.0, float(lambda_coeff))
    omega_b = (6.0 * lambda_coeff * hbar / mass**2) ** (1.0 / 3.0)
    small = polynomial_ground_state(coeffs, mass, hbar, basis_size, omega_b)
    big = polynomial_ground_state(coeffs, mass, hbar, 2 * basis_size, omega_b)
    scale = max(abs(big[0]), abs(small[0]))
    drift = max(abs(b - s) / max(abs(b), 1e-300) for b, s in zip(big, small))
    if not np.isfinite(scale) or drift > rtol:
        raise ConvergenceError(
            f"quartic ground state not converged at basis_size={basis_size}: "
            f"relative drift {drift:.3e} under basis doubling exceeds {rtol:.1e}"
        )
    return QuarticGroundState(big[0], big[1], big[2], 2 * basis_size)


@dataclass(frozen=True)
class QuantumMoments:
    """Stationary quantum moments packaged for comparison reports."""

    var_x: float
    var_p: float
    mean_energy: float
    mass: float
    hbar: float
    label: str

    @staticmethod
    def from_oscillator(mass: float, omega: float, hbar: float) -> "QuantumMoments":
        g = oscillator_ground_oracle(mass, omega, hbar)
        energy = g.var_p / (2.0 * mass) + 0.5 * mass * omega**2 * g.var_x
        return QuantumMoments(g.var_x, g.var_p, energy, mass, hbar, "oscillator-ground")

    @staticmethod
    def from_quartic(lambda_coeff: float, hbar: float, mass: float = 1.0) -> "QuantumMoments":
        g = quartic_ground_oracle(lambda_coeff, hbar, mass=mass)
        return QuantumMoments(g.var_x, g.var_p, g.energy, mass, hbar, "quartic-ground")
