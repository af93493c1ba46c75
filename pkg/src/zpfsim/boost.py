"""Monte Carlo Lorentz-boost test of a power-law radiation spectrum.

A homogeneous isotropic radiation field with spectral energy density
rho(omega) ~ omega^s is sampled as plane-wave modes: frequencies with
count density ~ omega^(s-1) (each mode carrying energy ~ omega, so the
binned energy density is ~ omega^s) and isotropic propagation directions.
A boost with velocity beta maps each mode by the relativistic Doppler
shift and aberration,

    omega' = gamma*omega*(1 + beta*mu),    mu' = (mu + beta)/(1 + beta*mu),

and a plane wave's energy density picks up the squared Doppler factor
(one factor from the photon energy, one from the photon flux), so each
mode is reweighted by D^2 = (omega'/omega)^2.

Only the cubic spectrum survives this map unchanged: for any other
exponent the boosted field is anisotropic (the forward hemisphere
outshines the backward one at first order in beta) and its band power
shifts.  The report therefore carries, besides the fitted exponents and
the full-sphere band-power ratio, the forward/backward power ratio of the
boosted field; `invariant` requires all three to sit at their identity
values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .rng import STREAM_BOOST, stream

BETA_MAX = 0.6
EXPONENT_DRIFT_TOL = 0.05
AMPLITUDE_TOL = 0.02
ANISOTROPY_TOL = 0.05


@dataclass(frozen=True)
class BoostReport:
    """Spectrum comparison between the rest frame and the boosted frame."""

    spectral_exponent: float
    beta: float
    n_samples: int
    window_lo: float
    window_hi: float
    bin_centers: np.ndarray
    density_before: np.ndarray
    density_after: np.ndarray
    exponent_before: float
    exponent_after: float
    amplitude_ratio: float
    forward_backward_ratio: float
    invariant: bool


def _sample_power_law(g: np.random.Generator, s: float, lo: float, hi: float, n: int):
    """Frequencies with density ~ omega^(s-1) on [lo, hi] via inverse CDF."""
    u = g.uniform(0.0, 1.0, size=n)
    if abs(s) < 1.0e-12:
        return lo * np.exp(u * np.log(hi / lo))
    return (lo**s + u * (hi**s - lo**s)) ** (1.0 / s)


def _binned_density(omega: np.ndarray, weight: np.ndarray, edges: np.ndarray):
    power, _ = np.histogram(omega, bins=edges, weights=weight)
    return power / np.diff(edges)


def _slope(centers: np.ndarray, density: np.ndarray) -> float:
    sel = density > 0.0
    if np.count_nonzero(sel) < 3:
        raise ConfigurationError("too few populated bins to fit a spectral exponent")
    return float(np.polyfit(np.log(centers[sel]), np.log(density[sel]), 1)[0])


def boost_spectrum_check(
    spectral_exponent: float,
    beta: float,
    n_samples: int,
    omega_min: float = 0.5,
    omega_max: float = 5.0,
    n_bins: int = 24,
    seed: int = 0,
) -> BoostReport:
    """Boost a sampled omega^s spectrum and compare it with itself.

    The comparison window [gamma*(1+beta)*omega_min, gamma*(1-beta)*omega_max]
    keeps only frequencies whose boosted population is complete, so band
    edges cannot fake a deviation.
    """
    if not (0.0 <= beta <= BETA_MAX):
        raise ConfigurationError(f"beta must lie in [0, {BETA_MAX}], got {beta}")
    if n_samples < 1000:
        raise ConfigurationError("n_samples must be at least 1000")
    if not (0.0 < omega_min < omega_max):
        raise ConfigurationError("need 0 < omega_min < omega_max")
    gamma = 1.0 / np.sqrt(1.0 - beta * beta)
    win_lo = gamma * (1.0 + beta) * omega_min
    win_hi = gamma * (1.0 - beta) * omega_max
    if win_lo >= win_hi:
        raise ConfigurationError(
            f"band [{omega_min}, {omega_max}] too narrow for beta={beta}: the "
            "boosted interior window is empty; widen the band"
        )

    g = stream(seed, STREAM_BOOST)
    omega = _sample_power_law(g, spectral_exponent, omega_min, omega_max, n_samples)
    mu = g.uniform(-1.0, 1.0, size=n_samples)
    energy = omega.copy()  # per-mode energy ~ omega; prefactors cancel in ratios

    doppler = gamma * (1.0 + beta * mu)
    omega_b = doppler * omega
    mu_b = (mu + beta) / (1.0 + beta * mu)
    energy_b = energy * doppler**2

    edges = np.geomspace(win_lo, win_hi, n_bins + 1)
    centers = np.sqrt(edges[:-1] * edges[1:])
    density_before = _binned_density(omega, energy, edges)
    density_after = _binned_density(omega_b, energy_b, edges)

    in_before = (omega >= win_lo) & (omega <= win_hi)
    in_after = (omega_b >= win_lo) & (omega_b <= win_hi)
    power_before = float(np.sum(energy[in_before]))
    power_after = float(np.sum(energy_b[in_after]))
    fwd = float(np.sum(energy_b[in_after & (mu_b > 0.0)]))
    bwd = float(np.sum(energy_b[in_after & (mu_b < 0.0)]))
    if power_before <= 0.0 or bwd <= 0.0:
        raise ConfigurationError("degenerate sample: no power in the comparison window")

    exp_before = _slope(centers, density_before)
    exp_after = _slope(centers, density_after)
    amplitude_ratio = power_after / power_before
    fb_ratio = fwd / bwd
    invariant = (
        abs(exp_after - exp_before) < EXPONENT_DRIFT_TOL
        and abs(amplitude_ratio - 1.0) < AMPLITUDE_TOL
        and abs(fb_ratio - 1.0) < ANISOTROPY_TOL
    )
    arr = np.ascontiguousarray
    return BoostReport(
        float(spectral_exponent),
        float(beta),
        int(n_samples),
        float(win_lo),
        float(win_hi),
        arr(centers),
        arr(density_before),
        arr(density_after),
        exp_before,
        exp_after,
        amplitude_ratio,
        fb_ratio,
        invariant,
    )


def boost_modes(
    omega: np.ndarray, mu: np.ndarray, beta: float
) -> tuple[np.ndarray, np.ndarray]:
    """Doppler shift and aberration for given modes; exact involution with -beta."""
    if not (-BETA_MAX <= beta <= BETA_MAX):
        raise ConfigurationError(f"|beta| must not exceed {BETA_MAX}")
    gamma = 1.0 / np.sqrt(1.0 - beta * beta)
    d = gamma * (1.0 + beta * mu)
    return d * omega, (mu + beta) / (1.0 + beta * mu)
