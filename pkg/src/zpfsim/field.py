"""Discretized zero-point force field.

The random force seen by a bound charge is represented as a finite cosine
sum over a frequency band,

    F(t) = sum_l h_l * (u_l cos(omega_l t) + v_l sin(omega_l t)),

with u_l, v_l independent standard normals.  The weights are fixed by the
one-sided force spectral density of the zero-point background,

    S_F(omega) = hbar * m * tau * omega^3 / pi,

via h_l^2 = S_F(omega_l) * dOmega_l.  This normalization is the one that
makes a weakly damped oscillator settle at mean energy hbar*omega0/2 (the
fluctuation-dissipation balance); the cubic frequency dependence makes the
spectrum Lorentz invariant.  Complex mode amplitudes a_l = (u_l + i v_l)/2
then have <|a_l|^2> = 1/2, i.e. mean mode energy hbar*omega_l/2.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .errors import ConfigurationError
from .rng import STREAM_AMPLITUDES, STREAM_MODE_JITTER, stream
from .units import UnitSystem

STRATEGIES = ("uniform", "stratified-jitter")

# Welch estimator: keep at least this many averaged segments.
MIN_SEGMENTS = 50
# Log-log fit window inside the band, clear of discretization edges.
FIT_LO_FACTOR = 1.25
FIT_HI_FACTOR = 0.80


def force_psd(omega, units: UnitSystem):
    """One-sided force spectral density S_F(omega) = hbar m tau omega^3 / pi."""
    w = np.asarray(omega, dtype=float)
    return units.hbar * units.mass * units.tau * w**3 / np.pi


@dataclass(frozen=True)
class ModeSet:
    """Frequency comb with per-mode weights h_l over [omega_min, omega_max]."""

    omega: np.ndarray
    h: np.ndarray
    omega_min: float
    omega_max: float
    strategy: str
    seed: int
    unit_system: UnitSystem

    def __post_init__(self):
        if self.omega.ndim != 1 or self.omega.shape != self.h.shape:
            raise ConfigurationError("omega and h must be 1-d arrays of equal length")
        if self.omega.size < 1:
            raise ConfigurationError("mode set must contain at least one mode")
        if np.any(np.diff(self.omega) <= 0.0):
            raise ConfigurationError("mode frequencies must be strictly increasing")
        if self.omega[0] < self.omega_min or self.omega[-1] > self.omega_max:
            raise ConfigurationError("mode frequencies must lie inside the band")
        if np.any(self.h < 0.0):
            raise ConfigurationError("mode weights must be non-negative")

    @property
    def n_modes(self) -> int:
        return self.omega.size

    def band_power(self) -> float:
        """Total force-noise power carried by the comb, sum of h_l^2."""
        return float(np.sum(self.h**2))


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=float)
    arr.flags.writeable = False
    return arr


def build_mode_set(
    omega_min: float,
    omega_max: float,
    n_modes: int,
    unit_system: UnitSystem,
    strategy: str = "stratified-jitter",
    seed: int = 0,
) -> ModeSet:
    """Partition [omega_min, omega_max] into n_modes bins and weight them.

    `uniform` places each mode at its bin center; `stratified-jitter` draws
    one frequency uniformly inside each bin, which kills the Poincare
    recurrence of an evenly spaced comb while keeping the band coverage
    stratified.  Weights start from h_l^2 = S_F(omega_l) * bin_width and
    are then rescaled by a common factor so that sum h_l^2 equals the
    band integral of S_F exactly; without that, jittered draws carry an
    O(1/sqrt(n)) noise in the total drive power, and an ensemble of
    per-trajectory combs would see rare draws past any fixed gate.
    """
    if not (0.0 < omega_min < omega_max):
        raise ConfigurationError(
            f"need 0 < omega_min < omega_max, got [{omega_min}, {omega_max}]"
        )
    if n_modes < 2:
        raise ConfigurationError("n_modes must be at least 2")
    if strategy not in STRATEGIES:
        raise ConfigurationError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    edges = np.linspace(omega_min, omega_max, n_modes + 1)
    width = (omega_max - omega_min) / n_modes
    centers = 0.5 * (edges[:-1] + edges[1:])

    # the comb must resolve the curvature of S_F: gate on the deterministic
    # midpoint-rule sum so that acceptance does not depend on the jitter draw
    fine = np.linspace(omega_min, omega_max, 20001)
    target = float(np.trapezoid(force_psd(fine, unit_system), fine))
    midpoint = float(np.sum(force_psd(centers, unit_system) * width))
    if abs(midpoint - target) > 0.01 * target:
        raise ConfigurationError(
            f"sum h_l^2 = {midpoint:.6e} misses the band power {target:.6e} by more "
            "than 1%; increase n_modes to resolve the omega^3 spectrum"
        )

    if strategy == "uniform":
        omega = centers
    else:
        g = stream(seed, STREAM_MODE_JITTER)
        omega = edges[:-1] + width * g.uniform(0.0, 1.0, size=n_modes)
    h_sq = force_psd(omega, unit_system) * width
    h = np.sqrt(h_sq * (target / float(np.sum(h_sq))))
    return ModeSet(
        _freeze(omega), _freeze(h), float(omega_min), float(omega_max), strategy, int(seed), unit_system
    )


@dataclass(frozen=True)
class FieldRealization:
    """One draw of the vacuum amplitudes on a mode set."""

    mode_set: ModeSet
    u: np.ndarray
    v: np.ndarray
    seed: int

    def __post_init__(self):
        n = self.mode_set.n_modes
        if self.u.shape != (n,) or self.v.shape != (n,):
            raise ConfigurationError("u and v must match the mode count")

    def amplitude_sq(self) -> np.ndarray:
        """|a_l|^2 with a_l = (u_l + i v_l)/2."""
        return 0.25 * (self.u**2 + self.v**2)

    def mode_energies(self, hbar: float) -> np.ndarray:
        """Per-mode energies hbar*omega_l*|a_l|^2 (mean hbar*omega_l/2)."""
        return hbar * self.mode_set.omega * self.amplitude_sq()

    def quadratures(self, hbar: float) -> tuple[np.ndarray, np.ndarray]:
        """Oscillator quadratures y_l = sqrt(2 hbar/omega) Re a, q_l = sqrt(2 hbar omega) Im a."""
        w = self.mode_set.omega
        y = np.sqrt(2.0 * hbar / w) * (0.5 * self.u)
        q = np.sqrt(2.0 * hbar * w) * (0.5 * self.v)
        return y, q


def sample_vacuum_amplitudes(mode_set: ModeSet, seed: int) -> FieldRealization:
    """Draw u_l, v_l ~ N(0,1) from the counter-based stream keyed by seed.

    The result is a pure function of (seed, l): no other draws, worker
    counts, or call orders can shift it.
    """
    g = stream(seed, STREAM_AMPLITUDES)
    uv = g.standard_normal((mode_set.n_modes, 2))
    return FieldRealization(mode_set, _freeze(uv[:, 0]), _freeze(uv[:, 1]), int(seed))


def _field_samples(realization: FieldRealization, times: np.ndarray) -> np.ndarray:
    """F at the given times by direct evaluation of the cosine sum.

    The per-mode products and the summation order over modes are fixed, so
    any caller evaluating the same instant gets the bit-identical float.
    """
    omega = realization.mode_set.omega
    w = realization.mode_set.h * realization.u
    z = realization.mode_set.h * realization.v
    out = np.empty(times.size)
    chunk = max(16, (1 << 18) // max(omega.size, 1))
    for lo in range(0, times.size, chunk):
        phase = np.multiply.outer(times[lo : lo + chunk], omega)
        out[lo : lo + chunk] = np.sum(np.cos(phase) * w + np.sin(phase) * z, axis=1)
    return out


def eval_field(realization: FieldRealization, t: float) -> float:
    """Force F(t) of this realization at one instant."""
    return float(_field_samples(realization, np.array([float(t)]))[0])


def eval_field_grid(
    realization: FieldRealization, t0: float, dt: float, n_steps: int
) -> np.ndarray:
    """F on the uniform grid t0 + k*dt, k = 0..n_steps-1.

    Entry k is bit-identical to eval_field at t0 + k*dt.  Requires
    dt < pi/omega_max so the fastest mode is resolved.
    """
    if n_steps < 1:
        raise ConfigurationError("n_steps must be >= 1")
    if dt <= 0.0 or dt >= np.pi / realization.mode_set.omega_max:
        raise ConfigurationError(
            f"dt = {dt} does not resolve the fastest mode; need 0 < dt < "
            f"pi/omega_max = {np.pi / realization.mode_set.omega_max:.6g}"
        )
    times = float(t0) + float(dt) * np.arange(n_steps)
    return _field_samples(realization, times)


def synth_field_grid(
    realization: FieldRealization, t0: float, dt: float, n_steps: int, chunk: int = 4096
) -> np.ndarray:
    """Fast field synthesis on a uniform grid via phasor recurrence.

    Each mode's phasor exp(i omega t) advances by a constant rotation per
    step; the recurrence is reseeded with exact phases every `chunk` steps,
    which caps the accumulated rounding at ~1e-12 relative.  Deterministic,
    but not bit-identical to eval_field_grid; integrators use this path.
    """
    omega = realization.mode_set.omega
    w = realization.mode_set.h * realization.u
    z = realization.mode_set.h * realization.v
    m = omega.size
    chunk = int(max(64, min(chunk, (1 << 21) // max(m, 1))))
    out = np.empty(n_steps)
    rot = np.exp(1j * omega * dt)
    for lo in range(0, n_steps, chunk):
        n = min(chunk, n_steps - lo)
        steps = np.ones((n, m), dtype=complex)
        steps[1:] = rot
        phasor = np.exp(1j * omega * (t0 + lo * dt)) * np.cumprod(steps, axis=0)
        out[lo : lo + n] = np.sum(phasor.real * w + phasor.imag * z, axis=1)
    return out


@dataclass(frozen=True)
class Periodogram:
    """Welch-averaged spectrum of a field realization with a power-law fit."""

    omega: np.ndarray
    power: np.ndarray
    fit_exponent: float
    fit_stderr: float
    n_segments: int
    fit_lo: float
    fit_hi: float


def _loglog_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    lx = np.log(x)
    ly = np.log(y)
    coeffs, cov = np.polyfit(lx, ly, 1, cov=True)
    return float(coeffs[0]), float(np.sqrt(cov[0, 0]))


def estimate_spectrum(
    realization: FieldRealization, duration: float, dt: float
) -> Periodogram:
    """Welch periodogram of F over [0, duration] sampled at dt.

    The record must span at least 50 fundamental periods of the slowest
    mode and dt must oversample the fastest mode four-fold; the power-law
    exponent is fitted on [1.25 omega_min, 0.8 omega_max], clear of the
    band edges where discretization bias creeps in.
    """
    ms = realization.mode_set
    if ms.n_modes < 2:
        raise ConfigurationError("cannot fit a spectral slope with fewer than 2 modes")
    if duration < MIN_SEGMENTS * (2.0 * np.pi / ms.omega_min):
        raise ConfigurationError(
            f"duration {duration} too short: need at least "
            f"{MIN_SEGMENTS * 2.0 * np.pi / ms.omega_min:.1f} for {MIN_SEGMENTS} segments"
        )
    if dt > np.pi / (4.0 * ms.omega_max):
        raise ConfigurationError(
            f"dt = {dt} too coarse: need dt <= pi/(4 omega_max) = "
            f"{np.pi / (4.0 * ms.omega_max):.6g}"
        )
    n = int(round(duration / dt)) + 1
    series = synth_field_grid(realization, 0.0, dt, n)
    nperseg = 1 << int(np.log2(n / (MIN_SEGMENTS / 2.0 + 1.0)))
    freqs, pxx = signal.welch(
        series, fs=1.0 / dt, window="hann", nperseg=nperseg, detrend="constant"
    )
    n_segments = (n - nperseg // 2) // (nperseg - nperseg // 2)
    omega = 2.0 * np.pi * freqs[1:]
    power = pxx[1:] / (2.0 * np.pi)  # density per rad/s
    lo = FIT_LO_FACTOR * ms.omega_min
    hi = FIT_HI_FACTOR * ms.omega_max
    sel = (omega >= lo) & (omega <= hi) & (power > 0.0)
    if np.count_nonzero(sel) < 5:
        raise ConfigurationError(
            "fewer than 5 spectral bins in the fit window; the band or the "
            "record is too narrow to fit a slope"
        )
    slope, stderr = _loglog_slope(omega[sel], power[sel])
    return Periodogram(
        _freeze(omega), _freeze(power), slope, stderr, int(n_segments), lo, hi
    )


# ---------------------------------------------------------------------------
# serialization

CSV_HEADER = "omega,h,u,v"


def realization_to_csv(realization: FieldRealization) -> str:
    """CSV with one row per mode and a comment header carrying the seed/band."""
    ms = realization.mode_set
    buf = io.StringIO()
    buf.write(
        f"# seed={realization.seed} omega_min={ms.omega_min!r} "
        f"omega_max={ms.omega_max!r} strategy={ms.strategy} mode_seed={ms.seed} "
        f"hbar={ms.unit_system.hbar!r} mass={ms.unit_system.mass!r} "
        f"omega0={ms.unit_system.omega0!r} gamma={ms.unit_system.gamma!r}\n"
    )
    buf.write(CSV_HEADER + "\n")
    for w, h, u, v in zip(ms.omega, ms.h, realization.u, realization.v):
        buf.write(f"{float(w)!r},{float(h)!r},{float(u)!r},{float(v)!r}\n")
    return buf.getvalue()


def realization_from_csv(text: str) -> FieldRealization:
    """Inverse of realization_to_csv; round-trips bit-exactly."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("# "):
        raise ConfigurationError("missing '# seed=' header line")
    meta: dict[str, str] = {}
    for tok in lines[0][2:].split():
        if "=" not in tok:
            raise ConfigurationError(f"malformed header token {tok!r}")
        key, val = tok.split("=", 1)
        meta[key] = val
    if lines[1] != CSV_HEADER:
        raise ConfigurationError(f"expected column header {CSV_HEADER!r}, got {lines[1]!r}")
    try:
        rows = np.array(
            [[float(cell) for cell in ln.split(",")] for ln in lines[2:]], dtype=float
        )
    except ValueError as exc:
        raise ConfigurationError(f"malformed data row: {exc}") from exc
    if rows.ndim != 2 or rows.shape[1] != 4:
        raise ConfigurationError("each data row must have 4 columns: omega,h,u,v")
    units = UnitSystem(
        hbar=float(meta["hbar"]),
        mass=float(meta["mass"]),
        omega0=float(meta["omega0"]),
        gamma=float(meta["gamma"]),
    )
    ms = ModeSet(
        _freeze(rows[:, 0]),
        _freeze(rows[:, 1]),
        float(meta["omega_min"]),
        float(meta["omega_max"]),
        meta["strategy"],
        int(meta["mode_seed"]),
        units,
    )
    return FieldRealization(ms, _freeze(rows[:, 2]), _freeze(rows[:, 3]), int(meta["seed"]))
