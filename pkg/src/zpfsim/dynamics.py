"""Charged-particle trajectories driven by the sampled zero-point force.

The equation of motion integrated here is

    m dx/dt = p
    dp/dt   = -V'(x) - tau * V''(x) * p / m + F(t)

where the middle term is the order-reduced radiation-reaction force: the
third derivative in m*tau*x''' is replaced by the time derivative of the
conservative acceleration, which removes the runaway solutions while
keeping the same weak-damping physics.  For the harmonic oscillator this
gives energy decay exp(-Gamma*omega0*t) with Gamma = tau*omega0.

Integration is classical RK4 with the driving force evaluated exactly on
the half-step grid (no interpolation).  Ensembles draw one fresh field
realization per trajectory from a counter-based stream, so results are
bit-reproducible for a given master seed, independent of worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import ConfigurationError, IntegrationBlowupError
from .field import FieldRealization, ModeSet, build_mode_set, force_psd, sample_vacuum_amplitudes, synth_field_grid
from .oracles import QuantumMoments, oscillator_ground_oracle
from .potentials import PotentialSpec
from .rng import STREAM_INIT, child_seed, stream
from .units import UnitSystem

RR_MODELS = ("order-reduced", "none")
INIT_SAMPLERS = ("fixed", "ground-wigner")

# steps between finite-ness checks of the ensemble state
_BLOWUP_CHECK = 64
# RK4 steps covered by one field-synthesis chunk; fixed so that results do
# not depend on scheduling
_FIELD_CHUNK = 2048
_MAX_FAILED_FRACTION = 0.01


@dataclass(frozen=True)
class ParticleState:
    t: float
    x: float
    p: float


@dataclass(frozen=True)
class SedConfig:
    """Everything needed to reproduce one stochastic trajectory ensemble."""

    unit_system: UnitSystem
    potential: PotentialSpec
    omega_min: float
    omega_max: float
    n_modes: int
    dt: float
    t_end: float
    t_burn: float
    n_trajectories: int = 1
    strategy: str = "stratified-jitter"
    rr_model: str = "order-reduced"
    x0: float = 0.0
    p0: float = 0.0
    init_sampler: str = "fixed"
    stride: int = 10
    workers: int = 1

    def __post_init__(self):
        u = self.unit_system
        if self.rr_model not in RR_MODELS:
            raise ConfigurationError(f"rr_model must be one of {RR_MODELS}")
        if self.init_sampler not in INIT_SAMPLERS:
            raise ConfigurationError(f"init_sampler must be one of {INIT_SAMPLERS}")
        if not self.potential.is_confining():
            raise ConfigurationError(
                "stationary runs need a confining potential (even degree >= 2 "
                f"with positive leading coefficient); got {self.potential.coefficients}"
            )
        if not (0.0 < self.omega_min < self.omega_max):
            raise ConfigurationError("need 0 < omega_min < omega_max")
        dt_max = min(0.02 * 2.0 * np.pi / u.omega0, np.pi / (2.0 * self.omega_max))
        if not (0.0 < self.dt <= dt_max * (1.0 + 1e-12)):
            raise ConfigurationError(
                f"dt = {self.dt} exceeds the resolution bound {dt_max:.6g} "
                "(50 steps per oscillator period and 4 per fastest-mode period)"
            )
        t_relax = 5.0 / (u.gamma * u.omega0)
        if self.t_burn * (1.0 + 1e-12) < t_relax:
            raise ConfigurationError(
                f"t_burn = {self.t_burn} shorter than five relaxation times "
                f"{t_relax:.6g}; the window would not be stationary"
            )
        if self.t_end < 2.0 * self.t_burn * (1.0 - 1e-12):
            raise ConfigurationError("t_end must be at least 2 * t_burn")
        if self.n_trajectories < 1:
            raise ConfigurationError("n_trajectories must be >= 1")
        if self.stride < 1:
            raise ConfigurationError("stride must be >= 1")
        if self.n_modes < 2:
            raise ConfigurationError("n_modes must be >= 2")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def burn_steps(self) -> int:
        return int(math.ceil(self.t_burn / self.dt - 1e-9))


def drift_force(potential: PotentialSpec, x):
    """Conservative force -V'(x)."""
    return -potential.grad(x)


def radiation_reaction_force(
    unit_system: UnitSystem, potential: PotentialSpec, x, p, rr_model: str = "order-reduced"
):
    """Order-reduced self-force -tau * V''(x) * p / m.

    Obtained from m*tau*x''' by substituting x'' -> -V'(x)/m and
    differentiating along the flow; vanishes for a free particle and for
    tau = 0, and reduces to linear friction -tau*omega0^2*p for the
    harmonic potential.
    """
    if rr_model == "none":
        return np.zeros_like(np.asarray(x, dtype=float))
    return -unit_system.tau * potential.curvature(x) * np.asarray(p) / unit_system.mass


@dataclass(frozen=True)
class Trajectory:
    """Stride-decimated (t, x, p) record of one trajectory."""

    t: np.ndarray
    x: np.ndarray
    p: np.ndarray
    realization_seed: int
    stride: int


@dataclass(frozen=True)
class EnsembleStats:
    """Stationary-window moments of an ensemble, with standard errors.

    Standard errors come from the scatter of per-trajectory window means
    across the ensemble; `halves` carries the same var_x estimate on the
    two halves of the window for stationarity checks.
    """

    config: SedConfig
    master_seed: int
    n_trajectories: int
    n_failed: int
    failed_indices: tuple[int, ...]
    mean_x: float
    se_mean_x: float
    mean_p: float
    se_mean_p: float
    var_x: float
    se_var_x: float
    var_p: float
    se_var_p: float
    mean_energy: float
    se_mean_energy: float
    n_effective_samples: int
    halves: dict = dc_field(default_factory=dict)


def _lane_modes(config: SedConfig, seed: int) -> ModeSet:
    """Mode set for one trajectory; stratified jitter is part of the draw."""
    return build_mode_set(
        config.omega_min,
        config.omega_max,
        config.n_modes,
        config.unit_system,
        strategy=config.strategy,
        seed=seed,
    )


def lane_realization(config: SedConfig, master_seed: int, index: int) -> FieldRealization:
    """Fresh field realization for trajectory `index`: jitter plus amplitudes."""
    seed = child_seed(master_seed, index)
    return sample_vacuum_amplitudes(_lane_modes(config, seed), seed)


def _lane_init(config: SedConfig, seeds: list[int]) -> tuple[np.ndarray, np.ndarray]:
    b = len(seeds)
    x = np.full(b, float(config.x0))
    p = np.full(b, float(config.p0))
    if config.init_sampler == "ground-wigner":
        u = config.unit_system
        g0 = oscillator_ground_oracle(u.mass, u.omega0, u.hbar)
        for j, seed in enumerate(seeds):
            g = stream(seed, STREAM_INIT)
            x[j] += math.sqrt(g0.var_x) * g.standard_normal()
            p[j] += math.sqrt(g0.var_p) * g.standard_normal()
    return x, p


def _step_block(config: SedConfig, realizations, x, p, record=None):
    """RK4 over the full time range for a block of lanes.

    Returns per-lane window sums (x, x^2, p, p^2, V) for the two halves of
    the stationary window, plus per-lane failure step (-1 where finite).
    `record`, if given, is a dict lane_index -> list collecting decimated
    (t, x, p) rows for that lane.
    """
    u = config.unit_system
    m = u.mass
    dt = config.dt
    half_dt = 0.5 * dt
    n_steps = config.n_steps
    burn = config.burn_steps
    mid = (burn + n_steps) // 2
    b = x.size
    dV = np.asarray(config.potential.derivative(1))
    d2V = np.asarray(config.potential.derivative(2))
    vc = np.asarray(config.potential.coefficients)
    tau = u.tau if config.rr_model == "order-reduced" else 0.0

    def accel(xa, pa, fa):
        force = -np.polynomial.polynomial.polyval(xa, dV)
        if tau != 0.0:
            force = force - tau * np.polynomial.polynomial.polyval(xa, d2V) * pa / m
        return force + fa

    sums = np.zeros((2, 5, b))  # [half, (x, x2, p, p2, V), lane]
    fail_step = np.full(b, -1, dtype=int)
    if record is not None:
        for j, rows in record.items():
            rows.append((0.0, x[j], p[j]))

    with np.errstate(over="ignore", invalid="ignore"):
        for c0 in range(0, n_steps, _FIELD_CHUNK):
            c1 = min(c0 + _FIELD_CHUNK, n_steps)
            n_half = 2 * (c1 - c0) + 1
            fgrid = np.empty((n_half, b))
            if realizations is None:
                fgrid.fill(0.0)
            else:
                for j, r in enumerate(realizations):
                    fgrid[:, j] = synth_field_grid(r, c0 * dt, half_dt, n_half)
            for k in range(c0, c1):
                i = 2 * (k - c0)
                f0, fh, f1 = fgrid[i], fgrid[i + 1], fgrid[i + 2]
                k1x = p / m
                k1p = accel(x, p, f0)
                x2 = x + half_dt * k1x
                p2 = p + half_dt * k1p
                k2x = p2 / m
                k2p = accel(x2, p2, fh)
                x3 = x + half_dt * k2x
                p3 = p + half_dt * k2p
                k3x = p3 / m
                k3p = accel(x3, p3, fh)
                x4 = x + dt * k3x
                p4 = p + dt * k3p
                k4x = p4 / m
                k4p = accel(x4, p4, f1)
                x = x + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
                p = p + (dt / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
                step = k + 1
                if step > burn:
                    hsel = 0 if step <= mid else 1
                    s = sums[hsel]
                    s[0] += x
                    s[1] += x * x
                    s[2] += p
                    s[3] += p * p
                    s[4] += np.polynomial.polynomial.polyval(x, vc)
                if record is not None and step % config.stride == 0:
                    t = step * dt
                    for j, rows in record.items():
                        rows.append((t, x[j], p[j]))
                if step % _BLOWUP_CHECK == 0 or step == n_steps:
                    bad = ~(np.isfinite(x) & np.isfinite(p))
                    new = bad & (fail_step < 0)
                    if np.any(new):
                        fail_step[new] = step
    return sums, fail_step


def integrate_trajectory(
    config: SedConfig,
    realization: FieldRealization | None,
    init: ParticleState | None = None,
) -> Trajectory:
    """Integrate one trajectory; pass realization=None for a field-free run.

    Deterministic given (config, realization, init).  Raises
    IntegrationBlowupError when the state leaves float range.
    """
    x0 = config.x0 if init is None else init.x
    p0 = config.p0 if init is None else init.p
    x = np.array([float(x0)])
    p = np.array([float(p0)])
    record: dict[int, list] = {0: []}
    reals = None if realization is None else [realization]
    _, fail = _step_block(config, reals, x, p, record=record)
    if fail[0] >= 0:
        raise IntegrationBlowupError(
            f"trajectory left float range near t = {fail[0] * config.dt:.6g}",
            time=fail[0] * config.dt,
        )
    rows = np.array(record[0])
    seed = -1 if realization is None else realization.seed
    return Trajectory(rows[:, 0], rows[:, 1], rows[:, 2], seed, config.stride)


def _ensemble_block(args) -> tuple[np.ndarray, np.ndarray]:
    config, master_seed, indices = args
    seeds = [child_seed(master_seed, k) for k in indices]
    reals = [
        sample_vacuum_amplitudes(_lane_modes(config, s), s) for s in seeds
    ]
    x, p = _lane_init(config, seeds)
    return _step_block(config, reals, x, p)


def run_ensemble(config: SedConfig, master_seed: int) -> EnsembleStats:
    """Independent trajectories k = 0..n-1, reduced to stationary moments.

    Trajectory k depends only on (master_seed, k); the cross-trajectory
    reduction uses exact summation (math.fsum), so the result is identical
    for any worker count or execution order.  Failed (blown-up) lanes are
    dropped and recorded if they stay at or below 1% of the ensemble;
    beyond that the run aborts.
    """
    n = config.n_trajectories
    block = 128
    jobs = [
        (config, master_seed, range(lo, min(lo + block, n)))
        for lo in range(0, n, block)
    ]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(_ensemble_block, jobs))
    else:
        parts = [_ensemble_block(j) for j in jobs]
    sums = np.concatenate([p[0] for p in parts], axis=2)
    fail_step = np.concatenate([p[1] for p in parts])

    failed = np.flatnonzero(fail_step >= 0)
    if failed.size > _MAX_FAILED_FRACTION * n:
        raise IntegrationBlowupError(
            f"{failed.size}/{n} trajectories blew up; first failure near "
            f"t = {fail_step[failed[0]] * config.dt:.6g}",
            time=float(np.min(fail_step[failed])) * config.dt,
            indices=tuple(int(i) for i in failed),
        )
    ok = fail_step < 0
    n_ok = int(np.count_nonzero(ok))
    if n_ok == 0:
        raise IntegrationBlowupError("all trajectories failed", time=0.0, indices=tuple(failed))

    burn, n_steps = config.burn_steps, config.n_steps
    mid = (burn + n_steps) // 2
    counts = (mid - burn, n_steps - mid)
    u = config.unit_system

    def reduce_window(win_sums, n_win):
        means = win_sums[:, ok] / n_win  # (5, n_ok) per-lane window means
        out = {}
        for name, row in zip(("x", "x2", "p", "p2", "V"), means):
            vals = [float(v) for v in row]
            mean = math.fsum(vals) / n_ok
            if n_ok > 1:
                var = math.fsum((v - mean) ** 2 for v in vals) / (n_ok - 1)
                se = math.sqrt(var / n_ok)
            else:
                se = float("nan")
            out[name] = (mean, se)
        return out

    full = reduce_window(sums[0] + sums[1], counts[0] + counts[1])
    h1 = reduce_window(sums[0], counts[0])
    h2 = reduce_window(sums[1], counts[1])

    def var_of(momdict):
        m1, se1 = momdict["x"]
        m2, se2 = momdict["x2"]
        return m2 - m1 * m1, se2

    var_x, se_var_x = full["x2"][0] - full["x"][0] ** 2, full["x2"][1]
    var_p, se_var_p = full["p2"][0] - full["p"][0] ** 2, full["p2"][1]
    mean_energy = full["p2"][0] / (2.0 * u.mass) + full["V"][0]
    se_energy = math.sqrt(
        (full["p2"][1] / (2.0 * u.mass)) ** 2 + full["V"][1] ** 2
    )
    window = config.t_end - config.t_burn
    n_eff = n_ok * max(1, int(window * u.gamma * u.omega0))
    return EnsembleStats(
        config=config,
        master_seed=int(master_seed),
        n_trajectories=n,
        n_failed=int(failed.size),
        failed_indices=tuple(int(i) for i in failed),
        mean_x=full["x"][0],
        se_mean_x=full["x"][1],
        mean_p=full["p"][0],
        se_mean_p=full["p"][1],
        var_x=var_x,
        se_var_x=se_var_x,
        var_p=var_p,
        se_var_p=se_var_p,
        mean_energy=mean_energy,
        se_mean_energy=se_energy,
        n_effective_samples=n_eff,
        halves={
            "var_x": (var_of(h1)[0], var_of(h1)[1], var_of(h2)[0], var_of(h2)[1]),
        },
    )


@dataclass(frozen=True)
class ComparisonRow:
    name: str
    simulated: float
    stderr: float
    reference: float
    rel_deviation: float
    significance: float


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[ComparisonRow, ...]
    tolerance: float
    agree: bool
    oracle_label: str


def stationary_report(
    stats: EnsembleStats, oracle: QuantumMoments, tolerance: float = 0.10
) -> ComparisonReport:
    """Compare ensemble moments against quantum reference moments.

    `agree` is true when every relative deviation stays within `tolerance`.
    The oracle must have been computed in the same unit system as the run.
    """
    u = stats.config.unit_system
    if not (
        math.isclose(oracle.mass, u.mass, rel_tol=1e-12)
        and math.isclose(oracle.hbar, u.hbar, rel_tol=1e-12)
    ):
        raise ConfigurationError(
            "oracle moments and ensemble use different unit systems: "
            f"mass {oracle.mass} vs {u.mass}, hbar {oracle.hbar} vs {u.hbar}"
        )
    pairs = (
        ("var_x", stats.var_x, stats.se_var_x, oracle.var_x),
        ("var_p", stats.var_p, stats.se_var_p, oracle.var_p),
        ("mean_energy", stats.mean_energy, stats.se_mean_energy, oracle.mean_energy),
    )
    rows = []
    for name, sim, se, ref in pairs:
        rel = (sim - ref) / ref
        sig = (sim - ref) / se if se > 0.0 else float("inf")
        rows.append(ComparisonRow(name, sim, se, ref, rel, sig))
    agree = all(abs(r.rel_deviation) <= tolerance for r in rows)
    return ComparisonReport(tuple(rows), tolerance, agree, oracle.label)


def expected_band_power(config: SedConfig) -> float:
    """Trapezoid integral of S_F over the configured band (diagnostic)."""
    grid = np.linspace(config.omega_min, config.omega_max, 20001)
    return float(np.trapezoid(force_psd(grid, config.unit_system), grid))
