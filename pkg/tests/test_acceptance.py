"""End-to-end acceptance checks at the released parameter sets.

Each test exercises one headline behaviour and appends a PASS/FAIL line to
the terminal summary (see conftest).  Statistical checks run at frozen
seeds, so the expected numbers quoted next to each test are regression
values, not loose one-sided hopes; the frozen expectations were produced
by the same code and cross-checked against the independent closed-form or
basis-diagonalization oracles in zpfsim.oracles.

Runtime budgets: the stated per-criterion budgets assume a few desktop
cores.  The asserted limits are four times the stated numbers because CI
boxes often pin the whole suite to a single core; the measured wall time
is recorded in the summary detail line either way.
"""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

import conftest
from zpfsim.boost import boost_spectrum_check
from zpfsim.dynamics import SedConfig, run_ensemble
from zpfsim.field import build_mode_set, estimate_spectrum, sample_vacuum_amplitudes
from zpfsim.oracles import (
    GaussianWignerParams,
    oscillator_ground_oracle,
    quartic_ground_oracle,
    rotate_gaussian,
)
from zpfsim.potentials import harmonic, quartic
from zpfsim.units import UnitSystem
from zpfsim.wigner import (
    HamiltonianSpec,
    MoyalOrder,
    cfl_limit,
    evolve_wigner,
    gaussian_grid,
    hbar_scaling_study,
)

# stated budgets assume a few cores; CI may serialize everything onto one
BUDGET_SCALE = 4.0

# master seed for the two heavy ensembles; all frozen numbers below are
# tied to it
ENSEMBLE_SEED = 2026


def _record(cid: str, name: str, passed: bool, wall: float, detail: str) -> None:
    conftest.ACCEPTANCE_RECORDS.append((cid, name, passed, wall, detail))


def _ensemble_config(potential) -> SedConfig:
    return SedConfig(
        unit_system=UnitSystem(gamma=0.01),
        potential=potential,
        omega_min=0.2,
        omega_max=5.0,
        n_modes=256,
        dt=0.02,
        t_end=1000.0,
        t_burn=500.0,
        n_trajectories=500,
    )


@pytest.fixture(scope="module")
def harmonic_ensemble():
    """Gamma = 1e-2 harmonic run shared by the ground-state and gap tests."""
    t0 = time.perf_counter()
    stats = run_ensemble(_ensemble_config(harmonic(1.0, 1.0)), master_seed=ENSEMBLE_SEED)
    return stats, time.perf_counter() - t0


@pytest.fixture(scope="module")
def quartic_ensemble():
    """Same driving and coupling as above with V = x^4/4 instead."""
    t0 = time.perf_counter()
    stats = run_ensemble(_ensemble_config(quartic(0.25)), master_seed=ENSEMBLE_SEED)
    return stats, time.perf_counter() - t0


def test_c1_vacuum_mode_statistics():
    """10^5 modes: <|a|^2> = 0.500 +/- 0.005, mean mode energy hbar omega/2.

    Frozen at seed 11: <|a|^2> = 0.49724, energy ratio 0.99448.
    """
    t0 = time.perf_counter()
    units = UnitSystem(gamma=0.01)
    modes = build_mode_set(0.2, 5.0, 100_000, units, seed=11)
    realization = sample_vacuum_amplitudes(modes, seed=11)
    amp2 = float(realization.amplitude_sq().mean())
    energy_ratio = float(
        (realization.mode_energies(units.hbar) / (0.5 * units.hbar * modes.omega)).mean()
    )
    wall = time.perf_counter() - t0
    budget = BUDGET_SCALE * 1.0
    ok = abs(amp2 - 0.5) <= 0.005 and abs(energy_ratio - 1.0) <= 0.01 and wall < budget
    _record(
        "C1",
        "vacuum mode statistics",
        ok,
        wall,
        f"<|a|^2> = {amp2:.5f} (0.500 +/- 0.005), "
        f"mean E/(hbar w/2) = {energy_ratio:.5f} (1.000 +/- 0.010)",
    )
    assert abs(amp2 - 0.5) <= 0.005
    assert abs(energy_ratio - 1.0) <= 0.01
    assert wall < budget


def test_c2_spectrum_power_law():
    """Welch periodogram over [0.5, 5.0] fits exponent 3.0 +/- 0.15.

    Frozen at seed 42 (1024 modes, 1500 s record at dt = 0.1):
    exponent 2.988 +/- 0.071 over 57 segments.
    """
    t0 = time.perf_counter()
    units = UnitSystem(gamma=0.01)
    modes = build_mode_set(0.5, 5.0, 1024, units, seed=42)
    realization = sample_vacuum_amplitudes(modes, seed=42)
    pg = estimate_spectrum(realization, duration=1500.0, dt=0.1)
    wall = time.perf_counter() - t0
    budget = BUDGET_SCALE * 30.0
    ok = (
        pg.n_segments >= 50
        and abs(pg.fit_exponent - 3.0) <= 0.15
        and wall < budget
    )
    _record(
        "C2",
        "field spectrum omega^3 law",
        ok,
        wall,
        f"exponent {pg.fit_exponent:.4f} +/- {pg.fit_stderr:.4f} "
        f"(3.00 +/- 0.15) over {pg.n_segments} segments",
    )
    assert pg.n_segments >= 50
    assert abs(pg.fit_exponent - 3.0) <= 0.15
    assert wall < budget


def test_c3_lorentz_boost_discriminates_spectra():
    """beta = 0.3 boost: omega^3 invariant, omega^2 flagged, 10^6 modes.

    Frozen at seed 5: cubic exponent drift 0.018, band power ratio 0.9990,
    forward/backward 0.9985; the omega^2 run fails on forward/backward
    anisotropy 1.357.
    """
    t0 = time.perf_counter()
    cubic = boost_spectrum_check(3.0, 0.3, 1_000_000, seed=5)
    square = boost_spectrum_check(2.0, 0.3, 1_000_000, seed=5)
    wall = time.perf_counter() - t0
    drift = abs(cubic.exponent_after - cubic.exponent_before)
    budget = BUDGET_SCALE * 60.0
    ok = (
        cubic.invariant
        and drift < 0.05
        and abs(cubic.amplitude_ratio - 1.0) <= 0.02
        and not square.invariant
        and wall < budget
    )
    _record(
        "C3",
        "Lorentz boost invariance",
        ok,
        wall,
        f"omega^3: drift {drift:.4f} (< 0.05), power ratio "
        f"{cubic.amplitude_ratio:.4f} (1.00 +/- 0.02); omega^2 flagged: "
        f"{not square.invariant} (fwd/back {square.forward_backward_ratio:.3f})",
    )
    assert cubic.invariant
    assert drift < 0.05
    assert abs(cubic.amplitude_ratio - 1.0) <= 0.02
    assert not square.invariant
    assert wall < budget


def test_c4_harmonic_sed_ground_state(harmonic_ensemble):
    """Gamma = 1e-2 SED ensemble reproduces the ground-state moments to 10%.

    Frozen at master seed 2026: var_x = 0.4894 (se 0.0172),
    var_p = 0.5346 (se 0.0173), mean energy = 0.5120 (se 0.0122).
    The virial ratio var_p / var_x is checked here as well (1.0924 at the
    frozen seed) because this weak-coupling run is the scale on which the
    narrow-resonance equipartition actually holds; at the stronger
    couplings the module tests use, the band wings split the two variances
    by several percent more.
    """
    stats, wall = harmonic_ensemble
    target = oscillator_ground_oracle(1.0, 1.0, 1.0)
    target_energy = 0.5 * (target.var_p + target.var_x)
    virial = stats.var_p / stats.var_x
    budget = BUDGET_SCALE * 600.0
    ok = (
        abs(stats.var_x - target.var_x) <= 0.1 * target.var_x
        and abs(stats.var_p - target.var_p) <= 0.1 * target.var_p
        and abs(stats.mean_energy - target_energy) <= 0.1 * target_energy
        and abs(virial - 1.0) <= 0.1
        and stats.n_failed == 0
        and wall < budget
    )
    _record(
        "C4",
        "harmonic SED ground state",
        ok,
        wall,
        f"var_x = {stats.var_x:.4f}, var_p = {stats.var_p:.4f}, "
        f"E = {stats.mean_energy:.4f} (each 0.5 +/- 10%), "
        f"virial {virial:.3f}",
    )
    assert abs(stats.var_x - target.var_x) <= 0.1 * target.var_x
    assert abs(stats.var_p - target.var_p) <= 0.1 * target.var_p
    assert abs(stats.mean_energy - target_energy) <= 0.1 * target_energy
    assert abs(virial - 1.0) <= 0.1
    assert stats.n_failed == 0
    assert wall < budget


def test_c5_quadratic_evolution_is_order_independent():
    """V = x^2/2: order-0 and order-3 runs are bitwise identical.

    Every correction term carries a third or higher derivative of V, all
    identically zero polynomials here, so the two integrations perform the
    same floating-point work in the same order.
    """
    t0 = time.perf_counter()
    params = GaussianWignerParams(1.0, 0.0, 0.5, 0.5)
    w0 = gaussian_grid(params, (-6.0, 6.0), (-6.0, 6.0), 160, 160)
    ham = HamiltonianSpec(1.0, harmonic(1.0, 1.0), 1.0)
    dt = 0.9 * cfl_limit(w0, ham)
    liouville = evolve_wigner(w0, ham, 0, dt, 400)
    corrected = evolve_wigner(w0, ham, MoyalOrder(3), dt, 400)
    wall = time.perf_counter() - t0
    identical = np.array_equal(liouville.values, corrected.values)
    traces_match = np.array_equal(
        liouville.diagnostics["norm_trace"], corrected.diagnostics["norm_trace"]
    )
    budget = BUDGET_SCALE * 60.0
    ok = identical and traces_match and wall < budget
    _record(
        "C5",
        "quadratic exactness",
        ok,
        wall,
        f"endpoints bitwise equal: {identical}; "
        f"norm traces bitwise equal: {traces_match} ({400} steps, 160^2)",
    )
    assert identical
    assert traces_match
    assert wall < budget


def test_c6_harmonic_closure_after_one_period():
    """Displaced ground Gaussian returns to its rotation after one period.

    Frozen at 256^2, 4096 steps: L_inf error 3.6e-5 of the peak, against
    the 1e-3 gate.
    """
    t0 = time.perf_counter()
    params = GaussianWignerParams(1.0, 0.0, 0.5, 0.5)
    span = (-6.0, 6.0)
    w0 = gaussian_grid(params, span, span, 256, 256)
    ham = HamiltonianSpec(1.0, harmonic(1.0, 1.0), 1.0)
    n_steps = 4096
    dt = 2.0 * math.pi / n_steps
    assert dt <= cfl_limit(w0, ham)
    end = evolve_wigner(w0, ham, 0, dt, n_steps)
    analytic = gaussian_grid(
        rotate_gaussian(params, 1.0, 2.0 * math.pi), span, span, 256, 256
    )
    peak = float(np.max(np.abs(analytic.values)))
    linf = float(np.max(np.abs(end.values - analytic.values)))
    wall = time.perf_counter() - t0
    budget = BUDGET_SCALE * 120.0
    ok = linf <= 1.0e-3 * peak and wall < budget
    _record(
        "C6",
        "harmonic Wigner closure",
        ok,
        wall,
        f"L_inf = {linf / peak:.2e} of peak (<= 1e-3), "
        f"norm drift {end.diagnostics['norm_drift']:.2e}",
    )
    assert linf <= 1.0e-3 * peak
    assert wall < budget


def test_c7_order_gap_scales_as_hbar_squared():
    """D(hbar) between order-0 and order-1 runs fits slope 2.0 +/- 0.1.

    Deterministic (no sampling): slope 1.959 +/- 0.016 on the released
    grid, from D = 8.5e-4 at hbar = 0.05 to 5.0e-2 at hbar = 0.4.
    """
    t0 = time.perf_counter()
    report = hbar_scaling_study(quartic(0.25), (0.05, 0.1, 0.2, 0.4), 1.0)
    wall = time.perf_counter() - t0
    budget = BUDGET_SCALE * 600.0
    ok = abs(report.slope - 2.0) <= 0.1 and wall < budget
    _record(
        "C7",
        "hbar^2 scaling of the order gap",
        ok,
        wall,
        f"slope {report.slope:.4f} +/- {report.stderr:.4f} (2.00 +/- 0.10), "
        f"D = {report.distances[0]:.2e} .. {report.distances[-1]:.2e}",
    )
    assert abs(report.slope - 2.0) <= 0.1
    assert wall < budget


def test_c8_quartic_disagreement_exceeds_harmonic(harmonic_ensemble, quartic_ensemble):
    """SED misses the quartic ground state much harder than the harmonic one.

    Relative var_x deviation from the basis-diagonalization oracle must be
    at least 3x the harmonic case's.  Frozen at master seed 2026:
    quartic deviation 0.2322 vs harmonic 0.0213 (ratio 10.9); the quartic
    number is also pinned as a regression value.
    """
    stats_h, _ = harmonic_ensemble
    stats_q, wall = quartic_ensemble
    oracle = quartic_ground_oracle(0.25, 1.0)
    dev_q = abs(stats_q.var_x - oracle.var_x) / oracle.var_x
    dev_h = abs(stats_h.var_x - 0.5) / 0.5
    budget = BUDGET_SCALE * 600.0
    ok = (
        dev_q >= 3.0 * dev_h
        and abs(dev_q - 0.2322) <= 0.01
        and stats_q.n_failed == 0
        and wall < budget
    )
    _record(
        "C8",
        "quartic SED disagreement",
        ok,
        wall,
        f"var_x deviation {dev_q:.4f} vs harmonic {dev_h:.4f} "
        f"(ratio {dev_q / max(dev_h, 1e-300):.1f}, need >= 3); "
        f"frozen regression 0.2322 +/- 0.01",
    )
    assert dev_q >= 3.0 * dev_h
    assert abs(dev_q - 0.2322) <= 0.01
    assert stats_q.n_failed == 0
    assert wall < budget


def test_c9_module_property_suites_pass():
    """The per-module invariant and property tests all run green."""
    t0 = time.perf_counter()
    root = Path(__file__).resolve().parents[1]
    proc = subprocess.run(
        [
            sys.executable,
            "-m",
            "pytest",
            "tests",
            "-q",
            "--ignore",
            "tests/test_acceptance.py",
            "-p",
            "no:cacheprovider",
        ],
        cwd=root,
        capture_output=True,
        text=True,
        timeout=1500,
    )
    wall = time.perf_counter() - t0
    out = proc.stdout.strip() or proc.stderr.strip()
    tail = out.splitlines()[-1] if out else "no output"
    budget = BUDGET_SCALE * 300.0
    ok = proc.returncode == 0 and wall < budget
    _record("C9", "module property suites", ok, wall, tail)
    assert proc.returncode == 0, proc.stdout[-2000:]
    assert wall < budget
