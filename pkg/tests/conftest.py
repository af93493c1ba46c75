"""Shared fixtures and the acceptance-criteria terminal summary."""

import numpy as np
import pytest

from zpfsim.dynamics import SedConfig, run_ensemble
from zpfsim.potentials import harmonic
from zpfsim.units import UnitSystem

# (criterion id, description, passed, wall seconds, detail) tuples filled in
# by tests/test_acceptance.py
ACCEPTANCE_RECORDS: list[tuple] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RECORDS:
        return
    terminalreporter.section("acceptance criteria")
    for cid, name, passed, wall, detail in ACCEPTANCE_RECORDS:
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(
            f"{verdict}  {cid} {name}  [{wall:.1f}s]  {detail}"
        )


@pytest.fixture(scope="session")
def small_harmonic_stats():
    """Short harmonic ensemble reused by the statistical property tests.

    Gamma is raised to 0.05 so the transient fits a short horizon; the
    stationary moments then carry a few-percent finite-band bias, so
    assertions against the quantum values use generous tolerances.
    """
    cfg = SedConfig(
        unit_system=UnitSystem(gamma=0.05),
        potential=harmonic(1.0, 1.0),
        omega_min=0.2,
        omega_max=5.0,
        n_modes=128,
        dt=0.02,
        t_end=320.0,
        t_burn=110.0,
        n_trajectories=48,
    )
    return cfg, run_ensemble(cfg, master_seed=42)
