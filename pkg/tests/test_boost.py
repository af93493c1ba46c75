"""Tests for the Lorentz-boost invariance check of power-law spectra.

The analytic targets for the flagged omega^2 case come from integrating
the Doppler-reweighted distribution in closed form at beta = 0.3: the
band-power ratio is 0.98421 and the forward/backward power ratio of the
boosted field is 1.35946.  Monte Carlo estimates must land on these within
sampling error, and only the omega^3 spectrum may pass the invariance
gate.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from zpfsim.boost import boost_modes, boost_spectrum_check
from zpfsim.errors import ConfigurationError

AMP_RATIO_S2 = 0.98421
FB_RATIO_S2 = 1.35946


# ---------------------------------------------------------------------------
# kinematics
# ---------------------------------------------------------------------------


def test_doppler_shift_along_the_axis():
    beta = 0.3
    gamma = 1.0 / np.sqrt(1.0 - beta**2)
    omega = np.array([1.0, 2.0])
    w_fwd, mu_fwd = boost_modes(omega, np.ones(2), beta)
    assert_allclose(w_fwd, gamma * (1.0 + beta) * omega, rtol=1.0e-14)
    assert_allclose(mu_fwd, 1.0, rtol=1.0e-14)
    w_bwd, mu_bwd = boost_modes(omega, -np.ones(2), beta)
    assert_allclose(w_bwd, gamma * (1.0 - beta) * omega, rtol=1.0e-14)
    assert_allclose(mu_bwd, -1.0, rtol=1.0e-14)


def test_boost_followed_by_inverse_boost_restores_modes():
    rng = np.random.default_rng(3)
    omega = rng.uniform(0.5, 5.0, size=1000)
    mu = rng.uniform(-1.0, 1.0, size=1000)
    w1, m1 = boost_modes(omega, mu, 0.45)
    w2, m2 = boost_modes(w1, m1, -0.45)
    assert_allclose(w2, omega, rtol=1.0e-12)
    assert_allclose(m2, mu, rtol=0, atol=1.0e-12)


def test_boost_modes_rejects_superluminal_beta():
    with pytest.raises(ConfigurationError):
        boost_modes(np.array([1.0]), np.array([0.0]), 0.7)


# ---------------------------------------------------------------------------
# invariance verdicts
# ---------------------------------------------------------------------------


def test_cubic_spectrum_is_invariant():
    report = boost_spectrum_check(3.0, 0.3, 400_000, seed=5)
    assert report.invariant
    assert abs(report.exponent_after - report.exponent_before) < 0.05
    assert abs(report.amplitude_ratio - 1.0) < 0.02
    assert abs(report.forward_backward_ratio - 1.0) < 0.05
    assert abs(report.exponent_before - 3.0) < 0.2


def test_quadratic_spectrum_is_flagged_with_analytic_ratios():
    report = boost_spectrum_check(2.0, 0.3, 400_000, seed=5)
    assert not report.invariant
    assert abs(report.amplitude_ratio - AMP_RATIO_S2) < 0.005
    assert abs(report.forward_backward_ratio - FB_RATIO_S2) < 0.04
    # the anisotropy clause alone already rules this spectrum out
    assert abs(report.forward_backward_ratio - 1.0) > 0.05


def test_quartic_spectrum_is_flagged():
    report = boost_spectrum_check(4.0, 0.3, 400_000, seed=5)
    assert not report.invariant


def test_zero_boost_is_the_identity():
    report = boost_spectrum_check(2.0, 0.0, 200_000, seed=1)
    assert report.exponent_after == report.exponent_before
    assert report.amplitude_ratio == 1.0
    assert report.invariant


def test_report_is_deterministic_in_the_seed():
    a = boost_spectrum_check(3.0, 0.3, 50_000, seed=2)
    b = boost_spectrum_check(3.0, 0.3, 50_000, seed=2)
    assert a.amplitude_ratio == b.amplitude_ratio
    assert np.array_equal(a.density_after, b.density_after)
    c = boost_spectrum_check(3.0, 0.3, 50_000, seed=3)
    assert a.amplitude_ratio != c.amplitude_ratio


def test_report_carries_complete_binned_densities():
    report = boost_spectrum_check(3.0, 0.3, 100_000, n_bins=20, seed=4)
    assert report.bin_centers.shape == (20,)
    assert np.all(report.density_before > 0.0)
    assert np.all(report.density_after > 0.0)
    assert report.window_lo < report.bin_centers[0] < report.bin_centers[-1] < report.window_hi


def test_boost_check_rejects_bad_arguments():
    with pytest.raises(ConfigurationError):
        boost_spectrum_check(3.0, 0.7, 100_000)
    with pytest.raises(ConfigurationError):
        boost_spectrum_check(3.0, -0.1, 100_000)
    with pytest.raises(ConfigurationError):
        boost_spectrum_check(3.0, 0.3, 500)
    with pytest.raises(ConfigurationError):
        boost_spectrum_check(3.0, 0.3, 100_000, omega_min=2.0, omega_max=1.0)
    with pytest.raises(ConfigurationError, match="too narrow"):
        boost_spectrum_check(3.0, 0.3, 100_000, omega_min=1.0, omega_max=1.5)
