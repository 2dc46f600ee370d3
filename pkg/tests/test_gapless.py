"""Level-set spike detector: threshold constants, containment, resolution, windows."""

import math

import numpy as np
import pytest

from rmpe.audits import audit_level_set, audit_window_construction, max_distance_to_points
from rmpe.gapless import (
    EmptyLevelSet,
    GaplessParams,
    TooManyWindows,
    _grid_magnitude,
    build_windows,
    filtered_magnitude,
    gapless_params,
    gauss_taper,
    level_set,
)
from rmpe.intervals import TorusIntervalSet
from rmpe.measurement import MomentSignal, SpectrumModel, exact_moments


def noiseless_signal(model, k_max):
    return MomentSignal(
        amplification=1.0,
        k_max=k_max,
        values=exact_moments(model, np.arange(k_max + 1, dtype=float)),
    )


def fake_params(tau_over_k, k_max=200, beta=0.5, omega=0.0, threshold=1.0, phi_s=10.0):
    """Hand-built constants for window-merging tests."""
    tau = tau_over_k * k_max
    return GaplessParams(
        beta=beta,
        omega=omega,
        k_max=k_max,
        sigma=math.sqrt(tau),
        tau=tau,
        phi_s=phi_s,
        threshold=threshold,
    )


# ---------------------------------------------------------------- constants


def test_parameter_relations():
    gp = gapless_params(0.4, 0.1, 64)
    assert gp.sigma == pytest.approx(math.sqrt(math.log(12 / 0.3) / math.pi))
    assert gp.tau == pytest.approx(gp.sigma**2)
    assert gp.threshold == pytest.approx((6 * 0.4 + 5 * 0.1) / 11 * gp.phi_s)
    # taper tail below the documented cutoff at the truncation edge
    reach = gp.k_max + math.ceil(3 * gp.k_max / gp.sigma)
    assert gauss_taper(gp, reach + 1) < 1e-18
    # the full sum exceeds the truncated [-K, K] window sum
    ks = np.arange(-gp.k_max, gp.k_max + 1)
    assert gp.phi_s >= float(np.sum(gauss_taper(gp, ks)))


def test_phi_s_matches_quad_oracle():
    """Poisson summation: the taper sum is close to its integral K/sigma."""
    gp = gapless_params(0.4, 0.0, 128)
    assert gp.phi_s == pytest.approx(gp.k_max / gp.sigma, rel=1e-6)


# ---------------------------------------------------------------- magnitude


def test_zero_signal_is_zero_everywhere():
    gp = gapless_params(0.5, 0.0, 16)
    sig = MomentSignal(amplification=1.0, k_max=16, values=np.zeros(17, complex))
    xs = np.linspace(0, 1, 11)
    assert np.all(filtered_magnitude(sig, gp, xs) == 0.0)


def test_single_spike_peak_value_is_truncated_taper_sum():
    gp = gapless_params(0.5, 0.0, 24)
    model = SpectrumModel(dominant=((0.5, 1.0),), beta=0.5, omega=0.0)
    sig = noiseless_signal(model, 24)
    ks = np.arange(-24, 25)
    want = float(np.sum(gauss_taper(gp, ks)))
    assert filtered_magnitude(sig, gp, 0.5) == pytest.approx(want, abs=1e-12)


def test_magnitude_matches_high_precision_oracle():
    model = SpectrumModel(dominant=((0.2, 0.5), (0.7, 0.5)), beta=0.4, omega=0.0)
    k_max = 32
    gp = gapless_params(0.4, 0.0, k_max)
    sig = noiseless_signal(model, k_max)
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 50
    x = mp.mpf("0.2")
    total = mp.mpc(0)
    for k in range(-k_max, k_max + 1):
        moment = mp.mpc(0.5) * mp.e ** (-2j * mp.pi * mp.mpf("0.2") * k) + mp.mpc(
            0.5
        ) * mp.e ** (-2j * mp.pi * mp.mpf("0.7") * k)
        taper = mp.e ** (-mp.pi * (k * mp.mpf(repr(gp.sigma)) / k_max) ** 2)
        total += moment * taper * mp.e ** (2j * mp.pi * k * x)
    assert filtered_magnitude(sig, gp, 0.2) == pytest.approx(
        float(abs(total)), abs=1e-12
    )


def test_grid_evaluation_matches_direct():
    rng = np.random.default_rng(0)
    k_max = 50
    vals = rng.normal(size=k_max + 1) * 0.3 + 1j * rng.normal(size=k_max + 1) * 0.3
    sig = MomentSignal(amplification=1.0, k_max=k_max, values=vals)
    gp = gapless_params(0.4, 0.1, k_max)
    n = 4096
    grid = _grid_magnitude(sig, gp, n)
    xs = np.arange(n) / n
    direct = filtered_magnitude(sig, gp, xs)
    assert np.max(np.abs(grid - direct)) < 1e-10


def test_lipschitz_bound_on_finite_differences():
    rng = np.random.default_rng(1)
    k_max = 40
    vals = rng.normal(size=k_max + 1) * 0.4 + 1j * rng.normal(size=k_max + 1) * 0.4
    sig = MomentSignal(amplification=1.0, k_max=k_max, values=vals)
    gp = gapless_params(0.4, 0.1, k_max)
    ks = np.arange(1, k_max + 1)
    lip = 2 * np.pi * 2 * np.sum(np.abs(vals[1:]) * ks * gauss_taper(gp, ks))
    xs = rng.random(200)
    h = 1e-7
    diffs = np.abs(
        filtered_magnitude(sig, gp, xs + h) - filtered_magnitude(sig, gp, xs)
    )
    assert np.max(diffs) <= lip * h * (1 + 1e-6)


# ---------------------------------------------------------------- level set


def test_level_set_single_spike():
    beta, k_max = 0.9, 60
    gp = gapless_params(beta, 0.0, k_max)
    model = SpectrumModel(dominant=((0.3, 1.0),), beta=beta, omega=0.0)
    level = level_set(noiseless_signal(model, k_max), gp)
    assert level.n_components == 1
    assert level.contains_point(0.3)
    band = TorusIntervalSet(((0.3 - gp.tau / k_max, 2 * gp.tau / k_max),))
    assert band.contains(level, tol=1e-12)


def test_level_set_empty_on_zero_signal():
    gp = gapless_params(0.5, 0.0, 16)
    sig = MomentSignal(amplification=1.0, k_max=16, values=np.zeros(17, complex))
    with pytest.raises(EmptyLevelSet):
        level_set(sig, gp)


def test_level_set_guards_resolution_floor():
    gp = gapless_params(0.5, 0.0, 16)
    bad = GaplessParams(
        beta=gp.beta,
        omega=gp.omega,
        k_max=2,
        sigma=gp.sigma,
        tau=gp.tau,
        phi_s=gp.phi_s,
        threshold=gp.threshold,
    )
    sig = MomentSignal(amplification=1.0, k_max=2, values=np.ones(3, complex))
    with pytest.raises(ValueError):
        level_set(sig, bad)


def test_level_set_merges_sub_resolution_pair():
    """Two spikes one frequency bin apart show up as one component near both."""
    beta, k_max = 0.4, 64
    gp = gapless_params(beta, 0.0, k_max)
    pair = (0.3, 0.3 + 1.0 / k_max)
    model = SpectrumModel(
        dominant=((pair[0], 0.5), (pair[1], 0.5)), beta=beta, omega=0.0
    )
    level = level_set(noiseless_signal(model, k_max), gp)
    assert level.n_components == 1
    assert level.contains_point(pair[0]) and level.contains_point(pair[1])
    assert max_distance_to_points(level, list(pair)) <= gp.tau / k_max + 1e-9


def test_level_set_wrapping_spike():
    beta, k_max = 0.9, 60
    gp = gapless_params(beta, 0.0, k_max)
    model = SpectrumModel(dominant=((0.995, 1.0),), beta=beta, omega=0.0)
    level = level_set(noiseless_signal(model, k_max), gp)
    assert level.n_components == 1
    assert level.contains_point(0.995)
    assert level.contains_point(0.001)  # the component crosses the seam


# ---------------------------------------------------------------- windows


def test_windows_bridge_small_gap():
    gp = fake_params(tau_over_k=0.005)
    x = TorusIntervalSet(((0.10, 0.02), (0.121, 0.019)))
    wins = build_windows(x, gp, eta=0.02, max_windows=3).windows
    assert wins.n_components == 1
    lo, length = wins.arcs[0]
    assert lo == pytest.approx(0.10)
    assert lo + length == pytest.approx(0.14)


def test_windows_keep_large_gap():
    gp = fake_params(tau_over_k=0.005)
    x = TorusIntervalSet(((0.1, 0.02), (0.5, 0.02)))
    wins = build_windows(x, gp, eta=0.02, max_windows=3).windows
    assert wins.n_components == 2


def test_windows_wrap_gap():
    gp = fake_params(tau_over_k=0.01)
    x = TorusIntervalSet(((0.0, 0.01), (0.995, 0.004)))
    wins = build_windows(x, gp, eta=0.05, max_windows=2).windows
    assert wins.n_components == 1
    assert wins.contains_point(0.999) and wins.contains_point(0.005)


def test_windows_component_budget():
    gp = fake_params(tau_over_k=0.005)
    x = TorusIntervalSet(((0.1, 0.02), (0.5, 0.02)))
    with pytest.raises(TooManyWindows):
        build_windows(x, gp, eta=0.02, max_windows=1)


def test_windows_require_wide_eta():
    gp = fake_params(tau_over_k=0.01)
    with pytest.raises(ValueError):
        build_windows(TorusIntervalSet(((0.1, 0.02),)), gp, eta=0.02, max_windows=2)


# ------------------------------------------------- randomized guarantees


def test_containment_and_resolution_under_bounded_noise():
    res = audit_level_set(25, seed=123)
    assert res.failures == 0, res.counterexamples


def test_window_properties_under_bounded_noise():
    res = audit_window_construction(25, seed=321)
    assert res.failures == 0, res.counterexamples


def test_inflated_noise_reports_hypothesis_violation():
    res = audit_level_set(8, seed=5, alpha_scale=1.4)
    assert res.failures == 0
    assert res.hypothesis_violations == 8
