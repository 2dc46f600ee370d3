"""Spectrum models, exact moments, and the sampled measurement channel."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rmpe.measurement import (
    MomentSignal,
    SpectrumModel,
    exact_moment,
    exact_moments,
    generator,
    hoeffding_repetitions,
    random_model,
    sample_signal,
    substream,
)


def single_spike(phase=0.25):
    return SpectrumModel(dominant=((phase, 1.0),), beta=1.0, omega=0.0)


THREE_SPIKES = SpectrumModel(
    dominant=((0.12, 0.4), (0.47, 0.3), (0.81, 0.2)),
    residual=((0.62, 0.1),),
    beta=0.2,
    omega=0.1,
)


# ---------------------------------------------------------------- model


def test_model_validation():
    with pytest.raises(ValueError):
        SpectrumModel(dominant=((0.2, 0.5),), beta=0.4, omega=0.0)  # mass != 1
    with pytest.raises(ValueError):
        SpectrumModel(dominant=((0.2, 1.0),), beta=0.5, omega=0.6)  # omega >= beta
    with pytest.raises(ValueError):
        SpectrumModel(dominant=((0.2, 0.1), (0.6, 0.9)), beta=0.3, omega=0.0)
    with pytest.raises(ValueError):  # declared gap violated
        SpectrumModel(
            dominant=((0.2, 0.5), (0.21, 0.5)), beta=0.4, omega=0.0, delta=0.1
        )


def test_model_round_trip_and_folding():
    m = THREE_SPIKES
    assert SpectrumModel.from_dict(m.to_dict()) == m
    assert m.folded_phases(2.0) == tuple((2 * p) % 1.0 for p, _ in m.dominant)
    assert m.wrap_gap() == pytest.approx(
        min(0.47 - 0.12, 0.81 - 0.47, 1 - 0.81 + 0.12)
    )


def test_rescaled_model_keeps_bounds():
    m = THREE_SPIKES.rescaled(0.9)
    assert m.phases == tuple(0.9 * p for p, _ in THREE_SPIKES.dominant)
    assert m.beta == THREE_SPIKES.beta
    # the scaled declared gap stays valid
    assert m.wrap_gap() >= m.delta


# ---------------------------------------------------------------- moments


def test_exact_moment_quarter_phase():
    assert exact_moment(single_spike(0.25), 1.0) == pytest.approx(-1j, abs=1e-12)


def test_exact_moment_cancellation():
    m = SpectrumModel(dominant=((0.0, 0.5), (0.5, 0.5)), beta=0.5, omega=0.0)
    assert exact_moment(m, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_exact_moment_against_high_precision_oracle():
    m = SpectrumModel(dominant=((0.3, 0.7), (0.8, 0.3)), beta=0.3, omega=0.0)
    got = exact_moment(m, 2.5)
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 40
    want = mp.mpc(0.7) * mp.e ** (-2j * mp.pi * mp.mpf("0.75")) + mp.mpc(
        0.3
    ) * mp.e ** (-2j * mp.pi * mp.mpf("2.0"))
    assert got.real == pytest.approx(float(want.real), abs=1e-12)
    assert got.imag == pytest.approx(float(want.imag), abs=1e-12)
    assert got == pytest.approx(0.3 + 0.7j, abs=1e-12)


def test_moment_at_zero_is_one():
    for model in (single_spike(0.7), THREE_SPIKES):
        assert exact_moment(model, 0.0) == pytest.approx(1.0)


def test_phase_sign_flag_mirrors_spectrum():
    m = THREE_SPIKES
    ts = np.arange(7, dtype=float)
    plus = exact_moments(m, ts, phase_sign=1)
    minus = exact_moments(m, ts, phase_sign=-1)
    assert np.allclose(plus, np.conj(minus))


# ---------------------------------------------------------------- sampling


def test_sample_signal_real_channel_deterministic_at_phase_zero():
    m = single_spike(0.0)
    sig = sample_signal(m, 1.0, 3, 100, 1)
    # the real channel has success probability 1, hence mean exactly 1;
    # the imaginary channel is a fair coin and only concentrates near 0
    assert np.all(sig.values.real == 1.0)
    assert np.all(np.abs(sig.values.imag) <= 1.0)


def test_sample_signal_concentrates_at_minus_i():
    m = single_spike(0.25)
    sig = sample_signal(m, 1.0, 1, 10**6, 3)
    assert sig.at(1) == pytest.approx(-1j, abs=5e-3)


def test_sample_signal_matches_exact_moment_for_many_shots():
    sig = sample_signal(THREE_SPIKES, 1.0, 5, 10**6, 9)
    exact = exact_moments(THREE_SPIKES, np.arange(6, dtype=float))
    assert np.max(np.abs(sig.values - exact)) < 5e-3


def test_sample_signal_determinism_and_substreams():
    a = sample_signal(THREE_SPIKES, 2.0, 4, 1000, 42)
    b = sample_signal(THREE_SPIKES, 2.0, 4, 1000, 42)
    c = sample_signal(THREE_SPIKES, 2.0, 4, 1000, 43)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    # substream keys compose
    assert substream(42, 1, 2).spawn_key == (1, 2)
    assert substream(substream(42, 1), 2).spawn_key == (1, 2)


def test_sampling_modes_agree_in_distribution():
    fast = [
        sample_signal(THREE_SPIKES, 1.0, 2, 400, seed).values
        for seed in range(60)
    ]
    slow = [
        sample_signal(THREE_SPIKES, 1.0, 2, 400, seed, sampling="bernoulli").values
        for seed in range(60)
    ]
    exact = exact_moments(THREE_SPIKES, np.arange(3, dtype=float))
    for batch in (fast, slow):
        mean = np.mean(batch, axis=0)
        assert np.max(np.abs(mean - exact)) < 0.05


def test_unbiasedness():
    reps = [sample_signal(THREE_SPIKES, 3.0, 3, 200, s).values for s in range(200)]
    exact = exact_moments(THREE_SPIKES, 3.0 * np.arange(4, dtype=float))
    assert np.max(np.abs(np.mean(reps, axis=0) - exact)) < 0.02


def test_sample_signal_rejects_odd_counts():
    with pytest.raises(ValueError):
        sample_signal(single_spike(), 1.0, 2, 7, 0)


def test_integer_power_guard():
    with pytest.raises(ValueError):
        sample_signal(single_spike(), 1.5, 2, 10, 0, integer_powers=True)
    sample_signal(single_spike(), 3.0, 2, 10, 0, integer_powers=True)


def test_conjugate_extension():
    sig = sample_signal(THREE_SPIKES, 1.0, 3, 100, 5)
    assert sig.at(-2) == np.conj(sig.at(2))
    with pytest.raises(IndexError):
        sig.at(4)


# ---------------------------------------------------------------- repetitions


def test_hoeffding_worked_example():
    # direct arithmetic: 2*ceil(400*(log 40 + log 8 + log 10)) = 6458
    assert hoeffding_repetitions(0.1, 0.1, 9, 8) == 6458


def test_hoeffding_monotone_in_alpha():
    values = [hoeffding_repetitions(a, 0.1, 9, 8) for a in (0.05, 0.1, 0.2, 0.5)]
    assert values == sorted(values, reverse=True)


def test_hoeffding_log_additivity_in_k():
    base = hoeffding_repetitions(0.1, 0.1, 9, 8)
    doubled = hoeffding_repetitions(0.1, 0.1, 19, 8)
    assert doubled - base <= 2 * math.ceil((4 / 0.01) * math.log(2)) + 2


def test_hoeffding_coverage():
    """With the prescribed count, deviations above alpha are rarer than rho."""
    alpha, rho, k_max, steps = 0.3, 0.2, 4, 3
    n = hoeffding_repetitions(alpha, rho, k_max, steps)
    exact = exact_moments(THREE_SPIKES, np.arange(k_max + 1, dtype=float))
    exceed = 0
    trials = 200
    for seed in range(trials):
        sig = sample_signal(THREE_SPIKES, 1.0, k_max, n, seed)
        if np.max(np.abs(sig.values - exact)) >= alpha:
            exceed += 1
    assert exceed / trials <= rho


# ---------------------------------------------------------------- generator


@given(st.integers(1, 3), st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_random_model_honors_bounds(s, seed):
    rng = generator(seed)
    beta, omega = 0.3, 0.1
    m = random_model(s, beta, omega, 0.05, rng, residual_mode="uniform")
    assert m.n_dominant == s
    assert min(w for _, w in m.dominant) >= beta - 1e-9
    assert m.residual_mass == pytest.approx(omega)
    assert m.wrap_gap() >= 0.05 - 1e-12


def test_random_model_modes():
    rng = generator(7)
    none = random_model(2, 0.3, 0.1, 0.0, rng, residual_mode="none")
    assert none.residual == ()
    clustered = random_model(
        2, 0.3, 0.1, 0.0, rng, residual_mode="clustered", cluster_scale=1e-3
    )
    assert clustered.residual_mass == pytest.approx(0.1)
    # clustered residuals hug a dominant spike
    for p, _ in clustered.residual:
        assert min(abs(p - q) % 1.0 for q, _ in clustered.dominant) < 0.02


def test_random_model_tight_mass():
    # S*beta + omega == 1 forces every dominant weight to equal beta
    rng = generator(11)
    m = random_model(3, 0.3, 0.1, 0.0, rng)
    assert all(w == pytest.approx(0.3) for _, w in m.dominant)


def test_random_model_infeasible():
    with pytest.raises(ValueError):
        random_model(3, 0.4, 0.1, 0.0, generator(0))
