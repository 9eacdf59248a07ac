import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from v2xhybrid.channel import (
    ChannelConfigError, ClusterRayParams, TimeVaryingTaps, apply_time_varying_channel,
    array_response, doppler_shift, generate_taps, raised_cosine, realize_channel,
    sample_cluster_rays, taps_to_subcarriers,
)
from v2xhybrid.config import PRESETS

from conftest import crandn


# ---------------------------------------------------------------- array response

def test_array_response_broadside():
    np.testing.assert_allclose(array_response(0.0, 4, 0.5), 0.5 * np.ones(4))


def test_array_response_endfire_two_elements():
    np.testing.assert_allclose(array_response(np.pi / 2, 2, 0.5), [1 / np.sqrt(2), -1 / np.sqrt(2)],
                               atol=1e-15)


def test_array_response_termwise():
    expected = [cmath.exp(1j * 2 * math.pi * 0.5 * m * math.sin(math.pi / 6)) / math.sqrt(32)
                for m in range(32)]
    np.testing.assert_allclose(array_response(np.pi / 6, 32, 0.5), expected, atol=1e-14)
    # sin(pi/6) = 1/2 so the phase step is pi/2
    np.testing.assert_allclose(array_response(np.pi / 6, 32, 0.5),
                               np.exp(1j * np.pi * np.arange(32) / 2) / np.sqrt(32), atol=1e-13)


@given(st.floats(-10, 10), st.integers(1, 256), st.floats(0.05, 4))
def test_array_response_unit_norm(angle, n, d):
    assert abs(np.linalg.norm(array_response(angle, n, d)) - 1) < 1e-12


def test_array_response_rejects_bad_input():
    with pytest.raises(ValueError):
        array_response(0.0, 0)
    with pytest.raises(ValueError):
        array_response(0.0, 4, 0.0)


# ---------------------------------------------------------------- raised cosine

def _rc_oracle(t, beta):
    mpmath.mp.dps = 40
    t = mpmath.mpf(t)
    beta = mpmath.mpf(beta)
    f = lambda x: mpmath.sinc(mpmath.pi * x) * mpmath.cos(mpmath.pi * beta * x) / (1 - (2 * beta * x) ** 2)
    return float(mpmath.limit(f, t))


def test_raised_cosine_peak_and_zeros():
    assert raised_cosine(0.0, 1.0) == pytest.approx(1.0)
    for beta in (0.0, 0.25, 0.5, 1.0):
        for k in (1, 2, 3, -1, -4, 7):
            assert abs(raised_cosine(k, beta)) < 1e-15


def test_raised_cosine_singularity_matches_limit():
    assert raised_cosine(0.5, 1.0) == pytest.approx(_rc_oracle(0.5, 1.0), abs=1e-15)
    assert raised_cosine(-0.5, 1.0) == pytest.approx(0.5, abs=1e-15)
    assert raised_cosine(2.0, 0.25) == pytest.approx(_rc_oracle(2.0, 0.25), abs=1e-15)


@pytest.mark.parametrize("t,beta", [(0.3, 1.0), (1.7, 0.5), (-2.2, 0.35), (0.49999, 1.0)])
def test_raised_cosine_against_oracle(t, beta):
    assert raised_cosine(t, beta) == pytest.approx(_rc_oracle(t, beta), abs=1e-9)


def test_raised_cosine_truncation_tail_small():
    t = np.linspace(4, 40, 2000)
    assert 20 * np.log10(np.max(np.abs(raised_cosine(t, 1.0)))) < -50


# ---------------------------------------------------------------- geometry sampling

def test_sampling_deterministic():
    cfg = PRESETS["mmwave"]
    a = sample_cluster_rays(cfg, np.random.default_rng(7))
    b = sample_cluster_rays(cfg, np.random.default_rng(7))
    for name in ("mean_delay", "aoa", "aod", "doppler", "gains", "ray_delay", "aoa_offset", "aod_offset"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_sampling_mmwave_counts_and_invariants(rng):
    cfg = PRESETS["mmwave"]
    p = sample_cluster_rays(cfg, rng)
    assert (p.n_clusters, p.n_rays) == (4, 10)
    Ts = cfg.sample_period
    total = p.mean_delay[:, None] + p.ray_delay
    assert np.all(p.mean_delay >= 0) and np.all(p.ray_delay >= 0)
    assert np.all(total <= (cfg.n_taps - 1) * Ts + 1e-18)
    bound = 2 * np.pi * cfg.carrier_hz * (cfg.velocity_kmh / 3.6) * Ts / 299_792_458.0
    assert np.all(np.abs(p.doppler) <= bound)


def test_sampling_sub6_counts(rng):
    p = sample_cluster_rays(PRESETS["sub6"], rng)
    assert (p.n_clusters, p.n_rays) == (10, 20)


def test_zero_velocity_zero_doppler(rng):
    p = sample_cluster_rays(PRESETS["mmwave"].with_(velocity_kmh=0.0), rng)
    assert np.all(p.doppler == 0)


def test_sampling_rejects_short_window(rng):
    class Tiny:
        clusters, rays, n_taps, sample_period = 2, 2, 3, 1e-9
        angular_spread_deg, carrier_hz, velocity_kmh = 2.0, 28e9, 20.0

    with pytest.raises(ChannelConfigError):
        sample_cluster_rays(Tiny, rng)


@given(st.floats(0, 300), st.floats(0, 300), st.floats(-np.pi / 2, np.pi / 2))
def test_doppler_monotone_in_velocity(v1, v2, aoa):
    lo, hi = sorted((v1, v2))
    assert abs(doppler_shift(aoa, 28e9, lo, 1e-9)) <= abs(doppler_shift(aoa, 28e9, hi, 1e-9))


# ---------------------------------------------------------------- taps

def _params(gains, delays, aoa, aod, dopp=None, var=1.0):
    C, R = np.shape(gains)
    z = np.zeros(C)
    return ClusterRayParams(
        mean_delay=z, aoa=np.asarray(aoa, float), aod=np.asarray(aod, float),
        doppler=z if dopp is None else np.asarray(dopp, float),
        gains=np.asarray(gains, complex), ray_delay=np.asarray(delays, float),
        aoa_offset=np.zeros((C, R)), aod_offset=np.zeros((C, R)), gain_variance=var,
    )


def test_single_ray_is_scaled_outer_product():
    p = _params([[1.0]], [[0.0]], [0.3], [-0.7])
    H = generate_taps(p, 4, 8, L=3, Ts=1.0)
    expected = np.sqrt(32) * np.outer(array_response(0.3, 4), array_response(-0.7, 8).conj())
    np.testing.assert_allclose(H[0], expected, atol=1e-12)
    assert np.linalg.matrix_rank(H[0]) == 1
    np.testing.assert_allclose(H[1:], 0, atol=1e-12)


def test_opposite_rays_cancel():
    p = _params([[0.8 + 0.1j, -0.8 - 0.1j]], [[0.3, 0.3]], [0.2], [0.4])
    H = generate_taps(p, 2, 4, L=5, Ts=1.0)
    np.testing.assert_allclose(H, 0, atol=1e-12)


def test_taps_match_bruteforce(rng):
    C, R, L, Nr, Nt, Ts, beta = 3, 4, 4, 3, 5, 2e-9, 0.6
    p = ClusterRayParams(
        mean_delay=rng.uniform(0, Ts, C), aoa=rng.uniform(-1.5, 1.5, C), aod=rng.uniform(-1.5, 1.5, C),
        doppler=rng.uniform(-0.1, 0.1, C), gains=crandn(rng, C, R), ray_delay=rng.uniform(0, Ts, (C, R)),
        aoa_offset=rng.laplace(0, 0.03, (C, R)), aod_offset=rng.laplace(0, 0.03, (C, R)),
        gain_variance=1 / (C * R),
    )
    H = generate_taps(p, Nr, Nt, L, Ts, beta)

    def pulse(t):
        if abs(t) > 4:
            return 0.0
        if abs(abs(t) - 1 / (2 * beta)) < 1e-12:
            return math.pi / 4 * math.sin(math.pi / (2 * beta)) / (math.pi / (2 * beta))
        s = 1.0 if t == 0 else math.sin(math.pi * t) / (math.pi * t)
        return s * math.cos(math.pi * beta * t) / (1 - (2 * beta * t) ** 2)

    def resp(angle, n):
        return np.array([cmath.exp(1j * math.pi * m * math.sin(angle)) for m in range(n)]) / math.sqrt(n)

    raw = np.zeros((L, Nr, Nt), complex)
    energy = 0.0
    for ell in range(L):
        for c in range(C):
            for r in range(R):
                t = ell - (p.mean_delay[c] + p.ray_delay[c, r]) / Ts
                w = pulse(t)
                energy += p.gain_variance * w ** 2
                raw[ell] += (p.gains[c, r] * w * np.outer(resp(p.aoa[c] + p.aoa_offset[c, r], Nr),
                                                          resp(p.aod[c] + p.aod_offset[c, r], Nt).conj())
                             * cmath.exp(1j * p.doppler[c] * ell))
    expected = math.sqrt(Nr * Nt / energy) * raw
    np.testing.assert_allclose(H, expected, atol=1e-12)


def test_channel_energy_normalization():
    cfg = PRESETS["mmwave"]
    rng = np.random.default_rng(99)
    n = 10_000
    acc = 0.0
    for _ in range(n):
        real = realize_channel(cfg, cfg.n_ue, cfg.n_bs, rng)
        acc += np.mean(np.sum(np.abs(real.subcarriers) ** 2, axis=(1, 2)))
    ratio = acc / n / (cfg.n_ue * cfg.n_bs)
    assert 0.95 <= ratio <= 1.05


def test_realization_is_bitwise_deterministic():
    cfg = PRESETS["sub6"]
    a = realize_channel(cfg, 2, 16, np.random.default_rng(3))
    b = realize_channel(cfg, 2, 16, np.random.default_rng(3))
    assert np.array_equal(a.taps, b.taps) and np.array_equal(a.subcarriers, b.subcarriers)


def test_realization_subcarriers_are_dft_of_taps(rng):
    cfg = PRESETS["sub6"]
    real = realize_channel(cfg, 2, 16, rng)
    K = cfg.n_subcarriers
    naive = np.array([sum(real.taps[l] * np.exp(-2j * np.pi * k * l / K) for l in range(real.taps.shape[0]))
                      for k in range(K)])
    err = np.linalg.norm(real.subcarriers - naive) / np.linalg.norm(naive)
    assert err < 1e-10


# ---------------------------------------------------------------- subcarriers

def test_single_tap_is_flat(rng):
    taps = crandn(rng, 1, 3, 4)
    H = taps_to_subcarriers(taps, 16)
    for k in range(16):
        np.testing.assert_allclose(H[k], taps[0])


def test_dc_subcarrier_is_tap_sum(rng):
    taps = crandn(rng, 5, 2, 3)
    np.testing.assert_allclose(taps_to_subcarriers(taps, 16)[0], taps.sum(axis=0), atol=1e-12)


def test_subcarriers_match_naive_dft(rng):
    taps = crandn(rng, 6, 2, 3)
    K = 16
    H = taps_to_subcarriers(taps, K)
    for k in range(K):
        naive = np.zeros((2, 3), complex)
        for ell in range(6):
            naive += taps[ell] * cmath.exp(-2j * math.pi * k * ell / K)
        np.testing.assert_allclose(H[k], naive, atol=1e-12)


def test_too_many_taps_rejected(rng):
    with pytest.raises(ValueError):
        taps_to_subcarriers(crandn(rng, 9, 1, 1), 8)


@settings(max_examples=25)
@given(st.integers(1, 32), st.integers(0, 2 ** 31))
def test_round_trip_when_taps_fill_the_band(K, seed):
    taps = crandn(np.random.default_rng(seed), K, 2, 2)
    H = taps_to_subcarriers(taps, K)
    back = np.array([sum(H[k] * np.exp(2j * np.pi * k * l / K) for k in range(K)) / K for l in range(K)])
    assert np.linalg.norm(back - taps) <= 1e-10 * np.linalg.norm(taps)


# ---------------------------------------------------------------- time-varying application

def test_zero_input_gives_noise_of_requested_variance(rng):
    tv = TimeVaryingTaps(crandn(rng, 2, 3, 1, 1), np.array([0.01, -0.02]))
    y = apply_time_varying_channel(tv, np.zeros((1, 1_000_000)), 0.7, rng)
    assert np.mean(np.abs(y) ** 2) == pytest.approx(0.49, rel=0.01)


def test_static_noiseless_is_linear_convolution(rng):
    Nr, Nt, L, T = 2, 3, 4, 50
    cl = crandn(rng, 2, L, Nr, Nt)
    tv = TimeVaryingTaps(cl, np.zeros(2))
    x = crandn(rng, Nt, T)
    y = apply_time_varying_channel(tv, x, 0.0)
    taps = cl.sum(axis=0)
    expected = np.zeros((Nr, T), complex)
    for i in range(Nr):
        for j in range(Nt):
            expected[i] += np.convolve(taps[:, i, j], x[j])[:T]
    np.testing.assert_allclose(y, expected, atol=1e-12)


def test_identity_tap_passes_input(rng):
    tv = TimeVaryingTaps(np.eye(3)[None, None].astype(complex), np.zeros(1))
    x = crandn(rng, 3, 20)
    np.testing.assert_allclose(apply_time_varying_channel(tv, x, 0.0), x)


def test_doppler_rotates_per_sample(rng):
    w = 0.05
    tv = TimeVaryingTaps(np.ones((1, 1, 1, 1), complex), np.array([w]))
    x = np.ones((1, 10))
    y = apply_time_varying_channel(tv, x, 0.0, start=3)
    np.testing.assert_allclose(y[0], np.exp(1j * w * (3 + np.arange(10))))
    np.testing.assert_allclose(tv.at(4)[0], np.exp(1j * w * 4) * np.ones((1, 1)))
