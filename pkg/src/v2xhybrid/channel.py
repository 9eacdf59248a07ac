"""Doubly-selective geometric cluster/ray MIMO channel.

Each realization is a set of clusters, each holding a number of rays with
their own complex gain, delay and angular offsets. Delay taps are built by
sampling a raised-cosine pulse at the tap instants, and a per-cluster
Doppler rotation makes the channel time-selective.

Two Doppler conventions coexist:

* frequency-domain rate evaluation attaches ``exp(j*omega_c*l)`` to the
  delay-tap index ``l`` (block fading per OFDM symbol);
* the sample-level simulator advances the phase with the absolute sample
  index ``n`` (``exp(j*omega_c*n)``), which is what rotates the constellation
  when the resulting frequency offset is left uncorrected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

#: Two-sided raised-cosine truncation, in samples.
PULSE_HALF_WIDTH = 4


class ChannelConfigError(ValueError):
    """Raised when a scenario cannot be realized by the channel model."""


def array_response(angle, n_antennas: int, spacing_ratio: float = 0.5) -> np.ndarray:
    """Uniform linear array response, unit norm.

    Parameters
    ----------
    angle : float or array_like
        Angle(s) in radians. An array of angles returns one response per
        row.
    n_antennas : int
        Number of array elements.
    spacing_ratio : float
        Element spacing divided by the wavelength.
    """
    if n_antennas < 1:
        raise ValueError("n_antennas must be >= 1")
    if spacing_ratio <= 0:
        raise ValueError("spacing_ratio must be positive")
    angle = np.asarray(angle, dtype=float)
    m = np.arange(n_antennas)
    phase = 2 * np.pi * spacing_ratio * np.multiply.outer(np.sin(angle), m)
    return np.exp(1j * phase) / np.sqrt(n_antennas)


def raised_cosine(t_norm, rolloff: float):
    """Raised-cosine impulse response at ``t_norm = t / T_s``.

    The removable singularities at ``|t_norm| = 1 / (2 * rolloff)`` are
    replaced by their limit ``(pi/4) * sinc(1 / (2 * rolloff))``.
    """
    if not 0.0 <= rolloff <= 1.0:
        raise ValueError("rolloff must lie in [0, 1]")
    t = np.asarray(t_norm, dtype=float)
    main = np.sinc(t)
    if rolloff == 0.0:
        return main if main.ndim else float(main)
    denom = 1.0 - (2.0 * rolloff * t) ** 2
    singular = np.isclose(np.abs(t), 1.0 / (2.0 * rolloff), rtol=0.0, atol=1e-12)
    safe = np.where(singular, 1.0, denom)
    out = np.where(
        singular,
        (np.pi / 4.0) * np.sinc(1.0 / (2.0 * rolloff)),
        main * np.cos(np.pi * rolloff * t) / safe,
    )
    return out if out.ndim else float(out)


def doppler_shift(aoa, carrier_hz: float, velocity_mps: float, sample_period: float):
    """Normalized Doppler shift in radians per sample."""
    return (
        2 * np.pi * carrier_hz * velocity_mps * sample_period
        * np.sin(np.asarray(aoa, dtype=float)) / SPEED_OF_LIGHT
    )


@dataclass
class ClusterRayParams:
    """Geometry of one channel realization.

    Cluster-level arrays have shape ``(C,)``; ray-level arrays ``(C, R)``.
    Delays are in seconds, angles in radians, ``doppler`` in rad/sample.
    """

    mean_delay: np.ndarray
    aoa: np.ndarray
    aod: np.ndarray
    doppler: np.ndarray
    gains: np.ndarray
    ray_delay: np.ndarray
    aoa_offset: np.ndarray
    aod_offset: np.ndarray
    gain_variance: float

    @property
    def n_clusters(self) -> int:
        return self.gains.shape[0]

    @property
    def n_rays(self) -> int:
        return self.gains.shape[1]

    def with_velocity(self, velocity_kmh: float, carrier_hz: float,
                      sample_period: float) -> "ClusterRayParams":
        """Same geometry with the Doppler shifts recomputed for a new speed."""
        return ClusterRayParams(
            mean_delay=self.mean_delay, aoa=self.aoa, aod=self.aod,
            doppler=doppler_shift(self.aoa, carrier_hz, velocity_kmh / 3.6,
                                  sample_period),
            gains=self.gains, ray_delay=self.ray_delay,
            aoa_offset=self.aoa_offset, aod_offset=self.aod_offset,
            gain_variance=self.gain_variance,
        )


@dataclass
class ChannelRealization:
    """Delay taps ``(L, N_RX, N_TX)``, subcarriers ``(K, N_RX, N_TX)`` and
    the per-cluster, Doppler-free taps ``(C, L, N_RX, N_TX)`` used by the
    sample-level simulator."""

    taps: np.ndarray
    subcarriers: np.ndarray
    params: ClusterRayParams
    cluster_taps: np.ndarray

    def time_varying(self) -> "TimeVaryingTaps":
        return TimeVaryingTaps(self.cluster_taps, self.params.doppler)


@dataclass
class TimeVaryingTaps:
    """Taps whose cluster ``c`` rotates by ``exp(j*doppler[c]*n)`` at sample ``n``."""

    cluster_taps: np.ndarray
    doppler: np.ndarray

    @property
    def n_taps(self) -> int:
        return self.cluster_taps.shape[1]

    def at(self, n: int) -> np.ndarray:
        """Tap matrices ``(L, N_RX, N_TX)`` seen at sample index ``n``."""
        phase = np.exp(1j * self.doppler * n)
        return np.einsum("c,clij->lij", phase, self.cluster_taps)


def sample_cluster_rays(scenario, rng: np.random.Generator) -> ClusterRayParams:
    """Draw cluster/ray geometry for one realization.

    ``scenario`` needs ``clusters``, ``rays``, ``angular_spread_deg``,
    ``n_taps``, ``sample_period``, ``carrier_hz`` and ``velocity_kmh``.
    """
    C, R, L = scenario.clusters, scenario.rays, scenario.n_taps
    Ts = scenario.sample_period
    if C < 1 or R < 1:
        raise ChannelConfigError("need at least one cluster and one ray")
    window = L - 1 - PULSE_HALF_WIDTH
    if window < 0:
        raise ChannelConfigError(
            f"n_taps={L} cannot hold clusters: need n_taps >= {PULSE_HALF_WIDTH + 1}"
        )
    mean_delay = rng.uniform(0.0, window * Ts, size=C)
    aoa = rng.uniform(-np.pi / 2, np.pi / 2, size=C)
    aod = rng.uniform(-np.pi / 2, np.pi / 2, size=C)
    var = 1.0 / (C * R)
    gains = np.sqrt(var / 2) * (rng.standard_normal((C, R)) + 1j * rng.standard_normal((C, R)))
    ray_delay = rng.uniform(0.0, Ts, size=(C, R))
    # Laplacian scale b gives standard deviation b*sqrt(2)
    b = np.deg2rad(scenario.angular_spread_deg) / np.sqrt(2)
    aoa_offset = rng.laplace(0.0, b, size=(C, R))
    aod_offset = rng.laplace(0.0, b, size=(C, R))
    doppler = doppler_shift(aoa, scenario.carrier_hz, scenario.velocity_kmh / 3.6, Ts)
    return ClusterRayParams(mean_delay, aoa, aod, doppler, gains, ray_delay,
                            aoa_offset, aod_offset, var)


def _pulse_matrix(params: ClusterRayParams, L: int, Ts: float, rolloff: float) -> np.ndarray:
    """Pulse weights ``p(l*Ts - tau_c - tau_rc)`` with shape ``(C, R, L)``."""
    delay = (params.mean_delay[:, None] + params.ray_delay) / Ts
    t = np.arange(L)[None, None, :] - delay[..., None]
    p = raised_cosine(t, rolloff)
    return np.where(np.abs(t) <= PULSE_HALF_WIDTH, p, 0.0)


def pathloss_normalizer(params: ClusterRayParams, L: int, Ts: float, rolloff: float) -> float:
    """The ``gamma`` that makes the gain-averaged tap energy equal N_RX*N_TX."""
    p = _pulse_matrix(params, L, Ts, rolloff)
    return float(params.gain_variance * np.sum(p ** 2))


def cluster_taps(params: ClusterRayParams, n_rx: int, n_tx: int, L: int, Ts: float,
                 rolloff: float = 1.0, spacing_ratio: float = 0.5) -> np.ndarray:
    """Per-cluster delay taps without the Doppler factor, ``(C, L, N_RX, N_TX)``."""
    p = _pulse_matrix(params, L, Ts, rolloff)
    gamma = float(params.gain_variance * np.sum(p ** 2))
    a_rx = array_response(params.aoa[:, None] + params.aoa_offset, n_rx, spacing_ratio)
    a_tx = array_response(params.aod[:, None] + params.aod_offset, n_tx, spacing_ratio)
    weights = params.gains[..., None] * p  # (C, R, L)
    taps = np.einsum("crl,cri,crj->clij", weights, a_rx, a_tx.conj())
    return np.sqrt(n_rx * n_tx / gamma) * taps


def generate_taps(params: ClusterRayParams, n_rx: int, n_tx: int, L: int, Ts: float,
                  rolloff: float = 1.0, spacing_ratio: float = 0.5) -> np.ndarray:
    """Delay taps ``H[l]`` with the Doppler factor indexed by tap, ``(L, N_RX, N_TX)``."""
    per_cluster = cluster_taps(params, n_rx, n_tx, L, Ts, rolloff, spacing_ratio)
    rot = np.exp(1j * np.outer(params.doppler, np.arange(L)))  # (C, L)
    return np.einsum("cl,clij->lij", rot, per_cluster)


def taps_to_subcarriers(taps: np.ndarray, K: int) -> np.ndarray:
    """``H[k] = sum_l H[l] exp(-j 2 pi k l / K)`` for ``k = 0..K-1``."""
    taps = np.asarray(taps)
    L = taps.shape[0]
    if L < 1:
        raise ValueError("need at least one tap")
    if L > K:
        raise ValueError(f"{L} taps exceed {K} subcarriers; cyclic prefix assumption violated")
    return np.fft.fft(taps, n=K, axis=0)


def realize_channel(scenario, n_rx: int, n_tx: int, rng: np.random.Generator,
                    params: ClusterRayParams | None = None) -> ChannelRealization:
    """Sample (or reuse) geometry and build taps and subcarrier responses."""
    if params is None:
        params = sample_cluster_rays(scenario, rng)
    L, Ts = scenario.n_taps, scenario.sample_period
    per_cluster = cluster_taps(params, n_rx, n_tx, L, Ts, scenario.rolloff,
                               scenario.spacing_ratio)
    rot = np.exp(1j * np.outer(params.doppler, np.arange(L)))
    taps = np.einsum("cl,clij->lij", rot, per_cluster)
    return ChannelRealization(taps, taps_to_subcarriers(taps, scenario.n_subcarriers),
                              params, per_cluster)


def apply_time_varying_channel(channel: TimeVaryingTaps, tx_samples: np.ndarray,
                               noise_std: float, rng: np.random.Generator | None = None,
                               start: int = 0) -> np.ndarray:
    """Pass a transmit stream through sample-evolving taps and add noise.

    Parameters
    ----------
    channel : TimeVaryingTaps
        Cluster taps and their Doppler shifts.
    tx_samples : ndarray, shape (N_TX, T)
        Transmit samples per antenna.
    noise_std : float
        Standard deviation of the circularly-symmetric complex noise.
    start : int
        Absolute sample index of ``tx_samples[:, 0]``.

    Returns
    -------
    ndarray, shape (N_RX, T)
        The first ``T`` samples of the linear convolution plus noise.
    """
    x = np.atleast_2d(np.asarray(tx_samples, dtype=complex))
    L = channel.n_taps
    T = x.shape[1]
    if T < L:
        raise ValueError("transmit stream shorter than the channel")
    C, _, n_rx, _ = channel.cluster_taps.shape
    y = np.zeros((C, n_rx, T), dtype=complex)
    for ell in range(L):
        y[:, :, ell:] += np.einsum("cij,jt->cit", channel.cluster_taps[:, ell], x[:, :T - ell])
    phase = np.exp(1j * np.outer(channel.doppler, start + np.arange(T)))
    out = np.einsum("ct,cit->it", phase, y)
    if noise_std > 0:
        if rng is None:
            raise ValueError("noise requires a random generator")
        out += noise_std / np.sqrt(2) * (rng.standard_normal(out.shape)
                                         + 1j * rng.standard_normal(out.shape))
    return out
