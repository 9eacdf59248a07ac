"""Spectral efficiency, SINR, outage, noise and energy-efficiency models."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .precoding import PrecodingSolution, effective_channels


# ---------------------------------------------------------------- rate / SINR

def _link_gains(channels: np.ndarray, solution: PrecodingSolution) -> np.ndarray:
    """``|w_u^H H_u[k] F_RF f_n[k]|^2`` with shape ``(U, K, U)`` (user, k, stream)."""
    heff = effective_channels(channels, solution.combiners, solution.analog)
    return np.abs(np.einsum("ukm,kmn->ukn", heff, solution.digital)) ** 2


def _sinr_terms(channels, solution, snr):
    g = _link_gains(channels, solution)
    U, K, _ = g.shape
    rho = snr / (K * U)
    signal = rho * np.einsum("uku->uk", g)
    interference = rho * g.sum(axis=-1) - signal
    return signal / (interference + 1.0)


def user_rates(channels: np.ndarray, solution: PrecodingSolution, snr: float) -> np.ndarray:
    """Per-user spectral efficiency in bits/s/Hz, evaluated on the true channels."""
    sinr = _sinr_terms(channels, solution, snr)
    return np.log2(1.0 + sinr).mean(axis=1)


def user_sinrs(channels: np.ndarray, solution: PrecodingSolution, snr: float) -> np.ndarray:
    """Subcarrier-averaged per-user SINR (linear)."""
    return _sinr_terms(channels, solution, snr).mean(axis=1)


def per_user_rate(channels: np.ndarray, solution: PrecodingSolution, snr: float, user: int) -> float:
    return float(user_rates(channels, solution, snr)[user])


def per_user_sinr(channels: np.ndarray, solution: PrecodingSolution, snr: float, user: int) -> float:
    return float(user_sinrs(channels, solution, snr)[user])


def sum_rate(channels: np.ndarray, solution: PrecodingSolution, snr: float) -> float:
    return float(user_rates(channels, solution, snr).sum())


# ---------------------------------------------------------------- outage

def outage_probability(rate_samples, target: float) -> float:
    """Fraction of samples strictly below ``target``."""
    x = np.asarray(rate_samples, dtype=float)
    if x.size == 0:
        raise ValueError("outage probability needs at least one sample")
    return float(np.count_nonzero(x < target) / x.size)


def epsilon_rate(rate_samples, epsilon: float) -> float:
    """Largest rate whose empirical outage probability does not exceed ``epsilon``.

    With sorted samples ``x`` this is ``x[floor(epsilon * n)]`` (clipped to the
    maximum), since exactly the samples before it lie strictly below.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    x = np.sort(np.asarray(rate_samples, dtype=float))
    if x.size == 0:
        raise ValueError("epsilon rate needs at least one sample")
    j = min(int(math.floor(epsilon * x.size + 1e-12)), x.size - 1)
    return float(x[j])


# ---------------------------------------------------------------- noise

def noise_variance_dbm(bandwidth_hz: float) -> float:
    """Thermal noise power ``-173.8 + 10 log10(BW)`` in dBm."""
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth must be positive")
    return -173.8 + 10.0 * math.log10(bandwidth_hz)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


# ---------------------------------------------------------------- power models

#: Device power consumption in watts.
DEVICE_POWERS = {
    "lna": 39e-3,
    "splitter": 19.5e-3,
    "combiner": 19.5e-3,
    "phase_shifter": 2e-3,
    "mixer": 16.8e-3,
    "local_oscillator": 5e-3,
    "lowpass_filter": 14e-3,
    "baseband_amp": 5e-3,
}

#: Per-mode settings: carrier, bandwidth, ADC power (W), BS antennas.
MODES = {
    "mode1": dict(carrier_hz=28e9, bandwidth_hz=850e6, adc_power_w=0.250, n_bs=32),
    "mode2": dict(carrier_hz=39e9, bandwidth_hz=1.4e9, adc_power_w=0.400, n_bs=64),
    "mode3": dict(carrier_hz=39e9, bandwidth_hz=1.6e9, adc_power_w=0.450, n_bs=64),
    "mode4": dict(carrier_hz=73e9, bandwidth_hz=2e9, adc_power_w=0.550, n_bs=128),
}


@dataclass(frozen=True)
class PowerModel:
    """Receiver power consumption model.

    ``architecture`` is ``"analog"``, ``"full-digital"`` or ``"hybrid"``;
    ``connection`` (``"fully"`` / ``"partially"``) only matters for hybrid.
    """

    architecture: str
    n_rx: int
    adc: float
    n_rf: int = 1
    connection: str = "fully"
    lna: float = DEVICE_POWERS["lna"]
    splitter: float = DEVICE_POWERS["splitter"]
    combiner: float = DEVICE_POWERS["combiner"]
    phase_shifter: float = DEVICE_POWERS["phase_shifter"]
    mixer: float = DEVICE_POWERS["mixer"]
    local_oscillator: float = DEVICE_POWERS["local_oscillator"]
    lowpass_filter: float = DEVICE_POWERS["lowpass_filter"]
    baseband_amp: float = DEVICE_POWERS["baseband_amp"]

    def __post_init__(self):
        if self.architecture not in ("analog", "full-digital", "hybrid"):
            raise ValueError(f"unknown architecture {self.architecture!r}")
        if self.connection not in ("fully", "partially"):
            raise ValueError(f"unknown connection {self.connection!r}")
        powers = (self.adc, self.lna, self.splitter, self.combiner, self.phase_shifter,
                  self.mixer, self.local_oscillator, self.lowpass_filter, self.baseband_amp)
        if any(p < 0 for p in powers):
            raise ValueError("device powers must be nonnegative")
        if self.n_rx < 1 or self.n_rf < 1:
            raise ValueError("antenna and RF chain counts must be positive")

    @property
    def rf_chain(self) -> float:
        return self.mixer + self.local_oscillator + self.lowpass_filter + self.baseband_amp

    @property
    def n_phase_shifters(self) -> int:
        return self.n_rx * self.n_rf if self.connection == "fully" else self.n_rx

    def zeroed(self) -> "PowerModel":
        return replace(self, adc=0.0, lna=0.0, splitter=0.0, combiner=0.0, phase_shifter=0.0,
                       mixer=0.0, local_oscillator=0.0, lowpass_filter=0.0, baseband_amp=0.0)


def power_total(model: PowerModel) -> float:
    """Total consumption in watts for the model's architecture."""
    m = model
    if m.architecture == "analog":
        return m.n_rx * (m.lna + m.phase_shifter) + m.rf_chain + m.combiner + 2 * m.adc
    if m.architecture == "full-digital":
        return m.n_rx * (m.lna + m.rf_chain + 2 * m.adc)
    return (m.n_rx * (m.lna + m.splitter) + m.n_phase_shifters * m.phase_shifter
            + m.n_rf * (m.rf_chain + m.combiner + 2 * m.adc))


def energy_efficiency(rate: float, model: PowerModel) -> float:
    """Spectral efficiency per watt (bits/s/Hz/W)."""
    p = power_total(model)
    if p <= 0:
        raise ValueError("total power must be positive")
    return rate / p


def mode_power_model(mode: str, n_rf: int, connection: str = "fully") -> PowerModel:
    """BS-side hybrid power model for one of the mmWave operating modes."""
    spec = MODES[mode]
    return PowerModel("hybrid", n_rx=spec["n_bs"], adc=spec["adc_power_w"], n_rf=n_rf,
                      connection=connection)
