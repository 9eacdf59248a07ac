"""Sample-level MIMO-OFDM bit error simulation over time-varying channels.

One frame carries one codeword per user. Coded bits are Gray-mapped to
QPSK and assigned round-robin to subcarriers (symbol ``i`` goes to
subcarrier ``i % K`` of OFDM symbol ``i // K``); the last OFDM symbol is
padded with random QPSK. The receiver equalizes with the channel seen at
the first sample of the frame and does no frequency-offset correction, so
Doppler accumulated over the frame rotates the constellation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..channel import ChannelRealization, TimeVaryingTaps, apply_time_varying_channel, doppler_shift
from ..precoding import PrecodingSolution
from .ldpc import LDPCCode
from .modem import ofdm_demodulate, ofdm_modulate, qpsk_hard, qpsk_llr, qpsk_map

UNCODED_FRAME_BITS = 1296


@dataclass
class BerResult:
    errors: np.ndarray
    bits: np.ndarray

    @property
    def ber(self) -> float:
        return float(self.errors.sum() / self.bits.sum())


def reference_subcarriers(realization: ChannelRealization, K: int) -> np.ndarray:
    """Subcarrier response of the taps seen at sample 0 (no Doppler rotation)."""
    return np.fft.fft(realization.cluster_taps.sum(axis=0), n=K, axis=0)


def ber_trial(scenario, realizations, solution: PrecodingSolution, snr: float,
              velocity_kmh: float, rng: np.random.Generator, code: LDPCCode | None = None,
              coded: bool = True, noiseless: bool = False, max_iters: int = 25) -> BerResult:
    """Send one frame to every user and count bit errors.

    Parameters
    ----------
    scenario
        Provides ``n_subcarriers``, ``cp_len``, ``carrier_hz`` and
        ``sample_period``.
    realizations : sequence of ChannelRealization
        One per user; only the geometry and Doppler-free cluster taps are
        used, the Doppler shifts are recomputed for ``velocity_kmh``.
    solution : PrecodingSolution
        Hybrid precoder and combiners, designed on the sample-0 channel.
    snr : float
        Linear SNR; each stream symbol carries energy ``snr / (K U)`` and
        the noise has unit variance per receive antenna and sample.
    coded : bool
        With ``coded=False`` the codeword bits are hard-demapped and
        compared directly, which is the uncoded reference at the same
        symbol SNR.

    Returns
    -------
    BerResult
        Per-user error and bit counts (information bits when coded).
    """
    K, cp = scenario.n_subcarriers, scenario.cp_len
    U = solution.n_users
    if code is None and coded:
        code = LDPCCode.from_alist()
    n_bits = code.n if code is not None else UNCODED_FRAME_BITS
    n_sym = n_bits // 2
    S = -(-n_sym // K)
    rho = snr / (K * U)

    if code is not None:
        info = rng.integers(0, 2, size=(U, code.k), dtype=np.uint8)
        cw = code.encode(info)
    else:
        info = cw = rng.integers(0, 2, size=(U, n_bits), dtype=np.uint8)
    sym = np.concatenate(
        [qpsk_map(cw), qpsk_map(rng.integers(0, 2, size=(U, 2 * (S * K - n_sym))))], axis=1)
    grid = sym.reshape(U, S, K).transpose(0, 2, 1)  # (U, K, S)

    precoded = np.sqrt(rho) * np.einsum("kmn,nks->mks", solution.digital, grid)
    streams = ofdm_modulate(precoded, cp)  # (U, T)
    tx = solution.analog @ streams  # (N_BS, T)

    H_ref = np.stack([reference_subcarriers(r, K) for r in realizations])
    g = np.sqrt(rho) * np.einsum("ur,ukrt,tm,kmn->ukn", solution.combiners.conj(), H_ref,
                                 solution.analog, solution.digital)
    direct = np.einsum("uku->uk", g)
    interference = (np.abs(g) ** 2).sum(axis=-1) - np.abs(direct) ** 2
    noise_var = (1.0 + interference) / np.maximum(np.abs(direct) ** 2, 1e-300)

    llrs = np.empty((U, n_bits))
    for u, real in enumerate(realizations):
        dopp = doppler_shift(real.params.aoa, scenario.carrier_hz, velocity_kmh / 3.6,
                             scenario.sample_period)
        y = apply_time_varying_channel(TimeVaryingTaps(real.cluster_taps, dopp), tx,
                                       0.0 if noiseless else 1.0, rng)
        z = solution.combiners[u].conj() @ y
        Z = ofdm_demodulate(z, K, cp)  # (K, S)
        eq = Z / direct[u][:, None]
        var = np.broadcast_to(noise_var[u][:, None], eq.shape)
        order = eq.T.reshape(-1)[:n_sym]
        var_order = var.T.reshape(-1)[:n_sym]
        llrs[u] = qpsk_llr(order, var_order)

    if coded:
        decoded, _, _ = code.decode(llrs, max_iters=max_iters)
        errors = np.count_nonzero(decoded != info, axis=1)
        bits = np.full(U, code.k)
    else:
        errors = np.count_nonzero((llrs < 0).astype(np.uint8) != cw, axis=1)
        bits = np.full(U, n_bits)
    return BerResult(errors, bits)


def uncoded_awgn_ber(ebn0_db: float, n_bits: int, rng: np.random.Generator,
                     K: int = 64, cp_len: int = 16) -> tuple[int, int]:
    """Uncoded QPSK through a flat AWGN OFDM link; returns (errors, bits)."""
    ebn0 = 10 ** (ebn0_db / 10)
    n_sym = -(-n_bits // (2 * K)) * K
    bits = rng.integers(0, 2, size=2 * n_sym, dtype=np.uint8)
    sym = qpsk_map(bits).reshape(-1, K).T
    x = ofdm_modulate(sym, cp_len)
    n0 = 1.0 / (2.0 * ebn0)  # unit symbol energy, two bits per symbol
    y = x + np.sqrt(n0 / 2) * (rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape))
    r = ofdm_demodulate(y, K, cp_len)
    est = qpsk_hard(r.T.reshape(-1))
    return int(np.count_nonzero(est != bits)), int(bits.size)
