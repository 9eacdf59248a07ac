"""Gray-mapped QPSK and CP-OFDM."""

from __future__ import annotations

import numpy as np

_SQRT2 = np.sqrt(2.0)


def qpsk_map(bits) -> np.ndarray:
    """Map bit pairs ``(b0, b1)`` to unit-energy symbols.

    00 -> (1+j)/sqrt2, 01 -> (-1+j)/sqrt2, 11 -> (-1-j)/sqrt2, 10 -> (1-j)/sqrt2,
    i.e. ``b1`` sets the real sign and ``b0`` the imaginary sign.
    """
    b = np.asarray(bits, dtype=np.int8)
    if b.shape[-1] % 2:
        raise ValueError("QPSK needs an even number of bits")
    b = b.reshape(b.shape[:-1] + (-1, 2))
    return ((1 - 2 * b[..., 1]) + 1j * (1 - 2 * b[..., 0])) / _SQRT2


def qpsk_llr(symbols, noise_var) -> np.ndarray:
    """Per-bit LLRs (positive favours 0) for symbols seen in complex noise of
    variance ``noise_var``; exact for Gray QPSK."""
    y = np.asarray(symbols)
    scale = 2 * _SQRT2 / np.asarray(noise_var, dtype=float)
    out = np.empty(y.shape + (2,))
    out[..., 0] = scale * y.imag
    out[..., 1] = scale * y.real
    return out.reshape(y.shape[:-1] + (-1,))


def qpsk_hard(symbols) -> np.ndarray:
    return (qpsk_llr(symbols, 1.0) < 0).astype(np.uint8)


def ofdm_modulate(freq: np.ndarray, cp_len: int) -> np.ndarray:
    """Unitary IDFT per OFDM symbol plus cyclic prefix.

    ``freq`` has subcarriers on its last-but-one axis: shape ``(..., K, S)``
    for ``S`` OFDM symbols. Returns ``(..., S*(K+cp_len))`` samples.
    """
    freq = np.asarray(freq, dtype=complex)
    K = freq.shape[-2]
    t = np.fft.ifft(freq, axis=-2, norm="ortho")
    t = np.concatenate([t[..., K - cp_len:, :], t], axis=-2) if cp_len else t
    t = np.swapaxes(t, -1, -2)
    return t.reshape(t.shape[:-2] + (-1,))


def ofdm_demodulate(samples: np.ndarray, K: int, cp_len: int) -> np.ndarray:
    """Inverse of :func:`ofdm_modulate`: strip CPs and apply the unitary DFT."""
    samples = np.asarray(samples)
    block = K + cp_len
    S = samples.shape[-1] // block
    x = samples[..., :S * block].reshape(samples.shape[:-1] + (S, block))[..., cp_len:]
    return np.fft.fft(np.swapaxes(x, -1, -2), axis=-2, norm="ortho")
