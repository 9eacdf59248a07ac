"""Analog beamsteering, RVQ and digital precoder codebooks."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .channel import array_response


@dataclass(frozen=True)
class Codebook:
    """An ordered set of codewords.

    ``entries`` has shape ``(2**bits, dim)`` for analog and RVQ codebooks
    (one codeword per row) and ``(2**bits, U, U)`` for digital codebooks.
    """

    kind: str
    entries: np.ndarray
    bits: int

    def __len__(self) -> int:
        return self.entries.shape[0]

    def __getitem__(self, i):
        return self.entries[i]


def beamsteering_codebook(n_antennas: int, bits: int, spacing_ratio: float = 0.5) -> Codebook:
    """DFT codebook: beam ``q`` is the array response at angle ``2*pi*q/2**bits``.

    The grid for ``bits`` is the even-indexed subset of the grid for
    ``bits + 1``.
    """
    if bits < 0:
        raise ValueError("bits must be nonnegative")
    n_q = 2 ** bits
    angles = 2 * np.pi * np.arange(n_q) / n_q
    return Codebook("analog-beamsteering", array_response(angles, n_antennas, spacing_ratio), bits)


def embed_subarray(codebook: Codebook, n_bs: int, n_rf: int, chain: int) -> Codebook:
    """Place sub-array beams on the antennas driven by RF chain ``chain``.

    Used for the partially-connected structure, where chain ``n`` feeds
    antennas ``n*N_sub .. (n+1)*N_sub - 1`` only.
    """
    n_sub = n_bs // n_rf
    if codebook.entries.shape[1] != n_sub:
        raise ValueError("codebook dimension does not match the sub-array size")
    full = np.zeros((len(codebook), n_bs), dtype=complex)
    full[:, chain * n_sub:(chain + 1) * n_sub] = codebook.entries
    return Codebook(codebook.kind, full, codebook.bits)


def rvq_codebook(dim: int, bits: int, rng: np.random.Generator) -> Codebook:
    """``2**bits`` i.i.d. vectors uniform on the complex unit sphere."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    n = 2 ** bits
    g = rng.standard_normal((n, dim)) + 1j * rng.standard_normal((n, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return Codebook("rvq", g, bits)


def phase_grid(dim: int, size: int) -> np.ndarray:
    """``size`` DFT beams of length ``dim``: ``exp(j*2*pi*q*(m+1)/size)/sqrt(dim)``.

    For ``dim == 1`` this is the ``size``-point phase grid on the unit
    circle; for larger ``dim`` it is the DFT codebook up to a common phase
    per beam.
    """
    q = np.arange(size)[:, None]
    m = np.arange(1, dim + 1)[None, :]
    return np.exp(2j * np.pi * q * m / size) / np.sqrt(dim)


def digital_codebook(n_users: int, bits: int) -> Codebook:
    """Candidate ``U x U`` digital precoders for the iterative variant.

    Each column is drawn from a ``U``-dimensional grid of
    ``2**ceil(bits/U)`` beams; the Cartesian product is taken in
    lexicographic order and truncated to ``2**bits`` entries.
    """
    if n_users < 1 or bits < 0:
        raise ValueError("need n_users >= 1 and bits >= 0")
    per_user = -(-bits // n_users)
    grid = phase_grid(n_users, 2 ** per_user)
    total = 2 ** bits
    entries = np.empty((total, n_users, n_users), dtype=complex)
    combos = itertools.islice(itertools.product(range(len(grid)), repeat=n_users), total)
    for i, combo in enumerate(combos):
        entries[i] = grid[list(combo)].T
    return Codebook("digital", entries, bits)
