"""Binary LDPC code: alist I/O, systematic encoding and normalized min-sum decoding.

The bundled code is a rate-1/2 (3,6)-regular quasi-cyclic code of length
1296 built from 216x216 circulant permutations whose shifts avoid 4- and
6-cycles.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

DEFAULT_ALIST = "ldpc_1296_r12.alist"


# ---------------------------------------------------------------- construction

def _has_short_cycles(shifts: np.ndarray, Z: int) -> bool:
    rows, cols = shifts.shape
    for i1 in range(rows):
        for i2 in range(rows):
            if i2 == i1:
                continue
            for j1 in range(cols):
                for j2 in range(cols):
                    if j2 == j1:
                        continue
                    # 4-cycle
                    if (shifts[i1, j1] - shifts[i2, j1] + shifts[i2, j2] - shifts[i1, j2]) % Z == 0:
                        return True
                    for i3 in range(rows):
                        if i3 == i2:
                            continue
                        for j3 in range(cols):
                            if j3 == j2 or (i3 == i1 and j3 == j1):
                                continue
                            if i3 == i1 or j3 == j1:
                                continue
                            s = (shifts[i1, j1] - shifts[i2, j1] + shifts[i2, j2]
                                 - shifts[i3, j2] + shifts[i3, j3] - shifts[i1, j3])
                            if s % Z == 0:
                                return True
    return False


def quasi_cyclic_parity_check(block_rows: int = 3, block_cols: int = 6, Z: int = 216,
                              seed: int = 2024) -> np.ndarray:
    """Parity-check matrix tiled with circulant permutations (girth >= 8)."""
    rng = np.random.default_rng(seed)
    while True:
        shifts = rng.integers(0, Z, size=(block_rows, block_cols))
        shifts[0, :] = 0
        shifts[:, 0] = 0
        if not _has_short_cycles(shifts, Z):
            break
    H = np.zeros((block_rows * Z, block_cols * Z), dtype=np.uint8)
    eye = np.eye(Z, dtype=np.uint8)
    for i in range(block_rows):
        for j in range(block_cols):
            H[i * Z:(i + 1) * Z, j * Z:(j + 1) * Z] = np.roll(eye, shifts[i, j], axis=1)
    return H


# ---------------------------------------------------------------- alist

def write_alist(H: np.ndarray, path) -> None:
    M, N = H.shape
    col_sets = [np.flatnonzero(H[:, j]) + 1 for j in range(N)]
    row_sets = [np.flatnonzero(H[i]) + 1 for i in range(M)]
    dv, dc = max(map(len, col_sets)), max(map(len, row_sets))
    lines = [f"{N} {M}", f"{dv} {dc}",
             " ".join(str(len(s)) for s in col_sets),
             " ".join(str(len(s)) for s in row_sets)]
    lines += [" ".join(map(str, np.pad(s, (0, dv - len(s))))) for s in col_sets]
    lines += [" ".join(map(str, np.pad(s, (0, dc - len(s))))) for s in row_sets]
    Path(path).write_text("\n".join(lines) + "\n")


def read_alist(path) -> np.ndarray:
    """Parity-check matrix from an alist file (MacKay format)."""
    tokens = Path(path).read_text().split()
    it = iter(int(t) for t in tokens)
    N, M = next(it), next(it)
    dv, dc = next(it), next(it)
    col_w = [next(it) for _ in range(N)]
    _ = [next(it) for _ in range(M)]
    H = np.zeros((M, N), dtype=np.uint8)
    for j in range(N):
        rows = [next(it) for _ in range(dv)]
        for r in rows[:col_w[j]]:
            H[r - 1, j] = 1
    return H


def default_alist_path() -> Path:
    return Path(str(resources.files("v2xhybrid").joinpath("data", DEFAULT_ALIST)))


# ---------------------------------------------------------------- GF(2)

def _gf2_row_reduce(H: np.ndarray):
    """Reduced row echelon form over GF(2); returns (R, pivot columns)."""
    R = H.astype(bool).copy()
    M, N = R.shape
    pivots = []
    row = 0
    for col in range(N):
        if row == M:
            break
        hits = np.flatnonzero(R[row:, col])
        if hits.size == 0:
            continue
        p = row + hits[0]
        if p != row:
            R[[row, p]] = R[[p, row]]
        others = np.flatnonzero(R[:, col])
        others = others[others != row]
        R[others] ^= R[row]
        pivots.append(col)
        row += 1
    return R[:row], np.array(pivots)


class LDPCCode:
    """Systematic encoder and normalized min-sum decoder for a parity-check matrix.

    Codewords are returned in the column order of ``H``; the information
    bits sit verbatim at ``info_positions``. LLRs are positive for bit 0.
    """

    def __init__(self, H: np.ndarray, scaling: float = 0.75):
        self.H = (np.asarray(H) != 0).astype(np.uint8)
        self.M, self.N = self.H.shape
        self.scaling = scaling
        R, pivots = _gf2_row_reduce(self.H)
        self.parity_positions = pivots
        self.info_positions = np.setdiff1d(np.arange(self.N), pivots)
        # parity bit at pivots[i] equals the xor of info bits flagged in row i
        self._parity_map = R[:, self.info_positions].astype(np.uint8)
        self._build_graph()

    @classmethod
    def from_alist(cls, path=None, **kwargs) -> "LDPCCode":
        return cls(read_alist(path or default_alist_path()), **kwargs)

    @property
    def k(self) -> int:
        return self.info_positions.size

    @property
    def n(self) -> int:
        return self.N

    @property
    def rate(self) -> float:
        return self.k / self.n

    def _build_graph(self):
        chk, var = np.nonzero(self.H)  # row-major: edges grouped by check
        self._edge_var = var
        E = var.size
        dc = np.bincount(chk, minlength=self.M)
        # padded (M, dc_max) table of edge ids; padding points at edge E
        self._chk_edges = np.full((self.M, dc.max()), E)
        offs = np.concatenate([[0], np.cumsum(dc)])
        for m in range(self.M):
            self._chk_edges[m, :dc[m]] = np.arange(offs[m], offs[m + 1])
        order = np.argsort(var, kind="stable")
        dv = np.bincount(var, minlength=self.N)
        self._var_edges = np.full((self.N, dv.max()), E)
        voffs = np.concatenate([[0], np.cumsum(dv)])
        for j in range(self.N):
            self._var_edges[j, :dv[j]] = order[voffs[j]:voffs[j + 1]]

    def encode(self, info_bits) -> np.ndarray:
        info = np.asarray(info_bits, dtype=np.uint8)
        if info.shape[-1] != self.k:
            raise ValueError(f"expected {self.k} information bits, got {info.shape[-1]}")
        batch = info.reshape(-1, self.k)
        cw = np.zeros((batch.shape[0], self.N), dtype=np.uint8)
        cw[:, self.info_positions] = batch
        cw[:, self.parity_positions] = (batch.astype(np.int64) @ self._parity_map.T.astype(np.int64)) % 2
        return cw.reshape(info.shape[:-1] + (self.N,))

    def syndrome(self, bits) -> np.ndarray:
        return (np.asarray(bits, dtype=np.int64) @ self.H.T.astype(np.int64)) % 2

    def decode(self, llrs, max_iters: int = 25):
        """Normalized min-sum decoding.

        Accepts a single LLR vector or a batch ``(B, N)``. Returns
        ``(info_bits, converged, iterations)``; ``converged`` is a boolean per
        codeword and ``iterations`` the number of iterations run.
        """
        llr = np.asarray(llrs, dtype=float)
        single = llr.ndim == 1
        llr = np.atleast_2d(llr)
        if llr.shape[1] != self.N:
            raise ValueError(f"expected {self.N} LLRs, got {llr.shape[1]}")
        B = llr.shape[0]
        E = self._edge_var.size
        c2v = np.zeros((B, E + 1))
        hard = (llr < 0).astype(np.uint8)
        converged = np.zeros(B, dtype=bool)
        # all-zero LLRs carry no information; a zero syndrome there is vacuous
        informative = np.any(llr != 0, axis=1)
        iters = 0
        for iters in range(1, max_iters + 1):
            total = llr + c2v[:, self._var_edges].sum(axis=2)
            v2c = np.empty((B, E + 1))
            v2c[:, :E] = total[:, self._edge_var] - c2v[:, :E]
            v2c[:, E] = np.inf
            msgs = v2c[:, self._chk_edges]  # (B, M, dc)
            mag = np.abs(msgs)
            sign = np.where(msgs < 0, -1.0, 1.0)
            sign_prod = np.prod(sign, axis=2, keepdims=True)
            order = np.argsort(mag, axis=2)
            min1 = np.take_along_axis(mag, order[:, :, :1], axis=2)
            min2 = np.take_along_axis(mag, order[:, :, 1:2], axis=2)
            is_min = np.arange(mag.shape[2])[None, None, :] == order[:, :, :1]
            out = self.scaling * sign_prod * sign * np.where(is_min, min2, min1)
            new = np.zeros((B, E + 1))
            flat = self._chk_edges.reshape(-1)
            valid = flat < E
            new[:, flat[valid]] = out.reshape(B, -1)[:, valid]
            c2v = new
            total = llr + c2v[:, self._var_edges].sum(axis=2)
            hard = (total < 0).astype(np.uint8)
            converged = ~np.any(self.syndrome(hard), axis=1) & informative
            if converged.all():
                break
        info = hard[:, self.info_positions]
        if single:
            return info[0], bool(converged[0]), iters
        return info, converged, iters
