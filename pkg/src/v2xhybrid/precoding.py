"""Two-stage limited-feedback hybrid precoding.

Stage 1 picks, for every vehicle independently, the (combiner, BS beam)
pair maximizing the received power summed over subcarriers. Stage 2 builds
the per-subcarrier digital precoders, either in closed form from
RVQ-quantized effective channels (MRT, ZF, MMSE) or by searching a
digital codebook for the best sum rate or sum SINR. An exhaustive joint
search over all codebooks serves as a benchmark.

Array conventions used throughout:

* ``channels``: ``(U, K, N_UE, N_BS)`` subcarrier responses per user;
* ``analog``: ``(N_BS, U)``, one column per RF chain in use;
* ``digital``: ``(K, U, U)``;
* ``combiners``: ``(U, N_UE)``;
* effective channels: ``(U, K, U)``, row ``[u, k]`` is ``w_u^H H_u[k] F_RF``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .codebooks import Codebook

CLOSED_FORM = ("mrt", "zf", "mmse")
ZF_CONDITION_LIMIT = 1e12
EXHAUSTIVE_GUARD = 2 ** 20
TIE_RTOL = 1e-12
DEGENERATE_RTOL = 1e-10


def argmax_lowest(values: np.ndarray, axis: int = 0) -> np.ndarray:
    """Argmax along ``axis`` that resolves near-ties (relative ``TIE_RTOL``)
    to the lowest index, so duplicate codewords pick deterministically."""
    values = np.asarray(values, dtype=float)
    top = np.max(values, axis=axis, keepdims=True)
    near = values >= top - TIE_RTOL * np.abs(top)
    return np.argmax(near, axis=axis)


class PrecodingError(RuntimeError):
    pass


class RankDeficientError(PrecodingError):
    """The quantized channel matrix cannot be inverted for zero-forcing."""

    def __init__(self, users, condition: float):
        self.users = tuple(users)
        self.condition = condition
        super().__init__(
            f"zero-forcing matrix is rank deficient (cond={condition:.3g}); "
            f"colliding users: {list(self.users)}"
        )


class SearchTooLargeError(PrecodingError):
    def __init__(self, combinations: int, guard: int):
        self.combinations = combinations
        super().__init__(f"exhaustive search needs {combinations} combinations (guard {guard})")


@dataclass
class PrecodingSolution:
    analog: np.ndarray
    digital: np.ndarray
    combiners: np.ndarray
    bs_indices: np.ndarray
    ue_indices: np.ndarray
    feedback: np.ndarray | None = None
    objective: float | None = None
    scales: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    @property
    def n_users(self) -> int:
        return self.analog.shape[1]


# ---------------------------------------------------------------- stage 1

def stage1_analog_search(channels_u: np.ndarray, bs_codebook: Codebook, ue_codebook: Codebook):
    """Best (combiner, BS beam) pair for a single user.

    Returns ``(ue_index, bs_index, objective)`` where the objective is
    ``sum_k |g^H H[k] v|^2``; ties resolve to the lowest ``(ue, bs)`` pair.
    """
    gains = np.einsum("wr,krt,ft->wfk", ue_codebook.entries.conj(), channels_u,
                      bs_codebook.entries)
    power = np.sum(np.abs(gains) ** 2, axis=-1)
    flat = int(argmax_lowest(power.ravel()))
    iw, jf = np.unravel_index(flat, power.shape)
    return int(iw), int(jf), float(power[iw, jf])


def build_analog_precoder(beams) -> np.ndarray:
    """Stack one beam per user as the columns of ``F_RF``."""
    return np.column_stack([np.asarray(b) for b in beams])


def effective_channel(w: np.ndarray, H: np.ndarray, analog: np.ndarray) -> np.ndarray:
    """``w^H H F_RF``; broadcasts over leading axes of ``H``."""
    return np.einsum("r,...rt,tn->...n", np.conj(w), H, analog)


def effective_channels(channels: np.ndarray, combiners: np.ndarray, analog: np.ndarray) -> np.ndarray:
    """Effective channels for every user and subcarrier, ``(U, K, U)``."""
    return np.einsum("ur,ukrt,tn->ukn", combiners.conj(), channels, analog)


def stage1(channels: np.ndarray, bs_codebooks, ue_codebook: Codebook):
    """Run the per-user analog search.

    ``bs_codebooks`` is either one codebook shared by all users or a list
    with one codebook per user (partially-connected sub-arrays).
    """
    U = channels.shape[0]
    if isinstance(bs_codebooks, Codebook):
        bs_codebooks = [bs_codebooks] * U
    ue_idx, bs_idx, beams, objs = [], [], [], []
    for u in range(U):
        iw, jf, obj = stage1_analog_search(channels[u], bs_codebooks[u], ue_codebook)
        ue_idx.append(iw)
        bs_idx.append(jf)
        beams.append(bs_codebooks[u][jf])
        objs.append(obj)
    combiners = ue_codebook.entries[ue_idx]
    return build_analog_precoder(beams), combiners, np.array(ue_idx), np.array(bs_idx), np.array(objs)


# ---------------------------------------------------------------- stage 2, variant I

def quantize_effective(hbar: np.ndarray, rvq: Codebook):
    """Quantize an effective channel row.

    Returns ``(index, codeword, gain)``: the codeword ``h`` maximizing
    ``|hbar @ h|`` (lowest index on ties) and the unquantized norm
    ``||hbar||`` that is fed back as channel quality.
    """
    hbar = np.asarray(hbar)
    score = np.abs(rvq.entries @ hbar)
    idx = int(argmax_lowest(score))
    return idx, rvq.entries[idx], float(np.linalg.norm(hbar))


def quantize_all(heff: np.ndarray, rvq: Codebook):
    """Vectorized :func:`quantize_effective` over ``(U, K, U)`` rows."""
    score = np.abs(heff @ rvq.entries.T)
    idx = argmax_lowest(score, axis=-1)
    return idx, rvq.entries[idx], np.linalg.norm(heff, axis=-1)


def assemble_quantized(directions: np.ndarray, gains: np.ndarray | None) -> np.ndarray:
    """``H_hat[k]`` from per-user codewords ``(U, K, U)``; rows are ``h^H``,
    optionally scaled by the fed-back gains ``(U, K)``. Returns ``(K, U, U)``."""
    rows = directions.conj()
    if gains is not None:
        rows = rows * gains[..., None]
    return np.transpose(rows, (1, 0, 2))


def normalize_power(analog: np.ndarray, digital: np.ndarray):
    """Scale ``digital`` so that ``||F_RF F_BB||_F^2 = U``.

    Works on a single ``(U, U)`` precoder or a stack ``(..., U, U)``; returns
    the scaled precoder(s) and the scale factor(s).
    """
    U = analog.shape[1]
    norm = np.linalg.norm(np.matmul(analog, digital), axis=(-2, -1))
    if np.any(~_feasible(analog, digital, norm)):
        raise PrecodingError("degenerate precoder: F_RF F_BB is zero")
    scale = np.sqrt(U) / norm
    return digital * np.asarray(scale)[..., None, None], scale


def _feasible(analog, digital, norm):
    # F_RF F_BB that vanishes up to rounding (e.g. repeated beams with
    # cancelling digital columns) cannot be scaled to meet the power budget
    ref = np.linalg.norm(analog) * np.linalg.norm(digital, axis=(-2, -1))
    return norm > DEGENERATE_RTOL * ref


def _finish(F, analog):
    return F if analog is None else normalize_power(analog, F)[0]


def precoder_mrt(H_hat: np.ndarray, analog: np.ndarray | None = None) -> np.ndarray:
    """Matched filter ``H_hat^H``; power-normalized when ``analog`` is given."""
    return _finish(np.swapaxes(H_hat, -1, -2).conj(), analog)


def _collisions(H_hat: np.ndarray):
    rows = H_hat / np.maximum(np.linalg.norm(H_hat, axis=-1, keepdims=True), 1e-300)
    U = rows.shape[0]
    hits = [(a, b) for a in range(U) for b in range(a + 1, U)
            if abs(np.vdot(rows[a], rows[b])) > 1 - 1e-9]
    users = sorted({u for pair in hits for u in pair})
    return users or list(range(U))


def precoder_zf(H_hat: np.ndarray, analog: np.ndarray | None = None) -> np.ndarray:
    """Right pseudo-inverse ``H_hat^H (H_hat H_hat^H)^-1`` of one ``(U, U)`` matrix."""
    Hh = H_hat.conj().T
    gram = H_hat @ Hh
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > ZF_CONDITION_LIMIT:
        raise RankDeficientError(_collisions(H_hat), cond)
    return _finish(Hh @ np.linalg.inv(gram), analog)


def precoder_mmse(H_hat: np.ndarray, snr: float, K: int, U: int,
                  analog: np.ndarray | None = None) -> np.ndarray:
    """Regularized inverse ``H_hat^H (H_hat H_hat^H + (K U / snr) I)^-1``."""
    if snr <= 0:
        raise ValueError("snr must be positive")
    Hh = np.swapaxes(H_hat, -1, -2).conj()
    reg = (K * U / snr) * np.eye(H_hat.shape[-2])
    return _finish(Hh @ np.linalg.inv(H_hat @ Hh + reg), analog)


def closed_form_digital(H_hat: np.ndarray, analog: np.ndarray, kind: str, snr: float) -> np.ndarray:
    """Power-normalized closed-form precoders for all subcarriers ``(K, U, U)``."""
    K, U, _ = H_hat.shape
    if kind == "mrt":
        F = precoder_mrt(H_hat)
    elif kind == "mmse":
        F = precoder_mmse(H_hat, snr, K, U)
    elif kind == "zf":
        F = np.stack([precoder_zf(H_hat[k]) for k in range(K)])
    else:
        raise ValueError(f"unknown closed-form precoder {kind!r}")
    return normalize_power(analog, F)[0]


# ---------------------------------------------------------------- stage 2, variant II

def candidate_metrics(heff: np.ndarray, analog: np.ndarray, candidates: np.ndarray,
                      snr: float, metric: str = "sum-rate") -> np.ndarray:
    """Per-subcarrier objective for every digital candidate, ``(B, K)``.

    Candidates are power-normalized against ``analog`` first; those with a
    vanishing ``F_RF B`` score ``-inf``. Entry
    ``[b, k]`` is subcarrier ``k``'s contribution to the sum rate (or sum
    SINR), including the ``1/K`` averaging, so summing over ``k`` gives the
    full objective.
    """
    U, K, _ = heff.shape
    norm = np.linalg.norm(np.matmul(analog, candidates), axis=(-2, -1))
    ok = _feasible(analog, candidates, norm)
    if not np.any(ok):
        raise PrecodingError("every digital candidate is degenerate for this F_RF")
    F = candidates * (np.sqrt(U) / np.where(ok, norm, 1.0))[:, None, None]
    g = np.abs(np.einsum("ukm,bmn->bkun", heff, F)) ** 2
    values = _objective_terms(g, snr, K, U, metric)
    values[~ok] = -np.inf
    return values


def _objective_terms(g, snr, K, U, metric):
    rho = snr / (K * U)
    signal = rho * np.einsum("...uu->...u", g)
    interference = rho * g.sum(axis=-1) - signal
    sinr = signal / (interference + 1.0)
    if metric == "sum-rate":
        return np.log2(1.0 + sinr).sum(axis=-1) / K
    if metric == "sum-sinr":
        return sinr.sum(axis=-1) / K
    raise ValueError(f"unknown metric {metric!r}")


def variant2_search(channels: np.ndarray, combiners: np.ndarray, analog: np.ndarray,
                    digital_cb: Codebook, snr: float, metric: str = "sum-rate"):
    """Per-subcarrier codebook search of the digital precoder.

    Returns ``(digital, indices, objective)``: the power-normalized
    precoders ``(K, U, U)``, the chosen codebook indices ``(K,)`` (lowest on
    ties) and the summed objective.
    """
    heff = effective_channels(channels, combiners, analog)
    values = candidate_metrics(heff, analog, digital_cb.entries, snr, metric)
    idx = argmax_lowest(values, axis=0)
    best = values[idx, np.arange(values.shape[1])]
    digital, _ = normalize_power(analog, digital_cb.entries[idx])
    return digital, idx, float(best.sum())


# ---------------------------------------------------------------- full algorithm

def hybrid_precoding(channels: np.ndarray, bs_codebooks, ue_codebook: Codebook, snr: float,
                     variant: str = "v1-mmse", rvq: Codebook | None = None,
                     digital_cb: Codebook | None = None, carry_gain: bool = True) -> PrecodingSolution:
    """Two-stage design for all users.

    ``variant`` is one of ``v1-mrt``, ``v1-zf``, ``v1-mmse`` (closed form from
    fed-back effective channels; ``rvq=None`` means unquantized feedback),
    ``v2-rate`` or ``v2-sinr`` (digital codebook search).
    """
    analog, combiners, ue_idx, bs_idx, objs = stage1(channels, bs_codebooks, ue_codebook)
    info = {"stage1_objective": objs}
    if variant.startswith("v1-"):
        kind = variant[3:]
        heff = effective_channels(channels, combiners, analog)
        if rvq is None:
            gains = np.linalg.norm(heff, axis=-1)
            directions = heff.conj() / np.maximum(gains, 1e-300)[..., None]
            feedback = None
        else:
            feedback, directions, gains = quantize_all(heff, rvq)
        H_hat = assemble_quantized(directions, gains if carry_gain else None)
        digital = closed_form_digital(H_hat, analog, kind, snr)
        info["training_slots"] = 0
    elif variant in ("v2-rate", "v2-sinr"):
        if digital_cb is None:
            raise ValueError("variant II needs a digital codebook")
        metric = "sum-rate" if variant == "v2-rate" else "sum-sinr"
        digital, feedback, obj = variant2_search(channels, combiners, analog, digital_cb, snr, metric)
        info["training_slots"] = len(digital_cb)
        info["variant2_objective"] = obj
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return PrecodingSolution(analog, digital, combiners, bs_idx, ue_idx, feedback, info=info)


def exhaustive_search(channels: np.ndarray, bs_codebooks, ue_codebook: Codebook,
                      digital_cb: Codebook, snr: float, guard: int = EXHAUSTIVE_GUARD) -> PrecodingSolution:
    """Joint search over every user's combiner and BS beam and, per
    subcarrier, the digital codebook entry, maximizing the sum rate."""
    U = channels.shape[0]
    if isinstance(bs_codebooks, Codebook):
        bs_codebooks = [bs_codebooks] * U
    n_w = len(ue_codebook)
    n_f = [len(cb) for cb in bs_codebooks]
    count = n_w ** U * int(np.prod(n_f)) * len(digital_cb)
    if count > guard:
        raise SearchTooLargeError(count, guard)

    best = None
    for ue_idx in itertools.product(range(n_w), repeat=U):
        combiners = ue_codebook.entries[list(ue_idx)]
        for bs_idx in itertools.product(*(range(n) for n in n_f)):
            analog = build_analog_precoder([bs_codebooks[u][j] for u, j in enumerate(bs_idx)])
            heff = effective_channels(channels, combiners, analog)
            try:
                values = candidate_metrics(heff, analog, digital_cb.entries, snr, "sum-rate")
            except PrecodingError:
                continue
            idx = argmax_lowest(values, axis=0)
            obj = float(values[idx, np.arange(values.shape[1])].sum())
            if best is None or obj > best[0]:
                best = (obj, ue_idx, bs_idx, analog, combiners, idx)

    if best is None:
        raise PrecodingError("no feasible combination in the joint search")
    obj, ue_idx, bs_idx, analog, combiners, idx = best
    digital, _ = normalize_power(analog, digital_cb.entries[idx])
    return PrecodingSolution(analog, digital, combiners, np.array(bs_idx), np.array(ue_idx),
                             idx, objective=obj, info={"combinations": count})
