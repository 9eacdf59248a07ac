"""Seeded Monte Carlo campaigns.

Every (SNR index, trial index) pair gets its own random streams derived
from ``SeedSequence(master_seed, spawn_key=(snr_index, trial_index, role))``
with role 0 for channels, 1 for RVQ codebooks and 2 for link-level bits
and noise. Results therefore do not depend on the number of workers or
the order in which trials finish.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..channel import realize_channel
from ..codebooks import beamsteering_codebook, digital_codebook, embed_subarray, rvq_codebook
from ..config import PRESETS, ScenarioConfig
from ..linklevel.ber import ber_trial, reference_subcarriers
from ..linklevel.ldpc import LDPCCode
from ..metrics import (energy_efficiency, epsilon_rate, mode_power_model, outage_probability,
                       power_total, user_rates, user_sinrs)
from ..precoding import PrecodingError, exhaustive_search, hybrid_precoding
from .results import AGGREGATE, ResultRecord

log = logging.getLogger(__name__)

FAILURE_THRESHOLD = 0.10
CHANNEL, RVQ, LINK = 0, 1, 2


class CampaignError(RuntimeError):
    pass


@dataclass
class CampaignResult:
    records: list
    failures: list = field(default_factory=list)
    trials: int = 0


def trial_seed(master_seed: int, snr_index: int, trial_index: int, role: int = CHANNEL):
    return np.random.SeedSequence(master_seed, spawn_key=(snr_index, trial_index, role))


def seed_label(master_seed: int, snr_index: int, trial_index: int) -> int:
    """Integer recorded in the ``seed`` column for a trial."""
    return int(trial_seed(master_seed, snr_index, trial_index).generate_state(1)[0])


def analog_codebooks(cfg: ScenarioConfig):
    """BS codebook(s) and the vehicle codebook for a scenario."""
    ue = beamsteering_codebook(cfg.n_ue, cfg.bits_ue_rf, cfg.spacing_ratio)
    if cfg.connection == "partially":
        sub = beamsteering_codebook(cfg.n_sub, cfg.bits_bs_rf, cfg.spacing_ratio)
        bs = [embed_subarray(sub, cfg.n_bs, cfg.n_rf, u) for u in range(cfg.n_users)]
    else:
        bs = beamsteering_codebook(cfg.n_bs, cfg.bits_bs_rf, cfg.spacing_ratio)
    return bs, ue


def draw_channels(cfg: ScenarioConfig, rng: np.random.Generator):
    """One realization per user, stacked subcarriers ``(U, K, N_UE, N_BS)``."""
    reals = [realize_channel(cfg, cfg.n_ue, cfg.n_bs, rng) for _ in range(cfg.n_users)]
    return reals, np.stack([r.subcarriers for r in reals])


def design(cfg: ScenarioConfig, channels: np.ndarray, snr: float, rvq_rng: np.random.Generator,
           codebooks=None):
    """Run the configured precoding variant on one set of channels."""
    bs, ue = codebooks or analog_codebooks(cfg)
    if cfg.variant == "exhaustive":
        return exhaustive_search(channels, bs, ue, digital_codebook(cfg.n_users, cfg.bits_bb),
                                 snr, guard=cfg.exhaustive_guard)
    if cfg.variant.startswith("v2-"):
        return hybrid_precoding(channels, bs, ue, snr, cfg.variant,
                                digital_cb=digital_codebook(cfg.n_users, cfg.bits_bb))
    rvq = None
    if cfg.feedback == "quantized":
        rvq = rvq_codebook(cfg.n_users, cfg.bits_bb, rvq_rng)
    return hybrid_precoding(channels, bs, ue, snr, cfg.variant, rvq=rvq,
                            carry_gain=cfg.carry_gain)


# ---------------------------------------------------------------- per-trial workers

def _rate_task(args):
    cfg, si, ti = args
    snr_db = cfg.snr_db[si]
    snr = 10 ** (snr_db / 10)
    rng = np.random.default_rng(trial_seed(cfg.master_seed, si, ti, CHANNEL))
    _, H = draw_channels(cfg, rng)
    try:
        sol = design(cfg, H, snr, np.random.default_rng(trial_seed(cfg.master_seed, si, ti, RVQ)))
    except PrecodingError as exc:
        return None, f"snr={snr_db} trial={ti}: {exc}"
    seed = seed_label(cfg.master_seed, si, ti)
    rates = user_rates(H, sol, snr)
    sinrs = user_sinrs(H, sol, snr)
    recs = []
    for u in range(cfg.n_users):
        recs.append(ResultRecord(cfg.name, ti, snr_db, u, "rate", float(rates[u]), seed))
        recs.append(ResultRecord(cfg.name, ti, snr_db, u, "sinr", float(sinrs[u]), seed))
    recs.append(ResultRecord(cfg.name, ti, snr_db, AGGREGATE, "sum_rate", float(rates.sum()), seed))
    return recs, None


_CODE_CACHE: dict = {}


def _code(cfg: ScenarioConfig) -> LDPCCode:
    key = cfg.ldpc_alist
    if key not in _CODE_CACHE:
        _CODE_CACHE[key] = LDPCCode.from_alist(cfg.ldpc_alist)
    return _CODE_CACHE[key]


def ber_frame(cfg: ScenarioConfig, si: int, ti: int, velocity_kmh: float, coded: bool = True):
    """One BER frame for every user. The geometry, bits and noise depend only
    on (seed, snr index, trial index), so frames at different velocities
    share all randomness except the Doppler."""
    snr = 10 ** (cfg.snr_db[si] / 10)
    rng = np.random.default_rng(trial_seed(cfg.master_seed, si, ti, CHANNEL))
    reals, _ = draw_channels(cfg, rng)
    H_ref = np.stack([reference_subcarriers(r, cfg.n_subcarriers) for r in reals])
    sol = design(cfg, H_ref, snr, np.random.default_rng(trial_seed(cfg.master_seed, si, ti, RVQ)))
    link_rng = np.random.default_rng(trial_seed(cfg.master_seed, si, ti, LINK))
    return ber_trial(cfg, reals, sol, snr, velocity_kmh, link_rng,
                     code=_code(cfg) if coded else None, coded=coded, max_iters=cfg.ldpc_iters)


def _ber_task(args):
    cfg, si, ti, velocity, coded = args
    snr_db = cfg.snr_db[si]
    try:
        res = ber_frame(cfg, si, ti, velocity, coded)
    except PrecodingError as exc:
        return None, f"snr={snr_db} trial={ti}: {exc}"
    seed = seed_label(cfg.master_seed, si, ti)
    name = f"{cfg.name}/v={velocity:g}"
    recs = []
    for u in range(len(res.errors)):
        recs.append(ResultRecord(name, ti, snr_db, u, "bit_errors", float(res.errors[u]), seed))
        recs.append(ResultRecord(name, ti, snr_db, u, "bits", float(res.bits[u]), seed))
    return recs, None


# ---------------------------------------------------------------- campaigns

def _execute(task, jobs, workers: int, n_trials: int) -> CampaignResult:
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(task, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        outputs = [task(j) for j in jobs]
    records, failures = [], []
    for recs, err in outputs:
        if err is None:
            records.extend(recs)
        else:
            log.warning("trial failed: %s", err)
            failures.append(err)
    if len(failures) > FAILURE_THRESHOLD * n_trials:
        raise CampaignError(f"{len(failures)} of {n_trials} trials failed (> 10%)")
    return CampaignResult(records, failures, n_trials)


def run_campaign(cfg: ScenarioConfig, kind: str = "rate", workers: int = 1,
                 velocities=None, coded: bool = True) -> CampaignResult:
    """Run every (SNR, trial) pair of ``cfg``.

    ``kind="rate"`` emits per-user rate and SINR records plus the sum rate;
    ``kind="ber"`` emits per-user bit error and bit counts for each velocity
    in ``velocities`` (defaults to the scenario's).
    """
    cfg.validate()
    pairs = [(si, ti) for si in range(len(cfg.snr_db)) for ti in range(cfg.trials)]
    if kind == "rate":
        return _execute(_rate_task, [(cfg, si, ti) for si, ti in pairs], workers, len(pairs))
    if kind == "ber":
        velocities = [cfg.velocity_kmh] if velocities is None else list(velocities)
        jobs = [(cfg, si, ti, v, coded) for v in velocities for si, ti in pairs]
        return _execute(_ber_task, jobs, workers, len(jobs))
    raise ValueError(f"unknown campaign kind {kind!r}")


def rates_by_snr(records, metric: str = "rate") -> dict:
    out: dict = {}
    for r in records:
        if r.metric == metric:
            out.setdefault(r.snr_db, []).append(r.value)
    return {k: np.asarray(v) for k, v in out.items()}


def outage_records(cfg: ScenarioConfig, records, targets, epsilons=(0.05, 0.1)) -> list:
    """Aggregate outage probability and epsilon-outage rate per SNR, pooling users."""
    out = []
    for snr_db, samples in sorted(rates_by_snr(records).items()):
        for R in targets:
            out.append(ResultRecord(cfg.name, AGGREGATE, snr_db, AGGREGATE, f"p_out@{R:g}",
                                    outage_probability(samples, R), cfg.master_seed))
        for eps in epsilons:
            out.append(ResultRecord(cfg.name, AGGREGATE, snr_db, AGGREGATE, f"rate_eps@{eps:g}",
                                    epsilon_rate(samples, eps), cfg.master_seed))
    return out


def ber_summary(records) -> dict:
    """``{(scenario, snr_db): (errors, bits)}`` summed over users and trials."""
    acc: dict = {}
    for r in records:
        e, b = acc.get((r.scenario, r.snr_db), (0, 0))
        if r.metric == "bit_errors":
            e += int(r.value)
        elif r.metric == "bits":
            b += int(r.value)
        acc[(r.scenario, r.snr_db)] = (e, b)
    return acc


def energy_campaign(modes, user_counts, snr_db: float = 0.0, trials: int = 200,
                    master_seed: int = 1, workers: int = 1, base: dict | None = None) -> list:
    """Energy efficiency per mode and user count with MRT precoding.

    The rate is the mean sum rate over ``trials``; the power is the BS-side
    hybrid fully-connected model with ``N_RF = U`` and the mode's antennas
    and ADC power.
    """
    out = []
    for mode in modes:
        for U in user_counts:
            cfg = PRESETS[mode].with_(n_users=U, n_rf=U, variant="v1-mrt", snr_db=(snr_db,),
                                      trials=trials, master_seed=master_seed, **(base or {}))
            res = run_campaign(cfg, "rate", workers)
            sums = np.array([r.value for r in res.records if r.metric == "sum_rate"])
            model = mode_power_model(mode, n_rf=U)
            rate = float(sums.mean())
            name = f"{mode}/U={U}"
            for metric, value in (("sum_rate_mean", rate), ("power_w", power_total(model)),
                                  ("energy_efficiency", energy_efficiency(rate, model))):
                out.append(ResultRecord(name, AGGREGATE, snr_db, AGGREGATE, metric, value, master_seed))
    return out
