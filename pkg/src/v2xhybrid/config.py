"""Scenario configuration, presets and the INI-style scenario file format.

A scenario file is read with :mod:`configparser`. Three sections are
recognised and every key is optional; unknown sections or keys are
rejected::

    [scenario]
    preset = mmwave          ; base values, defaults to mmwave
    n_users = 4
    n_rf = 4
    connection = fully       ; fully | partially
    velocity_kmh = 20

    [bits]
    bs_rf = 4
    ue_rf = 4
    bb = 8

    [simulation]
    variant = v1-mmse        ; v1-mrt v1-zf v1-mmse v2-rate v2-sinr exhaustive
    feedback = quantized     ; quantized | perfect
    snr_db = -25:5:10        ; lo:step:hi, or a comma-separated list
    trials = 1000
    seed = 1

Keys under ``[scenario]`` are the :class:`ScenarioConfig` field names.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .channel import PULSE_HALF_WIDTH
from .metrics import MODES

VARIANTS = ("v1-mrt", "v1-zf", "v1-mmse", "v2-rate", "v2-sinr", "exhaustive")


class ConfigError(ValueError):
    """Invalid scenario; ``fields`` names the offending settings."""

    def __init__(self, message: str, fields=()):
        self.fields = tuple(fields)
        super().__init__(message)


def parse_snr_sweep(text: str) -> tuple[float, ...]:
    """``"lo:step:hi"`` (inclusive) or ``"a,b,c"`` in dB."""
    text = text.strip()
    if ":" in text:
        try:
            lo, step, hi = (float(x) for x in text.split(":"))
        except ValueError as exc:
            raise ConfigError(f"bad SNR sweep {text!r}", ["snr_db"]) from exc
        if step <= 0 or hi < lo:
            raise ConfigError(f"bad SNR sweep {text!r}", ["snr_db"])
        n = int(np.floor((hi - lo) / step + 1e-9)) + 1
        return tuple(float(lo + i * step) for i in range(n))
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"bad SNR list {text!r}", ["snr_db"]) from exc


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "mmwave"
    band: str = "mmwave"
    carrier_hz: float = 28e9
    bandwidth_hz: float = 850e6
    n_bs: int = 32
    n_ue: int = 4
    n_rf: int = 2
    n_users: int = 2
    clusters: int = 4
    rays: int = 10
    angular_spread_deg: float = 2.0
    n_subcarriers: int = 16
    cp_len: int = 4
    n_taps: int = 5
    rolloff: float = 1.0
    velocity_kmh: float = 20.0
    spacing_ratio: float = 0.5
    pathloss_exponent: float = 3.0
    adc_power_w: float = 0.25
    bits_bs_rf: int = 4
    bits_ue_rf: int = 4
    bits_bb: int = 8
    variant: str = "v1-mmse"
    connection: str = "fully"
    feedback: str = "quantized"
    carry_gain: bool = True
    snr_db: tuple = (-25.0, -20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0)
    trials: int = 1000
    master_seed: int = 1
    ldpc_alist: str | None = None
    ldpc_iters: int = 25
    exhaustive_guard: int = 2 ** 20

    @property
    def sample_period(self) -> float:
        return 1.0 / self.bandwidth_hz

    @property
    def n_sub(self) -> int:
        """Antennas per RF chain in the partially-connected structure."""
        return self.n_bs // self.n_rf

    def validate(self) -> "ScenarioConfig":
        bad = []
        counts = ("n_bs", "n_ue", "n_rf", "n_users", "clusters", "rays", "n_subcarriers",
                  "n_taps", "trials", "ldpc_iters")
        bad += [(f, f"{f} must be positive") for f in counts if getattr(self, f) < 1]
        if self.n_users > self.n_rf:
            bad.append(("n_users", f"U <= N_RF violated: n_users={self.n_users} > n_rf={self.n_rf}"))
        if self.cp_len < self.n_taps - 1:
            bad.append(("cp_len", f"cp_len={self.cp_len} shorter than n_taps-1={self.n_taps - 1}"))
        if self.n_taps - 1 - PULSE_HALF_WIDTH < 0:
            bad.append(("n_taps", f"n_taps must be >= {PULSE_HALF_WIDTH + 1} to hold the pulse"))
        if self.n_taps > self.n_subcarriers:
            bad.append(("n_taps", "n_taps exceeds n_subcarriers"))
        if not 0 <= self.rolloff <= 1:
            bad.append(("rolloff", "rolloff must lie in [0, 1]"))
        if self.variant not in VARIANTS:
            bad.append(("variant", f"unknown variant {self.variant!r}"))
        if self.connection not in ("fully", "partially"):
            bad.append(("connection", f"unknown connection {self.connection!r}"))
        elif self.connection == "partially" and self.n_bs % self.n_rf:
            bad.append(("connection", "n_bs must be divisible by n_rf for sub-arrays"))
        if self.feedback not in ("quantized", "perfect"):
            bad.append(("feedback", f"unknown feedback {self.feedback!r}"))
        for f in ("bits_bs_rf", "bits_ue_rf", "bits_bb"):
            if getattr(self, f) < 0:
                bad.append((f, f"{f} must be nonnegative"))
        for f in ("carrier_hz", "bandwidth_hz", "spacing_ratio"):
            if getattr(self, f) <= 0:
                bad.append((f, f"{f} must be positive"))
        if self.velocity_kmh < 0 or self.angular_spread_deg < 0 or self.adc_power_w < 0:
            bad.append(("velocity_kmh", "velocity, angular spread and ADC power must be nonnegative"))
        if not self.snr_db:
            bad.append(("snr_db", "empty SNR sweep"))
        if bad:
            raise ConfigError("; ".join(msg for _, msg in bad), [f for f, _ in bad])
        return self

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes).validate()


_MMWAVE = ScenarioConfig()
_SUB6 = replace(
    _MMWAVE, name="sub6", band="sub6", carrier_hz=3.5e9, bandwidth_hz=150e6, n_bs=16, n_ue=2,
    clusters=10, rays=20, n_subcarriers=32, cp_len=8, n_taps=9,
)

PRESETS = {"mmwave": _MMWAVE, "sub6": _SUB6}
for _mode, _spec in MODES.items():
    PRESETS[_mode] = replace(_MMWAVE, name=_mode, band=_mode, **_spec)


_SECTION_KEYS = {
    "scenario": {f.name for f in fields(ScenarioConfig)} - {
        "bits_bs_rf", "bits_ue_rf", "bits_bb", "variant", "feedback", "snr_db", "trials",
        "master_seed", "carry_gain"} | {"preset"},
    "bits": {"bs_rf", "ue_rf", "bb"},
    "simulation": {"variant", "feedback", "snr_db", "trials", "seed", "carry_gain"},
}
_RENAMES = {("bits", "bs_rf"): "bits_bs_rf", ("bits", "ue_rf"): "bits_ue_rf",
            ("bits", "bb"): "bits_bb", ("simulation", "seed"): "master_seed"}


def _coerce(name: str, raw: str):
    ftype = {f.name: f for f in fields(ScenarioConfig)}[name]
    default = getattr(_MMWAVE, name)
    if name == "snr_db":
        return parse_snr_sweep(raw)
    if name == "ldpc_alist":
        return raw or None
    try:
        if isinstance(default, bool):
            return raw.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"cannot parse {ftype.name}={raw!r}", [name]) from exc
    return raw.strip()


def load_scenario(source) -> ScenarioConfig:
    """Preset name or path to a scenario file, validated."""
    if isinstance(source, ScenarioConfig):
        return source.validate()
    if isinstance(source, str) and source in PRESETS:
        return PRESETS[source].validate()
    path = Path(source)
    if not path.is_file():
        raise ConfigError(f"no preset or file named {source!r}", ["scenario"])
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    unknown = [s for s in parser.sections() if s not in _SECTION_KEYS]
    if unknown:
        raise ConfigError(f"unknown sections {unknown}", unknown)
    base_name = parser.get("scenario", "preset", fallback="mmwave")
    if base_name not in PRESETS:
        raise ConfigError(f"unknown preset {base_name!r}", ["preset"])
    changes = {"name": path.stem}
    for section in parser.sections():
        for key, raw in parser.items(section):
            if key not in _SECTION_KEYS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]", [key])
            if key == "preset":
                continue
            name = _RENAMES.get((section, key), key)
            changes[name] = _coerce(name, raw)
    return replace(PRESETS[base_name], **changes).validate()


def scenario_dict(cfg: ScenarioConfig) -> dict:
    return dataclasses.asdict(cfg)
