"""Link-level simulator for multiuser mmWave MIMO-OFDM with hybrid precoding."""

from .config import PRESETS, ScenarioConfig, load_scenario

__all__ = ["PRESETS", "ScenarioConfig", "load_scenario"]
__version__ = "0.1.0"
