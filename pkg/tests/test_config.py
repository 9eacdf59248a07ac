import pytest

from v2xhybrid.config import PRESETS, ConfigError, ScenarioConfig, load_scenario, parse_snr_sweep, scenario_dict


def test_presets_table_values():
    mm, s6 = PRESETS["mmwave"], PRESETS["sub6"]
    assert (mm.carrier_hz, mm.bandwidth_hz, mm.n_bs, mm.n_ue, mm.clusters, mm.rays) == (28e9, 850e6, 32, 4, 4, 10)
    assert (s6.carrier_hz, s6.bandwidth_hz, s6.n_bs, s6.n_ue, s6.clusters, s6.rays) == (3.5e9, 150e6, 16, 2, 10, 20)
    assert (mm.n_subcarriers, mm.cp_len, s6.n_subcarriers, s6.cp_len) == (16, 4, 32, 8)
    assert PRESETS["mode2"].adc_power_w == 0.4 and PRESETS["mode4"].n_bs == 128
    for cfg in PRESETS.values():
        cfg.validate()


def test_snr_sweep_parsing():
    assert parse_snr_sweep("-25:5:10") == (-25, -20, -15, -10, -5, 0, 5, 10)
    assert parse_snr_sweep("0, 4,8") == (0, 4, 8)
    for bad in ("1:0:5", "5:1:0", "a:b:c", "x,y"):
        with pytest.raises(ConfigError):
            parse_snr_sweep(bad)


def test_more_users_than_rf_chains_rejected():
    with pytest.raises(ConfigError) as err:
        PRESETS["mmwave"].with_(n_users=4)
    assert "n_users" in err.value.fields


@pytest.mark.parametrize("change,field", [
    ({"cp_len": 2}, "cp_len"),
    ({"n_taps": 3, "cp_len": 4}, "n_taps"),
    ({"variant": "v3"}, "variant"),
    ({"connection": "mesh"}, "connection"),
    ({"n_rf": 3, "n_users": 2, "connection": "partially"}, "connection"),
    ({"rolloff": 1.5}, "rolloff"),
    ({"snr_db": ()}, "snr_db"),
    ({"trials": 0}, "trials"),
])
def test_validation_names_fields(change, field):
    with pytest.raises(ConfigError) as err:
        ScenarioConfig().with_(**change)
    assert field in err.value.fields


def test_load_preset_and_object():
    assert load_scenario("sub6") is PRESETS["sub6"]
    cfg = ScenarioConfig(n_users=1)
    assert load_scenario(cfg) is cfg


def test_load_file(tmp_path):
    path = tmp_path / "busy.ini"
    path.write_text(
        "[scenario]\npreset = sub6\nn_users = 2\nconnection = partially ; sub-arrays\n"
        "[bits]\nbb = 6\n[simulation]\nvariant = v2-rate\nsnr_db = 0:5:10\ntrials = 7\nseed = 3\n"
        "carry_gain = no\n")
    cfg = load_scenario(path)
    assert cfg.name == "busy" and cfg.carrier_hz == 3.5e9 and cfg.connection == "partially"
    assert (cfg.bits_bb, cfg.variant, cfg.snr_db, cfg.trials, cfg.master_seed) == (6, "v2-rate", (0, 5, 10), 7, 3)
    assert cfg.carry_gain is False
    assert scenario_dict(cfg)["n_users"] == 2


@pytest.mark.parametrize("text", [
    "[scenario]\nwarp = 9\n",
    "[extras]\nx = 1\n",
    "[simulation]\nbits_bb = 3\n",
    "[scenario]\npreset = lte\n",
    "[scenario]\nn_bs = many\n",
])
def test_bad_files_rejected(tmp_path, text):
    path = tmp_path / "bad.ini"
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_scenario(path)


def test_missing_source():
    with pytest.raises(ConfigError):
        load_scenario("no-such-preset")


EXPECTED = {
    "mmwave": dict(carrier_hz=28e9, bandwidth_hz=850e6, n_ue=4, n_bs=32, spacing_ratio=0.5, clusters=4, rays=10,
                   angular_spread_deg=2.0, pathloss_exponent=3.0, n_subcarriers=16, cp_len=4, n_rf=2,
                   n_users=2, rolloff=1.0, velocity_kmh=20.0),
    "sub6": dict(carrier_hz=3.5e9, bandwidth_hz=150e6, n_ue=2, n_bs=16, spacing_ratio=0.5, clusters=10, rays=20,
                 angular_spread_deg=2.0, pathloss_exponent=3.0, n_subcarriers=32, cp_len=8, n_rf=2,
                 n_users=2, rolloff=1.0, velocity_kmh=20.0),
    "mode1": dict(carrier_hz=28e9, bandwidth_hz=850e6, adc_power_w=0.25, n_bs=32),
    "mode2": dict(carrier_hz=39e9, bandwidth_hz=1.4e9, adc_power_w=0.40, n_bs=64),
    "mode3": dict(carrier_hz=39e9, bandwidth_hz=1.6e9, adc_power_w=0.45, n_bs=64),
    "mode4": dict(carrier_hz=73e9, bandwidth_hz=2e9, adc_power_w=0.55, n_bs=128),
}


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_preset_integrity(name):
    cfg = PRESETS[name]
    for field, value in EXPECTED[name].items():
        assert getattr(cfg, field) == value, field
    assert cfg.cp_len == cfg.n_subcarriers // 4
