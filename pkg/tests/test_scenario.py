# tests/test_scenario.py
import json

import pytest

from core.errors import ConfigError
from core.moments import NoiseModel
from core.precoding import Scheme
from core.scenario import SystemConfig, load_scenario


def test_defaults_follow_reference_deployment():
    config = SystemConfig()
    assert (config.M, config.K, config.N, config.l_p) == (120, 20, 2, 10)
    assert config.rho_p == pytest.approx(100.0)
    assert config.rho_d == pytest.approx(10 ** 2.3)
    assert config.noise_power_dbm == pytest.approx(-174.0 + 63.0103 + 9.0, abs=1e-4)
    assert config.scheme is Scheme.MRT and config.noise_model is NoiseModel.CONSTANT


@pytest.mark.parametrize("changes, field", [
    ({"l_p": 30}, "l_p"),
    ({"scheme": "fzf", "N": 10}, "N"),
    ({"realizations": 0}, "realizations"),
    ({"M": 2.5}, "M"),
    ({"scheme": "zf"}, "scheme"),
    ({"noise_model": "white"}, "noise_model"),
    ({"seed": -1}, "seed"),
    ({"seed": 1.5}, "seed"),
    ({"seed": True}, "seed"),
    ({"focus_user": 1.0}, "focus_user"),
    ({"focus_user": 20}, "focus_user"),
    ({"area_m": (100.0, 0.0)}, "area_m"),
    ({"bandwidth_hz": 0.0}, "bandwidth_hz"),
])
def test_invalid_fields_are_named(changes, field):
    with pytest.raises(ConfigError) as info:
        SystemConfig(**changes)
    assert info.value.field == field


def test_enum_strings_are_coerced():
    config = SystemConfig.from_mapping({"scheme": "FZF", "N": 11, "noise_model": "Sampled"})
    assert config.scheme is Scheme.FZF
    assert config.noise_model is NoiseModel.SAMPLED


def test_unknown_key_is_rejected():
    with pytest.raises(ConfigError) as info:
        SystemConfig.from_mapping({"M": 10, "antenas": 4})
    assert info.value.field == "antenas"


def test_overrides_skip_none():
    config = SystemConfig(seed=3).with_overrides(seed=None, realizations=500, workers=None)
    assert config.seed == 3 and config.realizations == 500
    with pytest.raises(ConfigError):
        config.with_overrides(l_p=40)


def test_to_dict_round_trip():
    config = SystemConfig(M=10, K=4, N=5, l_p=2, scheme=Scheme.FZF, focus_user=1, area_m=(300.0, 200.0))
    data = config.to_dict()
    assert data["scheme"] == "fzf" and data["area_m"] == [300.0, 200.0]
    assert json.loads(json.dumps(data)) == data
    assert SystemConfig.from_mapping(data) == config


def test_load_scenario(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps({"M": 30, "K": 6, "l_p": 3, "scheme": "mrt", "seed": 42}), encoding="utf-8")
    config = load_scenario(str(path))
    assert (config.M, config.K, config.l_p, config.seed) == (30, 6, 3, 42)
    assert config.N == SystemConfig().N


def test_load_scenario_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_scenario(str(tmp_path / "missing.json"))
    broken = tmp_path / "broken.json"
    broken.write_text("{M: 3", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_scenario(str(broken))
    listing = tmp_path / "list.json"
    listing.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_scenario(str(listing))
