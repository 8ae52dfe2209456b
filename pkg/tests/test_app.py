# tests/test_app.py
import json

import pandas as pd
import pytest

from cfmimo_app import EXIT_OK, EXIT_TOOLKIT_ERROR, EXIT_UNEXPECTED, CFMimoApp, main


@pytest.fixture
def scenario(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps({"M": 6, "K": 3, "N": 2, "l_p": 2, "seed": 1, "workers": 2}), encoding="utf-8")
    return str(path)


def test_overrides_reach_the_configuration(scenario):
    app = CFMimoApp(["simulate", scenario, "--seed", "9", "--realizations", "40", "--quiet"])
    config = app._config(app.args.scenario)
    assert (config.seed, config.realizations, config.M) == (9, 40, 6)


def test_simulate_writes_report(scenario, tmp_path, capsys):
    out = tmp_path / "report" / "run.json"
    code = main(["simulate", scenario, "--realizations", "50", "--out", str(out), "--quiet"])
    assert code == EXIT_OK
    assert "focus user" in capsys.readouterr().out
    data = json.loads(out.read_text(encoding="utf-8"))
    assert data["realizations"] == 50 and len(data["users"]) == 3
    users = pd.read_csv(tmp_path / "report" / "run_users.csv")
    assert list(users["user"]) == [0, 1, 2]


def test_validate_writes_summary(scenario, tmp_path):
    out = tmp_path / "validation.json"
    assert main(["validate", scenario, "--realizations", "60", "--out", str(out), "--quiet"]) == EXIT_OK
    data = json.loads(out.read_text(encoding="utf-8"))
    assert "all_passed" in data and data["criteria"]


def test_invalid_scenario_is_a_toolkit_error(tmp_path):
    path = tmp_path / "fzf.json"
    path.write_text(json.dumps({"K": 3, "l_p": 2, "N": 2, "scheme": "fzf"}), encoding="utf-8")
    assert main(["simulate", str(path), "--quiet"]) == EXIT_TOOLKIT_ERROR


def test_unknown_figure_is_a_toolkit_error(tmp_path):
    assert main(["reproduce", "Fig99", str(tmp_path), "--quiet"]) == EXIT_TOOLKIT_ERROR


def test_missing_scenario_is_unexpected(tmp_path):
    assert main(["validate", str(tmp_path / "missing.json"), "--quiet"]) == EXIT_UNEXPECTED


def test_command_is_required():
    with pytest.raises(SystemExit):
        CFMimoApp([])


def test_float_seed_is_a_toolkit_error(tmp_path):
    path = tmp_path / "float_seed.json"
    path.write_text(json.dumps({"M": 6, "K": 3, "N": 2, "l_p": 2, "seed": 1.5}), encoding="utf-8")
    assert main(["simulate", str(path), "--quiet"]) == EXIT_TOOLKIT_ERROR
