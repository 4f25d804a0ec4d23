import json
from pathlib import Path

import pytest

from app.core.config import Settings
from app.core.exceptions import ConfigError
from app.schemas.experiment import LinearMsdConfig, TimeGrid
from app.services.config_service import load_experiment_config, parse_experiment_config
from tests.test_cli import SMALL_CONFIG

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def _config(**overrides):
    raw = json.loads(json.dumps(SMALL_CONFIG))
    for dotted, value in overrides.items():
        section, key = dotted.split("__")
        raw[section][key] = value
    return raw


def test_settings_read_prefixed_environment(monkeypatch):
    monkeypatch.setenv("PHMOR_SG_CONDITION_LIMIT", "1e8")
    monkeypatch.setenv("PHMOR_DEFAULT_JOBS", "4")
    local = Settings()
    assert local.SG_CONDITION_LIMIT == 1e8
    assert local.DEFAULT_JOBS == 4
    assert local.LOG_LEVEL == "INFO"


def test_valid_config_parses():
    config = parse_experiment_config(_config())
    assert config.model.type == "linear_msd"
    assert config.time.grid().n_steps == 30
    assert config.rom.orders() == [2, 3]


def test_dt_must_divide_interval():
    with pytest.raises(ConfigError) as excinfo:
        parse_experiment_config(_config(time__dt=0.07))
    assert "time" in str(excinfo.value)


def test_regularization_choices_are_exclusive():
    with pytest.raises(ConfigError):
        parse_experiment_config(_config(rom__lambda_rule={"scale": 0.2, "floor": 1e-3}))
    raw = _config()
    del raw["rom"]["lambda_reg"]
    with pytest.raises(ConfigError):
        parse_experiment_config(raw)


def test_unknown_method_and_repeated_methods():
    with pytest.raises(ConfigError):
        parse_experiment_config(_config(rom__methods=["GMG-POD", "QUAD"]))
    with pytest.raises(ConfigError):
        parse_experiment_config(_config(rom__methods=["SP1", "SP1"]))


def test_non_finite_numbers_rejected():
    with pytest.raises(ConfigError):
        parse_experiment_config(_config(input__amplitude=float("nan")))


def test_unknown_model_type():
    with pytest.raises(ConfigError) as excinfo:
        parse_experiment_config(_config(model__type="pendulum"))
    assert "model" in str(excinfo.value)


def test_parameter_list_length_checked():
    with pytest.raises(ValueError):
        LinearMsdConfig(n_masses=3, masses=[1.0, 2.0])


def test_time_grid_from_step():
    grid = TimeGrid.from_step(0.0, 100.0, 0.1)
    assert grid.n_steps == 1000
    assert grid.times()[-1] == pytest.approx(100.0)
    with pytest.raises(ValueError):
        TimeGrid.from_step(0.0, 1.0, 0.3)


def test_load_rejects_non_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{ not json")
    with pytest.raises(ConfigError) as excinfo:
        load_experiment_config(path)
    assert "not valid JSON" in str(excinfo.value)


def test_load_rejects_non_object(tmp_path):
    path = tmp_path / "list.json"
    path.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_experiment_config(path)


@pytest.mark.parametrize("name", ["linear_msd_constant", "linear_msd_sine",
                                  "nonlinear_msd_constant", "nonlinear_msd_sine"])
def test_shipped_configs_load(name):
    config = load_experiment_config(CONFIG_DIR / f"{name}.json")
    assert config.output.directory == f"results/{name}"
