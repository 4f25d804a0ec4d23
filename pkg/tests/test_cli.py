import json

import pytest

from app.main import run_cli

SMALL_CONFIG = {
    "model": {"type": "linear_msd", "n_masses": 4, "masses": 2.0, "stiffnesses": 1.0, "dampers": 1.0},
    "time": {"t0": 0.0, "t_end": 3.0, "dt": 0.1},
    "input": {"type": "sine", "amplitude": 0.1, "frequency": 1.0},
    "rom": {"methods": ["SP1", "GMG-POD", "GMG-QM"], "r_min": 2, "r_max": 3, "r_n": 1,
            "lambda_reg": 1e-3, "energy_r": 3},
    "newton": {"tol": 1e-10, "max_iter": 10},
}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps(SMALL_CONFIG))
    return path


def test_validate_passes_on_linear_chain(config_path, capsys):
    assert run_cli(["validate", "--config", str(config_path), "--samples", "10"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out
    assert "FAIL" not in out


def test_missing_config_exits_with_config_error(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    assert run_cli(["validate", "--config", str(missing)]) == 1
    assert str(missing) in capsys.readouterr().err


def test_invalid_field_is_named(tmp_path, capsys):
    bad = json.loads(json.dumps(SMALL_CONFIG))
    bad["time"]["dt"] = 0.07
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    assert run_cli(["run-experiment", "--config", str(path)]) == 1
    assert "time" in capsys.readouterr().err


def test_unknown_key_is_rejected(tmp_path, capsys):
    bad = json.loads(json.dumps(SMALL_CONFIG))
    bad["rom"]["lambda"] = 1.0
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    assert run_cli(["validate", "--config", str(path)]) == 1
    assert "rom.lambda" in capsys.readouterr().err


def test_run_experiment_is_byte_reproducible(config_path, tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    assert run_cli(["run-experiment", "--config", str(config_path), "--out", str(first)]) == 0
    assert run_cli(["run-experiment", "--config", str(config_path), "--out", str(second), "--jobs", "2"]) == 0
    for name in ("errors.csv", "energy.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()

    lines = (first / "errors.csv").read_text().splitlines()
    assert lines[0] == "method,r,e_x_red,e_x_proj,e_x_lowerbound,e_y"
    assert len(lines) == 1 + 3 * 2
    assert [line.split(",")[0] for line in lines[1:]] == ["SP1", "SP1", "GMG-POD", "GMG-POD", "GMG-QM", "GMG-QM"]

    energy = (first / "energy.csv").read_text().splitlines()
    assert energy[0] == "t,error_energy_fom,error_energy_SP1,error_energy_GMG-POD,error_energy_GMG-QM"
    assert len(energy) == 1 + 31


def test_simulate_fom_writes_trajectory(config_path, tmp_path):
    out = tmp_path / "fom"
    assert run_cli(["simulate-fom", "--config", str(config_path), "--out", str(out)]) == 0
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[0].startswith("t,x_0,x_1")
    assert lines[0].endswith("x_7,y_0")
    assert len(lines) == 1 + 31
    assert lines[1].split(",")[0] == "0.0000000000000000e+00"


def test_export_embedding_writes_tables(config_path, tmp_path):
    out = tmp_path / "tables"
    assert run_cli(["export-embedding", "--config", str(config_path), "--out", str(out), "--r", "3"]) == 0
    names = {p.name for p in out.iterdir()}
    for expected in ("r3_gmg_pod_B.csv", "r3_gmg_pod_Vbar.csv", "r3_gmg_pod_J_red.csv", "r3_gmg_pod_R_red.csv",
                     "r3_gmg_qm_B.csv", "r3_gmg_qm_V1.csv", "r3_gmg_qm_V2.csv", "r3_gmg_qm_M.csv"):
        assert expected in names


def test_unwritable_output_exits_with_io_error(config_path, tmp_path, capsys):
    blocker = tmp_path / "blocker"
    blocker.write_text("file in the way")
    assert run_cli(["simulate-fom", "--config", str(config_path), "--out", str(blocker)]) == 3
    assert str(blocker) in capsys.readouterr().err
