import dataclasses
from pathlib import Path

import numpy as np
import pytest

from app.core.exceptions import ConfigError, GridMismatchError
from app.embeddings import build_linear_embedding, build_quadratic_embedding
from app.schemas.experiment import (
    ExperimentConfig,
    InputSection,
    LambdaRule,
    LinearMsdConfig,
    NewtonConfig,
    RomSection,
    TimeGrid,
)
from app.schemas.results import ErrorRow, MetricsReport
from app.benchmarks.linear_msd import build_linear_msd
from app.services.bench import (
    build_rom,
    check_error_ordering,
    compute_metrics,
    energy_balance_error,
    energy_balance_series,
    prepare_sweep,
    projection_error,
    regularization_for,
    run_experiment,
    simulate_fom,
)
from app.services.config_service import load_experiment_config
from app.services.integrate import Trajectory
from app.services.ph_core import InputSignal, PHSystem, SplitHamiltonian

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def _trajectory(states, outputs, t_end=1.0):
    grid = TimeGrid(t0=0.0, t_end=t_end, n_steps=states.shape[1] - 1)
    return Trajectory(grid=grid, states=states, outputs=outputs)


def test_exact_reduction_gives_equal_reduction_and_projection_errors(rng):
    X = rng.standard_normal((8, 11))
    Y = rng.standard_normal((1, 11))
    emb = build_linear_embedding(X, np.eye(8)[:, :1], 3)
    fom = _trajectory(X, Y)
    rom = _trajectory(emb.reduce(X), Y)
    report = compute_metrics(fom, rom, emb)
    assert report.e_x_red == pytest.approx(report.e_x_proj, rel=1e-12)
    assert report.e_y == 0.0
    assert report.e_x_lowerbound is None


def test_snapshots_inside_subspace_have_zero_projection_error(rng):
    basis = np.linalg.qr(rng.standard_normal((8, 3)))[0]
    X = basis @ rng.standard_normal((3, 11))
    emb = build_linear_embedding(X, basis[:, :1], 3)
    assert projection_error(X, emb) <= 1e-12


def test_metrics_match_direct_summation(rng):
    X = rng.standard_normal((6, 9))
    Y = rng.standard_normal((1, 9))
    B = np.eye(6)[:, :1]
    emb = build_quadratic_embedding(X, B, r=3, r_n=1, lambda_reg=1e-2)
    X_red = rng.standard_normal((3, 9))
    Y_red = Y + 0.01 * rng.standard_normal((1, 9))
    report = compute_metrics(_trajectory(X, Y), _trajectory(X_red, Y_red), emb)

    num_red = num_proj = num_low = den = num_y = den_y = 0.0
    P = np.eye(6) - B @ np.linalg.pinv(B) - emb.V1 @ emb.V1.T - emb.V2 @ emb.V2.T
    for i in range(1, 9):
        x = X[:, i]
        num_red += np.sum((x - emb.evaluate(X_red[:, i])) ** 2)
        num_proj += np.sum((x - emb.evaluate(emb.reduce(x))) ** 2)
        num_low += np.sum((P @ x) ** 2)
        den += np.sum(x ** 2)
        num_y += np.sum((Y[:, i] - Y_red[:, i]) ** 2)
        den_y += np.sum(Y[:, i] ** 2)
    assert report.e_x_red == pytest.approx(np.sqrt(num_red / den), rel=1e-10)
    assert report.e_x_proj == pytest.approx(np.sqrt(num_proj / den), rel=1e-10)
    assert report.e_x_lowerbound == pytest.approx(np.sqrt(num_low / den), rel=1e-8)
    assert report.e_y == pytest.approx(np.sqrt(num_y / den_y), rel=1e-10)
    assert report.e_x_lowerbound <= report.e_x_proj + 1e-12


def test_compute_metrics_rejects_grid_mismatch(rng):
    X = rng.standard_normal((4, 6))
    emb = build_linear_embedding(X, np.eye(4)[:, :1], 2)
    with pytest.raises(GridMismatchError):
        compute_metrics(_trajectory(X, X[:1]), _trajectory(emb.reduce(X), X[:1], t_end=2.0), emb)


def _oscillator(damping: float) -> PHSystem:
    return PHSystem(J=np.array([[0.0, 1.0], [-1.0, 0.0]]), R=np.diag([0.0, damping]), B=np.array([[0.0], [1.0]]),
                    H=SplitHamiltonian.quadratic(np.eye(2)), x0=np.array([1.0, 0.0]), name="oscillator")


def test_energy_balance_of_lossless_unforced_system():
    sys = _oscillator(0.0)
    u = InputSignal.zero(1)
    traj = simulate_fom(sys, u, TimeGrid.from_step(0.0, 10.0, 0.1), NewtonConfig(tol=1e-13, max_iter=10))
    assert energy_balance_error(sys, traj, u, 10.0) <= 1e-10
    assert np.max(energy_balance_series(sys, traj, u)) <= 1e-10


def test_energy_balance_error_is_second_order_in_dt():
    sys = _oscillator(1.0)
    u = InputSignal.sine(1.0, 1.0, 1)
    cfg = NewtonConfig(tol=1e-13, max_iter=10)
    errors = []
    for dt in (0.1, 0.05):
        traj = simulate_fom(sys, u, TimeGrid.from_step(0.0, 7.0, dt), cfg)
        errors.append(energy_balance_error(sys, traj, u, 7.0))
    assert 2.5 < errors[0] / errors[1] < 5.5


def test_energy_balance_error_requires_grid_point():
    sys = _oscillator(1.0)
    u = InputSignal.zero(1)
    traj = simulate_fom(sys, u, TimeGrid.from_step(0.0, 1.0, 0.1), NewtonConfig())
    with pytest.raises(GridMismatchError):
        energy_balance_error(sys, traj, u, 0.55)


def test_regularization_rule(linear_run):
    fixed = RomSection(methods=["GMG-QM"], r_min=4, r_max=4, lambda_reg=1e-3)
    assert regularization_for(fixed, linear_run.X, linear_run.sys.B, 4) == 1e-3
    rule = RomSection(methods=["GMG-QM"], r_min=4, r_max=4, lambda_rule=LambdaRule(scale=0.2, floor=1e-30))
    e_proj = projection_error(linear_run.X, build_linear_embedding(linear_run.X, linear_run.sys.B, 4))
    assert regularization_for(rule, linear_run.X, linear_run.sys.B, 4) == pytest.approx(0.2 * e_proj)
    floored = RomSection(methods=["GMG-QM"], r_min=4, r_max=4, lambda_rule=LambdaRule(scale=1e-30, floor=0.5))
    assert regularization_for(floored, linear_run.X, linear_run.sys.B, 4) == 0.5


def _small_experiment(r_min=2, r_max=4) -> ExperimentConfig:
    return ExperimentConfig.model_validate({
        "model": {"type": "linear_msd", "n_masses": 5, "masses": 2.0, "stiffnesses": 1.0, "dampers": 1.0},
        "time": {"t0": 0.0, "t_end": 5.0, "dt": 0.1},
        "input": {"type": "sine", "amplitude": 0.1},
        "rom": {"methods": ["SP1", "GMG-POD", "GMG-QM"], "r_min": r_min, "r_max": r_max, "r_n": 1,
                "lambda_reg": 1e-3, "energy_r": 4},
    })


def test_run_experiment_is_ordered_and_independent_of_jobs():
    cfg = _small_experiment()
    serial = run_experiment(cfg, jobs=1)
    parallel = run_experiment(cfg, jobs=3)
    keys = [(row.method, row.r) for row in serial.rows]
    assert keys == [(m, r) for m in ("SP1", "GMG-POD", "GMG-QM") for r in (2, 3, 4)]
    assert serial.error_table() == parallel.error_table()
    header, body = serial.energy_table(["SP1", "GMG-POD", "GMG-QM"])
    assert header == ["t", "error_energy_fom", "error_energy_SP1", "error_energy_GMG-POD", "error_energy_GMG-QM"]
    assert len(body) == 51
    for row in serial.rows:
        if not row.failed and row.method != "GMG-QM":
            assert row.metrics.e_x_proj <= row.metrics.e_x_red + 1e-12
        if not row.failed and row.method == "GMG-QM":
            assert row.metrics.e_x_lowerbound <= row.metrics.e_x_proj + 1e-12


def test_run_experiment_with_empty_order_range():
    result = run_experiment(_small_experiment(r_min=5, r_max=4))
    assert result.rows == []
    assert result.error_table()[1] == []


def test_check_error_ordering():
    def row(method, r, e):
        return ErrorRow(method=method, r=r, metrics=MetricsReport(e_x_red=e, e_x_proj=e, e_y=e))

    rows = [row("A", 4, 1.0), row("B", 4, 2.0), row("A", 6, 3.0), row("B", 6, 2.0),
            row("A", 8, 2.05), row("B", 8, 2.0), ErrorRow(method="A", r=10, failure="boom"), row("B", 10, 1.0)]
    violations = check_error_ordering(rows, "A", "B")
    assert len(violations) == 1
    assert violations[0].startswith("r=6")


def test_linear_chain_builder_used_by_experiment():
    sys = build_linear_msd(LinearMsdConfig(n_masses=5))
    assert sys.N == 10 and sys.m == 1
    u = InputSignal.from_section(InputSection(type="constant", amplitude=0.1), sys.m)
    np.testing.assert_array_equal(u(3.0), [0.1])


def test_projection_error_never_increases_with_order(linear_run):
    errors = [projection_error(linear_run.X, build_linear_embedding(linear_run.X, linear_run.sys.B, r))
              for r in range(2, 11)]
    for smaller, larger in zip(errors, errors[1:]):
        assert larger <= smaller + 1e-12


def test_energy_balance_of_unforced_linear_chain(linear_msd_small):
    x0 = np.zeros(linear_msd_small.N)
    x0[0] = 0.1
    sys = dataclasses.replace(linear_msd_small, x0=x0)
    u = InputSignal.zero(sys.m)
    grid = TimeGrid.from_step(0.0, 100.0, 0.1)
    assert grid.n_steps == 1000
    traj = simulate_fom(sys, u, grid, NewtonConfig(tol=1e-12, max_iter=10))
    series = energy_balance_series(sys, traj, u)
    assert sys.hamiltonian(traj.states[:, -1]) < sys.hamiltonian(x0)
    assert np.max(series) <= 1e-6


def test_unknown_method_is_a_config_error():
    cfg = _small_experiment()
    data = prepare_sweep(cfg)
    with pytest.raises(ConfigError) as excinfo:
        build_rom("QUAD", data, 2)
    assert excinfo.value.exit_code == 1
    assert excinfo.value.operation == "bench.build_rom"
    assert "QUAD" in str(excinfo.value)


def _energy_within(result, methods, bound):
    for key in ["fom"] + list(methods):
        assert key in result.energy
        assert np.max(result.energy[key]) <= bound


@pytest.mark.slow
@pytest.mark.parametrize("name", ["linear_msd_constant", "linear_msd_sine"])
def test_linear_chain_at_full_scale(name):
    cfg = load_experiment_config(CONFIG_DIR / f"{name}.json")
    result = run_experiment(cfg, jobs=4)
    assert not any(row.failed for row in result.rows)
    selected = [row for row in result.rows if row.r in (4, 8, 12, 16, 20)]
    assert check_error_ordering(selected, "GMG-QM", "GMG-POD") == []
    assert check_error_ordering(selected, "GMG-POD", "SP1") == []
    by_key = {(row.method, row.r): row for row in result.rows}
    for method in cfg.rom.methods:
        assert by_key[(method, 20)].metrics.e_x_red * 10 <= by_key[(method, 4)].metrics.e_x_red
    for row in result.rows:
        if row.method == "GMG-QM":
            assert row.metrics.e_x_lowerbound <= row.metrics.e_x_proj + 1e-12
        else:
            assert row.metrics.e_x_proj <= row.metrics.e_x_red + 1e-12
    assert result.energy_r == 16
    _energy_within(result, cfg.rom.methods, 1e-4)


@pytest.mark.slow
@pytest.mark.parametrize("name", ["nonlinear_msd_constant", "nonlinear_msd_sine"])
def test_nonlinear_chain_at_full_scale(name):
    cfg = load_experiment_config(CONFIG_DIR / f"{name}.json")
    assert cfg.model.n_masses == 500
    result = run_experiment(cfg, jobs=4)
    assert not any(row.failed for row in result.rows)
    assert check_error_ordering(result.rows, "GMG-POD", "SP2", metric="e_y") == []
    assert check_error_ordering(result.rows, "GMG-QM", "GMG-POD") == []
    by_key = {(row.method, row.r): row for row in result.rows}
    for r in cfg.rom.orders():
        sp2 = by_key[("SP2", r)].metrics.e_x_red
        pod = by_key[("GMG-POD", r)].metrics.e_x_red
        assert 0.5 * pod <= sp2 <= 2.0 * pod
    _energy_within(result, cfg.rom.methods, 1e-4)


@pytest.mark.slow
@pytest.mark.parametrize("name, methods", [
    ("linear_msd_constant", ["SP1", "SP2", "GMG-POD", "GMG-QM"]),
    ("linear_msd_sine", ["SP1", "SP2", "GMG-POD", "GMG-QM"]),
    ("nonlinear_msd_constant", ["SP2", "GMG-POD", "GMG-QM"]),
    ("nonlinear_msd_sine", ["SP2", "GMG-POD", "GMG-QM"]),
])
def test_reduced_structure_holds_across_orders(name, methods):
    cfg = load_experiment_config(CONFIG_DIR / f"{name}.json")
    cfg = cfg.model_copy(update={"rom": cfg.rom.model_copy(update={"methods": methods})})
    data = prepare_sweep(cfg)
    rng = np.random.default_rng(7)
    for method in methods:
        for r in range(6, 21):
            failed = [c.name for c in build_rom(method, data, r).structure_checks(rng, n_samples=50)
                      if not c.passed]
            assert failed == [], f"{method} r={r}: {failed}"
