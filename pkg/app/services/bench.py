"""Error metrics, energy balance and the (method, r) experiment sweep."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid

from app.benchmarks.registry import build_system
from app.core.exceptions import ConfigError, GridMismatchError, PhMorException
from app.embeddings.base_embedding import BaseEmbedding
from app.embeddings.linear_embedding import build_linear_embedding
from app.embeddings.quadratic_embedding import QuadraticEmbedding, build_quadratic_embedding
from app.schemas.experiment import ExperimentConfig, NewtonConfig, RomSection, TimeGrid
from app.schemas.results import ErrorRow, MetricsReport
from app.services.deim import DeimModel, build_deim
from app.services.integrate import (
    Trajectory,
    finite_difference_jacobian,
    gradient_snapshots,
    simulate,
    snapshot_matrices,
)
from app.services.ph_core import InputSignal, PHSystem
from app.services.rom import (
    GmgContext,
    LinearReducedPHSystem,
    ReducedPHSystem,
    build_gmg_pod_rom,
    build_gmg_qm_rom,
    build_sp1_rom,
    build_sp2_rom,
)

__all__ = [
    "SweepData",
    "ExperimentResult",
    "simulate_fom",
    "simulate_rom",
    "compute_metrics",
    "projection_error",
    "energy_balance_series",
    "energy_balance_error",
    "regularization_for",
    "build_rom",
    "run_experiment",
    "check_error_ordering",
]

# Configure logging
logger = logging.getLogger(__name__)

EnergyModel = Union[PHSystem, ReducedPHSystem]


def _relative(num: float, den: float) -> float:
    if den > 0.0:
        return float(np.sqrt(num / den))
    return 0.0 if num == 0.0 else float("inf")


def _sq_norm_sum(A: np.ndarray) -> float:
    """Sum of squared column norms over i = 1..n_t (the initial column is excluded)."""
    return float(np.sum(A[:, 1:] ** 2))


def simulate_fom(sys: PHSystem, u: InputSignal, grid: TimeGrid, cfg: NewtonConfig) -> Trajectory:
    """Full-order simulation with the analytic Jacobian (J - R)(Q + Hessian of p)."""
    def f(t: float, x: np.ndarray) -> np.ndarray:
        return sys.rhs(x, u(t))

    def jac(t: float, x: np.ndarray) -> np.ndarray:
        return sys.rhs_jacobian(x)

    traj = simulate(f, jac, sys.x0, grid, cfg, sys.output, constant_jacobian=sys.H.is_quadratic)
    logger.info(f"Full-order model {sys.name} simulated over {grid.n_steps} steps")
    return traj


def simulate_rom(rom: ReducedPHSystem, u: InputSignal, grid: TimeGrid, cfg: NewtonConfig) -> Trajectory:
    """Reduced simulation with a central finite-difference Newton Jacobian."""
    def f(t: float, x: np.ndarray) -> np.ndarray:
        return rom.rhs(x, u(t))

    constant = isinstance(rom, LinearReducedPHSystem) and rom.reduced_hamiltonian.H.is_quadratic
    return simulate(f, finite_difference_jacobian(f), rom.x0, grid, cfg, rom.output, constant_jacobian=constant)


def compute_metrics(fom: Trajectory, rom_traj: Trajectory, emb: BaseEmbedding) -> MetricsReport:
    """
    Relative state and output errors of a reduced simulation.

    All sums run over the grid points after the initial one.

    Args:
        fom: Full-order trajectory
        rom_traj: Reduced trajectory on the same grid
        emb: Embedding used by the reduced model

    Returns:
        MetricsReport; e_x_lowerbound is set for quadratic embeddings only

    Raises:
        GridMismatchError: if the trajectories live on different grids
    """
    if fom.grid != rom_traj.grid or fom.n_points != rom_traj.n_points:
        raise GridMismatchError(f"full-order grid {fom.grid} differs from reduced grid {rom_traj.grid}",
                                operation="bench.compute_metrics")
    X = fom.states
    den_x = _sq_norm_sum(X)
    X_red = emb.evaluate_columns(rom_traj.states)
    X_proj = emb.evaluate_columns(emb.reduce(X))

    lowerbound = None
    if isinstance(emb, QuadraticEmbedding):
        lowerbound = _relative(_sq_norm_sum(emb.complement_residual(X)), den_x)

    return MetricsReport(
        e_x_red=_relative(_sq_norm_sum(X - X_red), den_x),
        e_x_proj=_relative(_sq_norm_sum(X - X_proj), den_x),
        e_x_lowerbound=lowerbound,
        e_y=_relative(_sq_norm_sum(fom.outputs - rom_traj.outputs), _sq_norm_sum(fom.outputs)),
    )


def projection_error(X: np.ndarray, emb: BaseEmbedding) -> float:
    """Relative error of phi(rho(x)) over the snapshots after the first."""
    return _relative(_sq_norm_sum(X - emb.evaluate_columns(emb.reduce(X))), _sq_norm_sum(X))


def energy_balance_series(model: EnergyModel, traj: Trajectory, u: InputSignal) -> np.ndarray:
    """
    |H(x(t)) - H(x(0)) - int y^T u dt + int (R grad H)^T grad H dt| at every grid point.

    Both integrals use the composite trapezoid rule on the trajectory grid.
    """
    times = traj.times
    states = traj.states
    energy = np.array([model.hamiltonian(states[:, i]) for i in range(traj.n_points)])
    supply = np.array([traj.outputs[:, i] @ u(t) for i, t in enumerate(times)])
    dissipation = np.array([model.dissipation_rate(states[:, i]) for i in range(traj.n_points)])
    balance = (energy - energy[0]
               - cumulative_trapezoid(supply, times, initial=0.0)
               + cumulative_trapezoid(dissipation, times, initial=0.0))
    return np.abs(balance)


def energy_balance_error(model: EnergyModel, traj: Trajectory, u: InputSignal, T: float) -> float:
    """
    Energy balance residual at time T.

    Raises:
        GridMismatchError: if T is not a grid point
    """
    grid = traj.grid
    position = (T - grid.t0) / grid.dt
    index = int(round(position))
    if index < 0 or index > grid.n_steps or abs(position - index) > 1e-9 * max(1.0, position):
        raise GridMismatchError(f"T={T} is not on the grid", operation="bench.energy_balance_error")
    return float(energy_balance_series(model, traj, u)[index])


def regularization_for(rom_cfg: RomSection, X: np.ndarray, B: np.ndarray, r: int) -> float:
    """Fixed lambda_reg, or max(scale * e_proj(r), floor) of the port-aligned linear embedding."""
    if rom_cfg.lambda_reg is not None:
        return rom_cfg.lambda_reg
    rule = rom_cfg.lambda_rule
    e_proj = projection_error(X, build_linear_embedding(X, B, r))
    lambda_reg = max(rule.scale * e_proj, rule.floor)
    logger.debug(f"r={r}: e_proj={e_proj:.3e}, lambda_reg={lambda_reg:.3e}")
    return lambda_reg


@dataclass
class SweepData:
    """Read-only data shared by every sweep cell."""
    sys: PHSystem
    u: InputSignal
    fom: Trajectory
    X: np.ndarray
    X_gradH: Optional[np.ndarray]
    deim: Optional[DeimModel]
    ctx: GmgContext
    rom_cfg: RomSection
    newton: NewtonConfig


def _gmg_pod(data: SweepData, r: int) -> ReducedPHSystem:
    return build_gmg_pod_rom(data.sys, build_linear_embedding(data.X, data.sys.B, r), data.deim, ctx=data.ctx)


def _gmg_qm(data: SweepData, r: int) -> ReducedPHSystem:
    lambda_reg = regularization_for(data.rom_cfg, data.X, data.sys.B, r)
    emb = build_quadratic_embedding(data.X, data.sys.B, r, data.rom_cfg.r_n, lambda_reg)
    return build_gmg_qm_rom(data.sys, emb, data.deim, ctx=data.ctx)


def _sp1(data: SweepData, r: int) -> ReducedPHSystem:
    return build_sp1_rom(data.sys, data.X, r)


def _sp2(data: SweepData, r: int) -> ReducedPHSystem:
    return build_sp2_rom(data.sys, data.X, data.X_gradH, r, deim=data.deim)


def get_rom_builder(method: str) -> Optional[Callable[[SweepData, int], ReducedPHSystem]]:
    """
    Get a reduced-model builder by method name

    Args:
        method: One of SP1, SP2, GMG-POD, GMG-QM

    Returns:
        Builder taking the shared sweep data and r, or None if not found
    """
    rom_builders = {
        "SP1": _sp1,
        "SP2": _sp2,
        "GMG-POD": _gmg_pod,
        "GMG-QM": _gmg_qm,
    }

    return rom_builders.get(method)


def build_rom(method: str, data: SweepData, r: int) -> ReducedPHSystem:
    builder = get_rom_builder(method)
    if builder is None:
        raise ConfigError(f"unknown reduction method '{method}'", operation="bench.build_rom")
    return builder(data, r)


@dataclass
class ExperimentResult:
    """Rows of the error table plus the energy-balance curves"""
    rows: List[ErrorRow]
    times: np.ndarray
    energy: Dict[str, np.ndarray] = field(default_factory=dict)
    energy_r: Optional[int] = None

    def error_table(self) -> Tuple[List[str], List[list]]:
        header = ["method", "r", "e_x_red", "e_x_proj", "e_x_lowerbound", "e_y"]
        body = []
        for row in self.rows:
            m = row.metrics
            if m is None:
                body.append([row.method, row.r, None, None, None, None])
            else:
                body.append([row.method, row.r, m.e_x_red, m.e_x_proj, m.e_x_lowerbound, m.e_y])
        return header, body

    def energy_table(self, methods: List[str]) -> Tuple[List[str], List[list]]:
        """Columns t, FOM, then one column per method; missing series give empty cells."""
        header = ["t", "error_energy_fom"] + [f"error_energy_{method}" for method in methods]
        columns = [self.energy.get("fom")] + [self.energy.get(method) for method in methods]
        body = []
        for i, t in enumerate(self.times):
            body.append([float(t)] + [None if col is None else float(col[i]) for col in columns])
        return header, body


def _run_cell(data: SweepData, method: str, r: int, energy_r: int) -> Tuple[ErrorRow, Optional[np.ndarray]]:
    try:
        rom = build_rom(method, data, r)
        rom_traj = simulate_rom(rom, data.u, data.fom.grid, data.newton)
        metrics = compute_metrics(data.fom, rom_traj, rom.embedding)
        series = None
        if r == energy_r:
            series = energy_balance_series(rom, rom_traj, data.u)
            metrics = metrics.model_copy(update={"energy_error_series": series.tolist()})
        logger.info(f"{method} r={r}: e_x_red={metrics.e_x_red:.3e}, e_y={metrics.e_y:.3e}")
        return ErrorRow(method=method, r=r, metrics=metrics), series
    except PhMorException as e:
        logger.warning(f"{method} r={r} failed: {str(e)}")
        return ErrorRow(method=method, r=r, failure=str(e)), None


def prepare_sweep(cfg: ExperimentConfig) -> SweepData:
    """Simulate the full-order model once and compute everything the cells share."""
    sys = build_system(cfg.model)
    u = InputSignal.from_section(cfg.input, sys.m)
    fom = simulate_fom(sys, u, cfg.time.grid(), cfg.newton)
    X, X_Q = snapshot_matrices(sys, fom)
    X_gradH = gradient_snapshots(sys, fom) if "SP2" in cfg.rom.methods else None
    deim = None if sys.H.is_quadratic else build_deim(sys.H, X_Q, cfg.rom.deim_tol)
    return SweepData(sys=sys, u=u, fom=fom, X=X, X_gradH=X_gradH, deim=deim,
                     ctx=GmgContext.from_system(sys), rom_cfg=cfg.rom, newton=cfg.newton)


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """
    Run the full sweep over methods and reduced orders.

    Cells are independent and may run on ``jobs`` threads; rows come back ordered by
    method (config order) and then r. A failing cell is recorded with its error
    message and does not stop the sweep.
    """
    data = prepare_sweep(cfg)
    energy_r = cfg.rom.energy_r
    cells = [(method, r) for method in cfg.rom.methods for r in cfg.rom.orders()]
    logger.info(f"Running {len(cells)} sweep cells on {jobs} worker(s)")

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as executor:
        outcomes = list(executor.map(lambda cell: _run_cell(data, cell[0], cell[1], energy_r), cells))

    result = ExperimentResult(rows=[row for row, _ in outcomes], times=data.fom.times, energy_r=energy_r)
    result.energy["fom"] = energy_balance_series(data.sys, data.fom, data.u)
    for (method, _), (_, series) in zip(cells, outcomes):
        if series is not None:
            result.energy[method] = series
    failures = sum(row.failed for row in result.rows)
    if failures:
        logger.warning(f"{failures} of {len(cells)} sweep cells failed")
    return result


def check_error_ordering(
    rows: List[ErrorRow],
    better: str,
    worse: str,
    metric: str = "e_x_red",
    tolerance: float = 0.05,
) -> List[str]:
    """
    Orders r at which ``better`` exceeds ``worse`` by more than the relative tolerance.

    Orders where either method failed are skipped.
    """
    by_key = {(row.method, row.r): row for row in rows}
    violations = []
    for r in sorted({row.r for row in rows}):
        a, b = by_key.get((better, r)), by_key.get((worse, r))
        if a is None or b is None or a.failed or b.failed:
            continue
        va, vb = getattr(a.metrics, metric), getattr(b.metrics, metric)
        if va > vb * (1.0 + tolerance):
            violations.append(f"r={r}: {metric}({better})={va:.3e} > {metric}({worse})={vb:.3e}")
    return violations
