"""Three-stage Gauss-Legendre time integration with a Newton inner solver.

The stage derivatives K_1..K_3 of one step are the Newton unknowns (3N of them). The
Newton matrix I - dt (A kron J_f) uses the Jacobian of f at the start of the step
(simplified Newton) and is refactorized once per step, or once per run when the
Jacobian is constant.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from app.core.config import settings
from app.core.exceptions import DimensionMismatchError, NonFiniteStateError
from app.core.numerics import DenseFactorization
from app.schemas.experiment import NewtonConfig, TimeGrid
from app.services.ph_core import PHSystem

__all__ = [
    "GL6_A",
    "GL6_B",
    "GL6_C",
    "StepResult",
    "Trajectory",
    "GaussLegendreStepper",
    "step_gl6",
    "simulate",
    "finite_difference_jacobian",
    "snapshot_matrices",
    "gradient_snapshots",
]

# Configure logging
logger = logging.getLogger(__name__)

_S15 = np.sqrt(15.0)

GL6_C = np.array([0.5 - _S15 / 10.0, 0.5, 0.5 + _S15 / 10.0])
GL6_B = np.array([5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0])
GL6_A = np.array([
    [5.0 / 36.0, 2.0 / 9.0 - _S15 / 15.0, 5.0 / 36.0 - _S15 / 30.0],
    [5.0 / 36.0 + _S15 / 24.0, 2.0 / 9.0, 5.0 / 36.0 - _S15 / 24.0],
    [5.0 / 36.0 + _S15 / 30.0, 2.0 / 9.0 + _S15 / 15.0, 5.0 / 36.0],
])

VectorField = Callable[[float, np.ndarray], np.ndarray]
JacobianField = Callable[[float, np.ndarray], np.ndarray]


class StepResult(NamedTuple):
    """State after one step and how the Newton iteration ended."""
    x: np.ndarray
    converged: bool
    iterations: int
    residual_norm: float


@dataclass
class Trajectory:
    """
    States and outputs on a uniform time grid.

    Column i of ``states`` and ``outputs`` belongs to time t0 + i*dt.
    """
    grid: TimeGrid
    states: np.ndarray
    outputs: np.ndarray
    nonconverged_steps: List[int] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times()

    @property
    def n_points(self) -> int:
        return self.states.shape[1]


class GaussLegendreStepper:
    """
    Order-six implicit Runge-Kutta stepper.

    Args:
        f: Vector field f(t, x)
        jac_f: Jacobian of f with respect to x
        cfg: Newton tolerance and iteration cap
        constant_jacobian: Reuse the Newton factorization across steps of equal size
    """

    def __init__(self, f: VectorField, jac_f: JacobianField, cfg: NewtonConfig, constant_jacobian: bool = False):
        self.f = f
        self.jac_f = jac_f
        self.cfg = cfg
        self.constant_jacobian = constant_jacobian
        self._cache: Dict[float, DenseFactorization] = {}

    def _newton_matrix(self, t: float, x: np.ndarray, dt: float) -> DenseFactorization:
        if self.constant_jacobian and dt in self._cache:
            return self._cache[dt]
        jac = np.asarray(self.jac_f(t, x), dtype=float)
        n = x.size
        if jac.shape != (n, n):
            raise DimensionMismatchError(f"Jacobian has shape {jac.shape}, expected ({n}, {n})",
                                         operation="integrate.step_gl6")
        lhs = np.eye(3 * n) - dt * np.kron(GL6_A, jac)
        factorization = DenseFactorization(lhs, operation="integrate.step_gl6")
        if self.constant_jacobian:
            self._cache[dt] = factorization
        return factorization

    def _residual(self, t: float, x: np.ndarray, dt: float, K: np.ndarray) -> np.ndarray:
        Y = x + dt * (GL6_A @ K)
        F = np.stack([self.f(t + c * dt, Y[i]) for i, c in enumerate(GL6_C)])
        return (K - F).reshape(-1)

    def step(self, t: float, x: np.ndarray, dt: float) -> StepResult:
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise NonFiniteStateError(f"non-finite state at t={t}", operation="integrate.step_gl6")

        f0 = np.asarray(self.f(t, x), dtype=float)
        K = np.tile(f0, (3, 1))
        newton = self._newton_matrix(t, x, dt)

        converged = False
        iterations = 0
        G = self._residual(t, x, dt, K)
        residual_norm = float(np.linalg.norm(G))
        while True:
            if not np.isfinite(residual_norm):
                raise NonFiniteStateError(f"non-finite stage residual at t={t}", operation="integrate.step_gl6")
            if residual_norm <= self.cfg.tol:
                converged = True
                break
            if iterations >= self.cfg.max_iter:
                break
            K = K - newton.solve(G).reshape(K.shape)
            iterations += 1
            G = self._residual(t, x, dt, K)
            residual_norm = float(np.linalg.norm(G))

        x_next = x + dt * (GL6_B @ K)
        if not np.all(np.isfinite(x_next)):
            raise NonFiniteStateError(f"non-finite state after step from t={t}", operation="integrate.step_gl6")
        return StepResult(x_next, converged, iterations, residual_norm)


def step_gl6(
    f: VectorField,
    jac_f: JacobianField,
    t: float,
    x: np.ndarray,
    dt: float,
    cfg: NewtonConfig,
) -> StepResult:
    """
    Advance x from t to t + dt with the three-stage Gauss-Legendre method.

    Args:
        f: Vector field f(t, x)
        jac_f: Jacobian of f with respect to x
        t: Current time
        x: Current state
        dt: Step size
        cfg: Newton settings

    Returns:
        StepResult holding the new state and a convergence flag

    Raises:
        SingularMatrixError: if the Newton matrix is singular
        NonFiniteStateError: if a state or residual stops being finite
    """
    result = GaussLegendreStepper(f, jac_f, cfg).step(t, x, dt)
    if not result.converged:
        logger.warning(f"Newton did not converge at t={t} after {result.iterations} iterations "
                       f"(residual {result.residual_norm:.3e})")
    return result


def simulate(
    f: VectorField,
    jac_f: JacobianField,
    x0: np.ndarray,
    grid: TimeGrid,
    cfg: NewtonConfig,
    output_fn: Callable[[np.ndarray], np.ndarray],
    constant_jacobian: bool = False,
) -> Trajectory:
    """
    Integrate over the whole grid, recording states and outputs at every grid point.

    Newton non-convergence is logged with its step index and listed in
    ``Trajectory.nonconverged_steps``; integration continues from the last iterate.
    """
    x = np.asarray(x0, dtype=float).copy()
    stepper = GaussLegendreStepper(f, jac_f, cfg, constant_jacobian=constant_jacobian)
    times = grid.times()
    dt = grid.dt

    y0 = np.atleast_1d(np.asarray(output_fn(x), dtype=float))
    states = np.empty((x.size, grid.n_steps + 1))
    outputs = np.empty((y0.size, grid.n_steps + 1))
    states[:, 0] = x
    outputs[:, 0] = y0

    nonconverged = []
    for i in range(grid.n_steps):
        result = stepper.step(times[i], x, dt)
        if not result.converged:
            logger.warning(f"Newton did not converge in step {i} (t={times[i]:.6g}, "
                           f"residual {result.residual_norm:.3e})")
            nonconverged.append(i)
        x = result.x
        states[:, i + 1] = x
        outputs[:, i + 1] = output_fn(x)

    if nonconverged:
        logger.warning(f"{len(nonconverged)} of {grid.n_steps} steps ended without Newton convergence")
    return Trajectory(grid=grid, states=states, outputs=outputs, nonconverged_steps=nonconverged)


def finite_difference_jacobian(f: VectorField, rel_step: Optional[float] = None) -> JacobianField:
    """Central-difference Jacobian of f(t, x) with step rel_step * (1 + |x|)."""
    rel_step = settings.FD_JACOBIAN_STEP if rel_step is None else rel_step

    def jac(t: float, x: np.ndarray) -> np.ndarray:
        h = rel_step * (1.0 + np.linalg.norm(x))
        columns = []
        for j in range(x.size):
            e = np.zeros_like(x)
            e[j] = h
            columns.append((f(t, x + e) - f(t, x - e)) / (2.0 * h))
        return np.column_stack(columns) if columns else np.zeros((0, 0))

    return jac


def snapshot_matrices(sys: PHSystem, traj: Trajectory) -> Tuple[np.ndarray, np.ndarray]:
    """State snapshots X and nonlinear-gradient snapshots X_Q with columns q(x_i)."""
    X = traj.states
    X_Q = np.column_stack([sys.H.q(X[:, i]) for i in range(X.shape[1])])
    return X, X_Q


def gradient_snapshots(sys: PHSystem, traj: Trajectory) -> np.ndarray:
    """Columns grad H(x_i) of a full-order trajectory."""
    X = traj.states
    return np.column_stack([sys.gradient(X[:, i]) for i in range(X.shape[1])])
