from types import SimpleNamespace
from typing import Optional

import numpy as np
import pytest

from app.benchmarks.linear_msd import build_linear_msd
from app.benchmarks.nonlinear_msd import build_nonlinear_msd
from app.schemas.experiment import InputSection, LinearMsdConfig, NewtonConfig, NonlinearMsdConfig, TimeGrid
from app.services.bench import simulate_fom
from app.services.integrate import snapshot_matrices
from app.services.ph_core import InputSignal, PHSystem, SplitHamiltonian


def random_ph_system(N: int, m: int = 1, seed: int = 0, B: Optional[np.ndarray] = None) -> PHSystem:
    """Quadratic pH system with skew J, positive definite R and Q."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((N, N))
    J = A - A.T
    L = rng.standard_normal((N, N)) / np.sqrt(N)
    R = 0.5 * L @ L.T + 0.1 * np.eye(N)
    F = rng.standard_normal((N, N)) / np.sqrt(N)
    Q = F @ F.T + np.eye(N)
    B = rng.standard_normal((N, m)) if B is None else B
    return PHSystem(J=J, R=R, B=B, H=SplitHamiltonian.quadratic(Q), x0=np.zeros(N), name=f"random_{N}")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def linear_msd_small():
    return build_linear_msd(LinearMsdConfig(n_masses=10, masses=2.0, stiffnesses=1.0, dampers=1.0))


@pytest.fixture(scope="session")
def linear_run():
    """Linear chain with 10 masses driven by 0.5 sin(t) for 20 s."""
    sys = build_linear_msd(LinearMsdConfig(n_masses=10, masses=2.0, stiffnesses=1.0, dampers=1.0))
    u = InputSignal.from_section(InputSection(type="sine", amplitude=0.5), sys.m)
    grid = TimeGrid.from_step(0.0, 20.0, 0.1)
    traj = simulate_fom(sys, u, grid, NewtonConfig(tol=1e-10, max_iter=10))
    return SimpleNamespace(sys=sys, u=u, grid=grid, traj=traj, X=traj.states)


@pytest.fixture(scope="session")
def nonlinear_run():
    """Nonlinear chain with 10 masses driven by sin(t) for 10 s."""
    sys, T = build_nonlinear_msd(NonlinearMsdConfig(n_masses=10))
    u = InputSignal.from_section(InputSection(type="sine", amplitude=1.0), sys.m)
    grid = TimeGrid.from_step(0.0, 10.0, 0.1)
    traj = simulate_fom(sys, u, grid, NewtonConfig(tol=1e-10, max_iter=20))
    X, X_Q = snapshot_matrices(sys, traj)
    return SimpleNamespace(sys=sys, T=T, u=u, grid=grid, traj=traj, X=X, X_Q=X_Q)
