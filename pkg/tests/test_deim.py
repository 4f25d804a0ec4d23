import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.benchmarks.nonlinear_msd import build_nonlinear_msd
from app.core.exceptions import DeimError
from app.schemas.experiment import InputSection, NewtonConfig, NonlinearMsdConfig, TimeGrid
from app.services.bench import simulate_fom
from app.services.deim import build_deim, choose_deim_dim, deim_grad, deim_indices
from app.services.integrate import snapshot_matrices
from app.services.ph_core import InputSignal, SplitHamiltonian


def _quartic_on_leading(N: int, d: int) -> SplitHamiltonian:
    """Quadratic part I plus 1/4 sum of x_k^4 over the first d coordinates."""
    def p(x):
        return float(0.25 * np.sum(x[:d] ** 4))

    def q(x):
        g = np.zeros_like(x)
        g[:d] = x[:d] ** 3
        return g

    def hess_p(x):
        h = np.zeros(x.size)
        h[:d] = 3 * x[:d] ** 2
        return np.diag(h)

    return SplitHamiltonian(Q=np.eye(N), p=p, q=q, hess_p=hess_p, x_e=np.zeros(N))


def test_deim_exact_for_low_rank_nonlinearity(rng):
    H = _quartic_on_leading(12, 3)
    X = rng.standard_normal((12, 20))
    X_Q = np.column_stack([H.q(X[:, i]) for i in range(20)])
    model = build_deim(H, X_Q, eps=1e-8)
    assert model.d == 3
    assert sorted(model.indices.tolist()) == [0, 1, 2]
    for i in range(20):
        x = X[:, i]
        np.testing.assert_allclose(model.interpolate(H.q(model.project_transposed(x))), H.q(x), atol=1e-9)
        np.testing.assert_allclose(deim_grad(model, x), H.gradient(x), atol=1e-9)


def test_choose_deim_dim_tail_rule():
    X_Q = np.diag([1.0, 1e-3, 1e-6, 0.0])
    assert choose_deim_dim(X_Q, 1e-2) == 1
    assert choose_deim_dim(X_Q, 1e-4) == 2
    assert choose_deim_dim(X_Q, 1e-8) == 3
    assert choose_deim_dim(np.zeros((4, 5)), 1e-8) == 0


def test_zero_nonlinearity_gives_empty_model(rng):
    H = SplitHamiltonian.quadratic(np.diag([1.0, 2.0, 3.0]))
    model = build_deim(H, np.zeros((3, 6)), eps=1e-8)
    assert model.d == 0
    x = rng.standard_normal(3)
    np.testing.assert_allclose(deim_grad(model, x), H.Q @ x)


def test_deim_indices_rejects_dependent_columns():
    u = np.array([0.1, 0.9, 0.3, 0.2])
    U = np.column_stack([u, u])
    with pytest.raises(DeimError):
        deim_indices(U)


def test_deim_gradient_matches_finite_differences(nonlinear_run, rng):
    sys = nonlinear_run.sys
    model = build_deim(sys.H, nonlinear_run.X_Q, eps=1e-8)
    assert 0 < model.d <= sys.N
    h = 1e-6
    for _ in range(50):
        x = 0.5 * rng.standard_normal(sys.N)
        fd = np.array([(model.hamiltonian(x + h * e) - model.hamiltonian(x - h * e)) / (2 * h)
                       for e in np.eye(sys.N)])
        g = deim_grad(model, x)
        assert np.linalg.norm(fd - g) <= 1e-5 * np.linalg.norm(g)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10 ** 6), d=st.integers(min_value=1, max_value=5))
def test_interpolation_reproduces_selected_rows(seed, d):
    local = np.random.default_rng(seed)
    U, _ = np.linalg.qr(local.standard_normal((10, d)))
    indices = deim_indices(U)
    assert len(set(indices.tolist())) == d
    C = np.linalg.solve(U[indices, :].T, U.T).T
    np.testing.assert_allclose(C[indices, :], np.eye(d), atol=1e-8)
    v = local.standard_normal(10)
    coeffs = U.T @ v
    np.testing.assert_allclose(C @ (U @ coeffs)[indices], U @ coeffs, atol=1e-8)


@pytest.fixture(scope="module")
def chain_of_twenty():
    sys, _ = build_nonlinear_msd(NonlinearMsdConfig(n_masses=20))
    u = InputSignal.from_section(InputSection(type="sine", amplitude=1.0), sys.m)
    traj = simulate_fom(sys, u, TimeGrid.from_step(0.0, 10.0, 0.1), NewtonConfig(tol=1e-10, max_iter=20))
    _, X_Q = snapshot_matrices(sys, traj)
    return sys, X_Q


def test_deim_gradient_of_twenty_mass_chain(chain_of_twenty, rng):
    sys, X_Q = chain_of_twenty
    assert sys.N == 40
    model = build_deim(sys.H, X_Q, eps=1e-8)
    assert 0 < model.d <= sys.N // 2
    h = 1e-6
    for _ in range(50):
        x = 0.5 * rng.standard_normal(sys.N)
        fd = np.array([(model.hamiltonian(x + h * e) - model.hamiltonian(x - h * e)) / (2 * h)
                       for e in np.eye(sys.N)])
        g = deim_grad(model, x)
        assert np.linalg.norm(fd - g) <= 1e-5 * np.linalg.norm(g)
