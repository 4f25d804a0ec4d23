"""Structure-preserving discrete empirical interpolation.

The nonlinear part of the Hamiltonian is replaced by p(P^T x) with the oblique
interpolation projector P = U (E^T U)^{-1} E^T, so the approximation
H_DEIM(x) = 1/2 x^T Q x + p(P^T x) is still a scalar energy and its gradient
Q x + P q(P^T x) is an exact gradient. P is stored as C = U (E^T U)^{-1} plus the
index set; it is never formed as an N x N matrix.
"""
import logging
from dataclasses import dataclass

import numpy as np

from app.core.exceptions import DeimError, SingularMatrixError
from app.core.numerics import pod_basis, solve_dense, thin_svd
from app.services.ph_core import SplitHamiltonian

__all__ = [
    "DeimModel",
    "choose_deim_dim",
    "deim_indices",
    "build_deim",
    "deim_grad",
]

# Configure logging
logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DeimModel:
    """
    DEIM approximation of the non-quadratic Hamiltonian part.

    Attributes:
        U: Orthonormal DEIM basis, N x d
        indices: Selected rows, d distinct integers
        C: U (E^T U)^{-1}, N x d
        H: Hamiltonian of the originating system
    """
    U: np.ndarray
    indices: np.ndarray
    C: np.ndarray
    H: SplitHamiltonian

    @property
    def d(self) -> int:
        return self.indices.size

    @property
    def N(self) -> int:
        return self.H.N

    def scatter(self, values: np.ndarray) -> np.ndarray:
        """N-vector holding ``values`` at the selected rows and zero elsewhere."""
        y = np.zeros(self.N)
        y[self.indices] = values
        return y

    def project_transposed(self, x: np.ndarray) -> np.ndarray:
        """P^T x = E C^T x"""
        return self.scatter(self.C.T @ x)

    def interpolate(self, v: np.ndarray) -> np.ndarray:
        """P v = C (E^T v)"""
        return self.C @ v[self.indices]

    def hamiltonian(self, x: np.ndarray) -> float:
        return float(0.5 * x @ (self.H.Q @ x) + self.H.p_at(self.indices, self.C.T @ x))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        """Q x + C q_E(C^T x); q is evaluated at the d selected entries only."""
        return self.H.Q @ x + self.C @ self.H.q_at(self.indices, self.C.T @ x)


def choose_deim_dim(X_Q: np.ndarray, eps: float) -> int:
    """
    Smallest d whose relative Frobenius POD tail of X_Q is below eps.

    Returns 0 for an all-zero snapshot matrix.
    """
    s = thin_svd(X_Q).s
    total = float(np.sum(s ** 2))
    if s.size == 0 or total == 0.0:
        return 0
    tails = np.sqrt(np.cumsum((s ** 2)[::-1])[::-1] / total)
    below = np.nonzero(tails < eps)[0]
    return int(below[0]) if below.size else int(s.size)


def deim_indices(U: np.ndarray) -> np.ndarray:
    """
    Greedy DEIM row selection.

    The first index maximizes |u_1|; index l maximizes the interpolation residual of
    u_l on the rows chosen so far. Ties go to the smallest index.

    Raises:
        DeimError: if E^T U becomes singular, i.e. the basis columns are dependent
    """
    N, d = U.shape
    if d == 0:
        return np.zeros(0, dtype=int)
    indices = [int(np.argmax(np.abs(U[:, 0])))]
    for ell in range(1, d):
        U_ell = U[:, :ell]
        try:
            c = solve_dense(U_ell[indices, :], U[indices, ell], operation="deim.deim_indices")
        except SingularMatrixError as e:
            logger.error(f"DEIM selection broke down at step {ell}: {str(e)}")
            raise DeimError(f"E^T U singular at step {ell}; basis columns are dependent",
                            operation="deim.deim_indices")
        residual = U[:, ell] - U_ell @ c
        indices.append(int(np.argmax(np.abs(residual))))
    if len(set(indices)) != d:
        raise DeimError("greedy selection repeated an index", operation="deim.deim_indices")
    return np.asarray(indices, dtype=int)


def build_deim(H: SplitHamiltonian, X_Q: np.ndarray, eps: float) -> DeimModel:
    """
    Build the DEIM model of H from nonlinear-gradient snapshots.

    Args:
        H: Split Hamiltonian of the full-order system
        X_Q: Snapshots q(x_i) as columns
        eps: Relative POD tail tolerance

    Returns:
        DeimModel with dimension chosen by choose_deim_dim
    """
    d = choose_deim_dim(X_Q, eps)
    U = pod_basis(X_Q, d) if d else np.zeros((H.N, 0))
    indices = deim_indices(U)
    if d:
        try:
            C = solve_dense(U[indices, :].T, U.T, operation="deim.build_deim").T
        except SingularMatrixError as e:
            raise DeimError(str(e), operation="deim.build_deim")
    else:
        C = np.zeros((H.N, 0))
    logger.info(f"DEIM dimension d={d} (tolerance {eps:.1e}, {X_Q.shape[1]} snapshots)")
    return DeimModel(U=U, indices=indices, C=C, H=H)


def deim_grad(model: DeimModel, x: np.ndarray) -> np.ndarray:
    """Gradient Q x + C (E^T q(P^T x)) of the DEIM Hamiltonian."""
    return model.gradient(x)
