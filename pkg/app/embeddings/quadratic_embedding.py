import logging
from typing import Dict

import numpy as np

from app.core.exceptions import EmbeddingError
from app.core.numerics import numerical_rank, pseudo_inverse, thin_svd
from app.embeddings.base_embedding import BaseEmbedding
from app.embeddings.linear_embedding import build_linear_embedding, orthonormal_complement

# Configure logging
logger = logging.getLogger(__name__)

_ORTHO_TOL = 1e-10


def kron_square_columns(Z: np.ndarray) -> np.ndarray:
    """Column-wise Kronecker squares: column i is z_i kron z_i."""
    k, n = Z.shape
    return (Z[:, None, :] * Z[None, :, :]).reshape(k * k, n)


def kron_square_jacobian(z: np.ndarray) -> np.ndarray:
    """Derivative I kron z + z kron I of z kron z, a k^2 x k matrix."""
    k = z.size
    col = z.reshape(-1, 1)
    eye = np.eye(k)
    return np.kron(eye, col) + np.kron(col, eye)


def ridge_fit(Phi: np.ndarray, T: np.ndarray, lambda_reg: float) -> np.ndarray:
    """
    Minimize |T - M Phi|_F^2 + lambda_reg |M|_F^2 over M.

    Solved through the SVD of Phi^T with filter factors s / (s^2 + lambda_reg). For
    lambda_reg = 0 singular values below the rank cutoff are dropped, which yields the
    minimum-norm least-squares solution.

    Args:
        Phi: Regressors, p x n_s
        T: Targets, q x n_s
        lambda_reg: Tikhonov parameter, non-negative

    Returns:
        M of shape q x p
    """
    U, s, Vt = thin_svd(Phi.T)
    if lambda_reg > 0.0:
        filt = s / (s ** 2 + lambda_reg)
    else:
        rank = numerical_rank(s, Phi.shape)
        filt = np.zeros_like(s)
        filt[:rank] = 1.0 / s[:rank]
    return ((T @ U) * filt) @ Vt


class QuadraticEmbedding(BaseEmbedding):
    """
    Quadratic manifold phi(x_red) = B x1 + V1 x2 + V2 M (x2 kron x2).

    x1 holds the first m reduced coordinates and x2 the remaining r - m. The columns
    of V2 are orthogonal to [B, V1], so the point reduction [B, V1]^+ x inverts phi.
    """

    def __init__(self, B: np.ndarray, V1: np.ndarray, V2: np.ndarray, M: np.ndarray, lambda_reg: float = 0.0):
        super().__init__()
        self.B = np.asarray(B, dtype=float)
        self.V1 = np.asarray(V1, dtype=float)
        self.V2 = np.asarray(V2, dtype=float)
        self.M = np.asarray(M, dtype=float)
        self.lambda_reg = lambda_reg
        k, r_n = self.V1.shape[1], self.V2.shape[1]
        if self.M.shape != (r_n, k * k):
            raise EmbeddingError(f"M has shape {self.M.shape}, expected ({r_n}, {k * k})",
                                 operation="embed.QuadraticEmbedding")
        self.linear_part = np.hstack([self.B, self.V1])
        if np.linalg.norm(self.V1.T @ self.V1 - np.eye(k)) > _ORTHO_TOL or \
                np.linalg.norm(self.V2.T @ self.V2 - np.eye(r_n)) > _ORTHO_TOL:
            raise EmbeddingError("V1 and V2 must have orthonormal columns", operation="embed.QuadraticEmbedding")
        scale = max(1.0, np.linalg.norm(self.B))
        if np.linalg.norm(self.B.T @ self.V1) > _ORTHO_TOL * scale or \
                np.linalg.norm(self.V2.T @ self.linear_part) > _ORTHO_TOL * scale:
            raise EmbeddingError("V1 must be orthogonal to B and V2 to [B, V1]", operation="embed.QuadraticEmbedding")
        self.linear_pinv = pseudo_inverse(self.linear_part)
        self._basis = np.hstack([self.B, self.V1, self.V2])

    @classmethod
    def from_tables(cls, tables: Dict[str, np.ndarray], lambda_reg: float = 0.0) -> "QuadraticEmbedding":
        return cls(tables["B"], tables["V1"], tables["V2"], tables["M"], lambda_reg=lambda_reg)

    @property
    def basis(self) -> np.ndarray:
        return self._basis

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def r(self) -> int:
        return self.m + self.V1.shape[1]

    @property
    def r_n(self) -> int:
        return self.V2.shape[1]

    def lift(self, x_red: np.ndarray) -> np.ndarray:
        z = x_red[self.m:]
        return np.concatenate([x_red, self.M @ np.kron(z, z)])

    def lift_jacobian(self, x_red: np.ndarray) -> np.ndarray:
        m, r = self.m, self.r
        z = x_red[m:]
        S = np.zeros((r + self.r_n, r))
        S[:r, :r] = np.eye(r)
        S[r:, m:] = self.M @ kron_square_jacobian(z)
        return S

    def reduce(self, x: np.ndarray) -> np.ndarray:
        return self.linear_pinv @ x

    def complement_residual(self, X: np.ndarray) -> np.ndarray:
        """(I - B B^+ - V1 V1^T - V2 V2^T) X, unreachable by any reconstruction."""
        X_lin = X - self.linear_part @ (self.linear_pinv @ X)
        return X_lin - self.V2 @ (self.V2.T @ X_lin)

    def to_tables(self) -> Dict[str, np.ndarray]:
        return {"B": self.B, "V1": self.V1, "V2": self.V2, "M": self.M}


def build_quadratic_embedding(
    X: np.ndarray,
    B: np.ndarray,
    r: int,
    r_n: int,
    lambda_reg: float,
) -> QuadraticEmbedding:
    """
    Data-driven quadratic manifold.

    V1 is the port-deflated POD basis of the linear embedding, V2 the first r_n POD
    modes of the residual X - [B, V1][B, V1]^+ X, and M the Tikhonov-regularized fit of
    V2^T (x - B B^+ x - V1 V1^T x) against (V1^T x) kron (V1^T x) over all snapshots.

    Args:
        X: Snapshot matrix, N x n_s
        B: Port matrix, N x m
        r: Reduced dimension
        r_n: Number of quadratic correction directions, at most (r - m)^2
        lambda_reg: Tikhonov parameter, non-negative

    Returns:
        QuadraticEmbedding

    Raises:
        EmbeddingError: if the residual snapshots have rank below r_n
    """
    B = np.asarray(B, dtype=float)
    if lambda_reg < 0.0:
        raise EmbeddingError(f"lambda_reg must be non-negative, got {lambda_reg}",
                             operation="embed.build_quadratic_embedding")
    linear = build_linear_embedding(X, B, r)
    k = linear.Vbar.shape[1]
    if r_n > k * k:
        raise EmbeddingError(f"r_n={r_n} exceeds (r - m)^2 = {k * k}", operation="embed.build_quadratic_embedding")

    residual = X - linear.project(X)
    svd = thin_svd(residual)
    rank = numerical_rank(svd.s, residual.shape, reference=np.linalg.norm(X))
    if rank < r_n:
        raise EmbeddingError(f"residual snapshots have rank {rank}, fewer than r_n={r_n}",
                             operation="embed.build_quadratic_embedding")
    V2 = orthonormal_complement(svd.U[:, :r_n], linear.V)

    Z = linear.Vbar.T @ X
    targets = V2.T @ residual
    M = ridge_fit(kron_square_columns(Z), targets, lambda_reg)
    logger.debug(f"Quadratic embedding built: r={r}, r_n={r_n}, lambda={lambda_reg:.3e}, |M|={np.linalg.norm(M):.3e}")
    return QuadraticEmbedding(B, linear.Vbar, V2, M, lambda_reg=lambda_reg)
