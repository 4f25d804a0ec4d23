import logging
from typing import Dict, Optional

import numpy as np

from app.core.exceptions import EmbeddingError
from app.core.numerics import numerical_rank, pseudo_inverse, thin_svd
from app.embeddings.base_embedding import BaseEmbedding

# Configure logging
logger = logging.getLogger(__name__)

_ORTHO_TOL = 1e-10


class LinearEmbedding(BaseEmbedding):
    """
    Linear embedding phi(x_red) = V x_red with V = [B, Vbar].

    Vbar has orthonormal columns orthogonal to span(B). Baseline bases without port
    alignment are represented with an empty B.
    """

    def __init__(self, B: np.ndarray, Vbar: np.ndarray):
        super().__init__()
        self.B = np.asarray(B, dtype=float)
        self.Vbar = np.asarray(Vbar, dtype=float)
        if self.B.shape[0] != self.Vbar.shape[0]:
            raise EmbeddingError(f"B has {self.B.shape[0]} rows, Vbar has {self.Vbar.shape[0]}",
                                 operation="embed.LinearEmbedding")
        k = self.Vbar.shape[1]
        if np.linalg.norm(self.Vbar.T @ self.Vbar - np.eye(k)) > _ORTHO_TOL:
            raise EmbeddingError("Vbar columns are not orthonormal", operation="embed.LinearEmbedding")
        if self.B.size and np.linalg.norm(self.B.T @ self.Vbar) > _ORTHO_TOL * max(1.0, np.linalg.norm(self.B)):
            raise EmbeddingError("Vbar is not orthogonal to span(B)", operation="embed.LinearEmbedding")
        self.V = np.hstack([self.B, self.Vbar])
        self.Vdag = pseudo_inverse(self.V)

    @classmethod
    def from_basis(cls, V: np.ndarray) -> "LinearEmbedding":
        """Embedding spanned by an orthonormal basis with no port columns."""
        V = np.asarray(V, dtype=float)
        return cls(np.zeros((V.shape[0], 0)), V)

    @classmethod
    def from_tables(cls, tables: Dict[str, np.ndarray]) -> "LinearEmbedding":
        return cls(tables["B"], tables["Vbar"])

    @property
    def basis(self) -> np.ndarray:
        return self.V

    @property
    def r(self) -> int:
        return self.V.shape[1]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def lift(self, x_red: np.ndarray) -> np.ndarray:
        return x_red

    def lift_jacobian(self, x_red: np.ndarray) -> np.ndarray:
        return np.eye(self.r)

    def jacobian(self, x_red: np.ndarray) -> np.ndarray:
        return self.V

    def reduce(self, x: np.ndarray) -> np.ndarray:
        return self.Vdag @ x

    def project(self, X: np.ndarray) -> np.ndarray:
        """Orthogonal projection V V^+ X onto span(V)."""
        return self.V @ (self.Vdag @ X)

    def to_tables(self) -> Dict[str, np.ndarray]:
        return {"B": self.B, "Vbar": self.Vbar}


def orthonormal_complement(U: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Remove the span(B) component of U and re-orthonormalize, keeping column signs."""
    if B.size == 0 or U.shape[1] == 0:
        return U
    U = U - B @ (pseudo_inverse(B) @ U)
    Q, R = np.linalg.qr(U)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def deflated_basis(X: np.ndarray, B: np.ndarray, k: int, reference: Optional[float] = None) -> np.ndarray:
    """
    First k left singular vectors of X - B B^+ X.

    Raises:
        EmbeddingError: if the deflated snapshots have numerical rank below k
    """
    X_defl = X - B @ (pseudo_inverse(B) @ X) if B.size else X
    svd = thin_svd(X_defl)
    reference = np.linalg.norm(X) if reference is None else reference
    rank = numerical_rank(svd.s, X_defl.shape, reference=reference)
    if rank < k:
        raise EmbeddingError(
            f"deflated snapshots have rank {rank}; achievable maximum r is {B.shape[1] + rank}",
            operation="embed.build_linear_embedding",
        )
    return orthonormal_complement(svd.U[:, :k], B)


def build_linear_embedding(X: np.ndarray, B: np.ndarray, r: int) -> LinearEmbedding:
    """
    Port-aligned POD embedding V = [B, Vbar].

    Args:
        X: Snapshot matrix, N x n_s
        B: Port matrix, N x m
        r: Reduced dimension, at least m

    Returns:
        LinearEmbedding whose Vbar holds the first r - m POD modes of X - B B^+ X
    """
    B = np.asarray(B, dtype=float)
    m = B.shape[1]
    if r < m:
        raise EmbeddingError(f"r={r} is smaller than the number of ports m={m}",
                             operation="embed.build_linear_embedding")
    Vbar = deflated_basis(X, B, r - m)
    logger.debug(f"Linear embedding built: N={X.shape[0]}, r={r}, m={m}")
    return LinearEmbedding(B, Vbar)


def build_pod_embedding(X: np.ndarray, r: int) -> LinearEmbedding:
    """Plain POD embedding of the first r left singular vectors of X, no port alignment."""
    return LinearEmbedding.from_basis(deflated_basis(X, np.zeros((X.shape[0], 0)), r))
