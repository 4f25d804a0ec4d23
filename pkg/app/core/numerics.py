"""Dense real linear algebra shared by every other module.

All routines work on ``numpy`` arrays and delegate to LAPACK through ``scipy.linalg``.
Failures surface as members of the ``app.core.exceptions`` hierarchy, never as
silently wrong numbers.
"""
import logging
import warnings
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg as la
from scipy.linalg.lapack import get_lapack_funcs

from app.core.exceptions import (
    DimensionMismatchError,
    NumericalError,
    SingularMatrixError,
    SvdConvergenceError,
)

__all__ = [
    "SvdResult",
    "thin_svd",
    "pod_basis",
    "numerical_rank",
    "pseudo_inverse",
    "kron",
    "solve_dense",
    "DenseFactorization",
]

# Configure logging
logger = logging.getLogger(__name__)

EPS = np.finfo(float).eps
_SIGN_TOL = 1e-12


class SvdResult(NamedTuple):
    """Thin singular value decomposition A = U diag(s) Vt."""
    U: np.ndarray
    s: np.ndarray
    Vt: np.ndarray


def thin_svd(A: np.ndarray) -> SvdResult:
    """
    Economy-size SVD with a deterministic sign convention.

    Singular values are returned in non-increasing order and every left singular
    vector has its first entry of magnitude above 1e-12 positive.

    Args:
        A: Real matrix of shape (n, k)

    Returns:
        SvdResult with U (n, p), s (p,), Vt (p, k), p = min(n, k)
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise DimensionMismatchError(f"expected a matrix, got shape {A.shape}", operation="numerics.thin_svd")
    n, k = A.shape
    if min(n, k) == 0:
        p = min(n, k)
        return SvdResult(np.zeros((n, p)), np.zeros(p), np.zeros((p, k)))

    try:
        U, s, Vt = la.svd(A, full_matrices=False, lapack_driver="gesdd")
    except la.LinAlgError:
        logger.warning("gesdd did not converge, retrying with gesvd")
        try:
            U, s, Vt = la.svd(A, full_matrices=False, lapack_driver="gesvd")
        except la.LinAlgError as e:
            raise SvdConvergenceError(f"SVD of a {n}x{k} matrix failed: {str(e)}", operation="numerics.thin_svd")

    first = np.argmax(np.abs(U) > _SIGN_TOL, axis=0)
    signs = np.sign(U[first, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return SvdResult(U * signs, s, Vt * signs[:, None])


def numerical_rank(s: np.ndarray, shape: tuple, reference: Optional[float] = None) -> int:
    """Count singular values above max(shape) * eps * reference (default: the largest of s)."""
    if s.size == 0:
        return 0
    scale = s[0] if reference is None else reference
    if scale <= 0.0:
        return 0
    return int(np.count_nonzero(s > max(shape) * EPS * scale))


def pod_basis(X: np.ndarray, k: int) -> np.ndarray:
    """Leading ``k`` left singular vectors of the snapshot matrix ``X``."""
    return thin_svd(X).U[:, :k]


def pseudo_inverse(A: np.ndarray) -> np.ndarray:
    """
    Moore-Penrose pseudo-inverse through the thin SVD.

    Singular values at or below max(rows, cols) * eps * sigma_max are treated as zero.
    """
    A = np.asarray(A, dtype=float)
    U, s, Vt = thin_svd(A)
    k = numerical_rank(s, A.shape)
    return (Vt[:k].T / s[:k]) @ U[:, :k].T


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of two vectors of equal length: result[i*k + j] = a[i] * b[j]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
        raise DimensionMismatchError(
            f"kron expects two vectors of equal length, got {a.shape} and {b.shape}",
            operation="numerics.kron",
        )
    return np.kron(a, b)


class DenseFactorization:
    """
    Pivoted LU factorization of a square matrix with a 1-norm condition estimate.

    Solves with A and with its transpose reuse the same factors.
    """

    def __init__(self, A: np.ndarray, operation: str = "numerics.solve_dense"):
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatchError(f"expected a square matrix, got shape {A.shape}", operation=operation)
        self.n = A.shape[0]
        self.operation = operation
        if self.n == 0:
            self.lu_piv = None
            self.condition = 1.0
            return

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", la.LinAlgWarning)
            try:
                self.lu_piv = la.lu_factor(A, check_finite=True)
            except ValueError as e:
                raise NumericalError(f"cannot factorize: {str(e)}", operation=operation)

        lu = self.lu_piv[0]
        anorm = np.linalg.norm(A, 1)
        (gecon,) = get_lapack_funcs(("gecon",), (lu,))
        rcond, _ = gecon(lu, anorm, norm="1")
        if not np.isfinite(rcond) or rcond < EPS:
            self.condition = float("inf") if rcond <= 0.0 or not np.isfinite(rcond) else 1.0 / rcond
            raise SingularMatrixError(f"matrix of size {self.n} is singular to working precision",
                                      condition=self.condition, operation=operation)
        self.condition = 1.0 / rcond

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve A x = b."""
        return self._solve(b, trans=0)

    def solve_transposed(self, b: np.ndarray) -> np.ndarray:
        """Solve A^T x = b."""
        return self._solve(b, trans=1)

    def _solve(self, b: np.ndarray, trans: int) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.n:
            raise DimensionMismatchError(
                f"right-hand side has {b.shape[0]} rows, matrix has {self.n}", operation=self.operation
            )
        if self.n == 0:
            return b.copy()
        return la.lu_solve(self.lu_piv, b, trans=trans)


def solve_dense(A: np.ndarray, b: np.ndarray, operation: str = "numerics.solve_dense") -> np.ndarray:
    """
    Solve A x = b with partial pivoting.

    Args:
        A: Square matrix
        b: Vector or matrix with as many rows as A
        operation: Provenance attached to raised errors

    Returns:
        Solution with the shape of b

    Raises:
        SingularMatrixError: if A is singular to working precision
    """
    return DenseFactorization(A, operation=operation).solve(b)
