"""Mass-spring-damper chain with cubic spring forces.

Spring i connects masses i and i+1 (the last one connects mass n to the wall) and
stores 1/2 k1 l^2 + 1/4 k2 l^4 for elongation l. In physical coordinates
x = (xi_1..xi_n, v_1..v_n) the quartic energy couples neighbouring positions; the
elongation coordinates x_hat = T x with T = blockdiag(M, I), (M xi)_i = xi_i - xi_{i+1},
(M xi)_n = xi_n, make it a sum of independent quartics, which suits DEIM.
"""
import logging
from typing import Tuple

import numpy as np
from scipy.linalg import block_diag

from app.schemas.experiment import NonlinearMsdConfig
from app.services.ph_core import PHSystem, SplitHamiltonian

# Configure logging
logger = logging.getLogger(__name__)


def bidiagonal_difference(n: int) -> np.ndarray:
    """Upper bidiagonal M with ones on the diagonal and -1 on the superdiagonal."""
    return np.eye(n) - np.eye(n, k=1)


def _structure(cfg: NonlinearMsdConfig) -> Tuple[np.ndarray, np.ndarray]:
    n = cfg.n_masses
    zeros = np.zeros((n, n))
    J = np.block([[zeros, np.eye(n)], [-np.eye(n), zeros]])
    R = block_diag(zeros, cfg.damping * np.eye(n))
    B = np.zeros((2 * n, 1))
    B[n, 0] = 1.0
    return J, R, B


def build_nonlinear_msd(cfg: NonlinearMsdConfig) -> Tuple[PHSystem, np.ndarray]:
    """
    Nonlinear chain in elongation coordinates.

    Args:
        cfg: Chain parameters

    Returns:
        (transformed system, T) with J~ = T J T^T, R~ = T R T^T = R,
        Q~ = blockdiag(k1 I, mass I), B~ = T B = B and x_hat0 = 0
    """
    n = cfg.n_masses
    N = 2 * n
    J, R, B = _structure(cfg)
    T = block_diag(bidiagonal_difference(n), np.eye(n))
    k2 = cfg.k2

    def p(x: np.ndarray) -> float:
        return float(0.25 * k2 * np.sum(x[:n] ** 4))

    def q(x: np.ndarray) -> np.ndarray:
        g = np.zeros_like(x, dtype=float)
        g[:n] = k2 * x[:n] ** 3
        return g

    def hess_p(x: np.ndarray) -> np.ndarray:
        diag = np.zeros(x.size)
        diag[:n] = 3.0 * k2 * x[:n] ** 2
        return np.diag(diag)

    def p_local(indices: np.ndarray, values: np.ndarray) -> float:
        return float(0.25 * k2 * np.sum(values[indices < n] ** 4))

    def q_local(indices: np.ndarray, values: np.ndarray) -> np.ndarray:
        return np.where(indices < n, k2 * values ** 3, 0.0)

    Q = np.diag(np.concatenate([np.full(n, cfg.k1), np.full(n, cfg.mass)]))
    H = SplitHamiltonian(Q=Q, p=p, q=q, hess_p=hess_p, x_e=np.zeros(N), p_local=p_local, q_local=q_local)
    J_t = T @ J @ T.T
    R_t = T @ R @ T.T
    logger.debug(f"Nonlinear mass-spring-damper chain built: n={n}, N={N}")
    return PHSystem(J=J_t, R=R_t, B=T @ B, H=H, x0=np.zeros(N), name=f"nonlinear_msd_{n}"), T


def build_nonlinear_msd_untransformed(cfg: NonlinearMsdConfig) -> PHSystem:
    """Nonlinear chain in physical coordinates; H~(T x) = H(x)."""
    n = cfg.n_masses
    N = 2 * n
    J, R, B = _structure(cfg)
    Mb = bidiagonal_difference(n)
    k2 = cfg.k2

    def p(x: np.ndarray) -> float:
        return float(0.25 * k2 * np.sum((Mb @ x[:n]) ** 4))

    def q(x: np.ndarray) -> np.ndarray:
        g = np.zeros_like(x, dtype=float)
        g[:n] = Mb.T @ (k2 * (Mb @ x[:n]) ** 3)
        return g

    def hess_p(x: np.ndarray) -> np.ndarray:
        h = np.zeros((N, N))
        ell = Mb @ x[:n]
        h[:n, :n] = Mb.T @ (3.0 * k2 * ell[:, None] ** 2 * Mb)
        return h

    Q = block_diag(cfg.k1 * Mb.T @ Mb, cfg.mass * np.eye(n))
    H = SplitHamiltonian(Q=Q, p=p, q=q, hess_p=hess_p, x_e=np.zeros(N))
    return PHSystem(J=J, R=R, B=B, H=H, x0=np.zeros(N), name=f"nonlinear_msd_physical_{n}")
