import logging

import numpy as np
from scipy.linalg import block_diag

from app.schemas.experiment import LinearMsdConfig
from app.services.ph_core import PHSystem, SplitHamiltonian

# Configure logging
logger = logging.getLogger(__name__)

_POISSON = np.array([[0.0, 1.0], [-1.0, 0.0]])


def build_linear_msd(cfg: LinearMsdConfig) -> PHSystem:
    """
    Linear mass-spring-damper chain driven by a force on the first mass.

    The state interleaves position and momentum, (q1, p1, q2, p2, ...). Spring k_i
    couples masses i and i+1; the last spring attaches mass n to the wall. Damper c_i
    acts on the momentum of mass i.

    Args:
        cfg: Chain parameters

    Returns:
        PHSystem with N = 2 * n_masses, m = 1 and x0 = 0
    """
    n = cfg.n_masses
    masses = cfg.expanded("masses")
    stiffnesses = cfg.expanded("stiffnesses")
    dampers = cfg.expanded("dampers")
    N = 2 * n

    J = block_diag(*([_POISSON] * n))
    R = np.diag(np.column_stack([np.zeros(n), dampers]).reshape(-1))

    Q = np.zeros((N, N))
    left = np.concatenate([[0.0], stiffnesses[:-1]])
    pos = np.arange(0, N, 2)
    Q[pos, pos] = left + stiffnesses
    Q[pos + 1, pos + 1] = 1.0 / masses
    for i in range(n - 1):
        Q[2 * i, 2 * i + 2] = Q[2 * i + 2, 2 * i] = -stiffnesses[i]

    B = np.zeros((N, 1))
    B[1, 0] = 1.0

    logger.debug(f"Linear mass-spring-damper chain built: n={n}, N={N}")
    return PHSystem(J=J, R=R, B=B, H=SplitHamiltonian.quadratic(Q), x0=np.zeros(N), name=f"linear_msd_{n}")
