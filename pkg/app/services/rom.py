"""Reduced port-Hamiltonian models.

Every reduced model has the form

    dx_red/dt = (J_red - R_red) grad H_red(x_red) + B_red u,   y_red = B_red^T grad H_red(x_red)

with J_red skew and R_red symmetric positive semidefinite. The GMG reduction with
G = (J - R)^{-1} produces W = G^T V (V^T G V)^{-T}; for a state-dependent tangent
basis D(x_red) it is evaluated from offline factors of the constant basis [B, V1, V2],
so no N-dimensional linear algebra happens online; with DEIM, q is evaluated on
the d interpolation entries only.
"""
import logging
from abc import ABC, abstractmethod
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from app.core.config import settings
from app.core.exceptions import (
    EmbeddingError,
    SGMembershipError,
    SingularMatrixError,
    StructureError,
)
from app.core.numerics import DenseFactorization, solve_dense
from app.embeddings.base_embedding import BaseEmbedding
from app.embeddings.linear_embedding import LinearEmbedding, build_pod_embedding, deflated_basis
from app.embeddings.quadratic_embedding import QuadraticEmbedding
from app.schemas.results import CheckResult
from app.services.deim import DeimModel
from app.services.ph_core import PHSystem, SplitHamiltonian

__all__ = [
    "GmgContext",
    "ReducedHamiltonian",
    "ReducedPHSystem",
    "LinearReducedPHSystem",
    "ManifoldReducedPHSystem",
    "gmg_reduction",
    "build_gmg_pod_rom",
    "build_gmg_qm_rom",
    "build_sp1_rom",
    "build_sp2_rom",
    "rom_rhs_output",
]

# Configure logging
logger = logging.getLogger(__name__)


def _skew(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A - A.T)


def _sym(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.T)


class GmgContext:
    """
    Structure-encoding matrix G of a GMG reduction, applied without forming it.

    For a pH system G = (J - R)^{-1}, applied through one LU factorization of J - R.
    """

    def __init__(
        self,
        apply: Callable[[np.ndarray], np.ndarray],
        apply_transposed: Callable[[np.ndarray], np.ndarray],
        label: str = "G",
    ):
        self.apply = apply
        self.apply_transposed = apply_transposed
        self.label = label

    @classmethod
    def from_system(cls, sys: PHSystem) -> "GmgContext":
        factorization = DenseFactorization(sys.JR, operation="rom.GmgContext")
        logger.debug(f"J - R factorized, condition estimate {factorization.condition:.3e}")
        return cls(factorization.solve, factorization.solve_transposed, label="(J - R)^-1")

    @classmethod
    def from_matrix(cls, G: np.ndarray, label: str = "G") -> "GmgContext":
        G = np.asarray(G, dtype=float)
        return cls(lambda X: G @ X, lambda X: G.T @ X, label=label)


def gmg_reduction(V: np.ndarray, ctx: GmgContext, condition_limit: Optional[float] = None) -> np.ndarray:
    """
    GMG reduction matrix W = G^T V (V^T G V)^{-T}, so that W^T V = I.

    Args:
        V: Basis, N x r
        ctx: Structure-encoding matrix G
        condition_limit: Largest admissible condition number of V^T G V

    Returns:
        W, N x r

    Raises:
        SGMembershipError: if V^T G V is singular or worse conditioned than the limit
    """
    limit = settings.SG_CONDITION_LIMIT if condition_limit is None else condition_limit
    V = np.asarray(V, dtype=float)
    r = V.shape[1]
    gram = V.T @ ctx.apply(V)
    cond = float(np.linalg.cond(gram)) if r else 1.0
    if not np.isfinite(cond) or cond > limit:
        raise SGMembershipError("V^T G V is not safely invertible", reduced_dim=r, condition=cond,
                                operation="rom.gmg_reduction")
    return solve_dense(gram, ctx.apply_transposed(V).T, operation="rom.gmg_reduction").T


class ReducedHamiltonian:
    """
    Offline factors of H_red(x_red) = H_DEIM(basis @ w), w = lift(x_red).

    With a DEIM model only basis^T Q basis, the d selected rows C^T basis and
    basis^T C are kept, and p, q are evaluated on d entries, so an evaluation
    never touches an N-vector. Without one, p and q act on the full reconstruction.
    """

    def __init__(self, H: SplitHamiltonian, basis: np.ndarray, deim: Optional[DeimModel] = None):
        self.H = H
        self.deim = deim
        self.basis_Q_basis = _sym(basis.T @ (H.Q @ basis))
        if deim is not None:
            self.indices = deim.indices
            self.C_basis = deim.C.T @ basis
            self.basis_C = basis.T @ deim.C
            self.basis = None
        else:
            self.basis = basis

    def value(self, w: np.ndarray) -> float:
        if self.deim is not None:
            nonlinear = self.H.p_at(self.indices, self.C_basis @ w)
        else:
            nonlinear = self.H.p(self.basis @ w)
        return float(0.5 * w @ (self.basis_Q_basis @ w) + nonlinear)

    def lifted_gradient(self, w: np.ndarray) -> np.ndarray:
        """basis^T grad H_DEIM(basis @ w)"""
        if self.deim is not None:
            nonlinear = self.basis_C @ self.H.q_at(self.indices, self.C_basis @ w)
        else:
            nonlinear = self.basis.T @ self.H.q(self.basis @ w)
        return self.basis_Q_basis @ w + nonlinear


class ReducedPHSystem(ABC):
    """
    Reduced pH model on R^r.

    Subclasses provide the structure matrices (J_red, R_red) at a reduced state and the
    dense reduction matrix W used for inspection.
    """

    def __init__(
        self,
        method: str,
        embedding: BaseEmbedding,
        hamiltonian: ReducedHamiltonian,
        x0: np.ndarray,
        B_red: np.ndarray,
    ):
        self.method = method
        self.embedding = embedding
        self.reduced_hamiltonian = hamiltonian
        self.x0 = np.asarray(x0, dtype=float)
        self.B_red = np.asarray(B_red, dtype=float)

    @property
    def r(self) -> int:
        return self.embedding.r

    @property
    def m(self) -> int:
        return self.B_red.shape[1]

    @abstractmethod
    def structure(self, x_red: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(J_red, R_red) at x_red."""
        pass

    @abstractmethod
    def reduction_matrix(self, x_red: np.ndarray) -> np.ndarray:
        """Dense N x r reduction matrix W(x_red)."""
        pass

    def hamiltonian(self, x_red: np.ndarray) -> float:
        return self.reduced_hamiltonian.value(self.embedding.lift(x_red))

    def grad_hamiltonian(self, x_red: np.ndarray) -> np.ndarray:
        w = self.embedding.lift(x_red)
        S = self.embedding.lift_jacobian(x_red)
        return S.T @ self.reduced_hamiltonian.lifted_gradient(w)

    def rhs_output(self, x_red: np.ndarray, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        g = self.grad_hamiltonian(x_red)
        J_red, R_red = self.structure(x_red)
        return (J_red - R_red) @ g + self.B_red @ u, self.B_red.T @ g

    def rhs(self, x_red: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.rhs_output(x_red, u)[0]

    def output(self, x_red: np.ndarray) -> np.ndarray:
        return self.B_red.T @ self.grad_hamiltonian(x_red)

    def dissipation_rate(self, x_red: np.ndarray) -> float:
        g = self.grad_hamiltonian(x_red)
        _, R_red = self.structure(x_red)
        return float(g @ (R_red @ g))

    def structure_checks(
        self,
        rng: Optional[np.random.Generator] = None,
        n_samples: Optional[int] = None,
        scale: float = 0.1,
    ) -> List[CheckResult]:
        """
        Audit the reduced structure at random reduced states around x0.

        Returns the worst value over all samples for each check.
        """
        rng = np.random.default_rng(0) if rng is None else rng
        n_samples = settings.STRUCTURE_CHECK_SAMPLES if n_samples is None else n_samples
        worst = {"skew": 0.0, "psd": 0.0, "projection": 0.0, "power": 0.0}
        for _ in range(n_samples):
            x_red = self.x0 + scale * rng.standard_normal(self.r)
            u = rng.standard_normal(self.m)
            J_red, R_red = self.structure(x_red)
            worst["skew"] = max(worst["skew"], np.linalg.norm(J_red + J_red.T) / max(1.0, np.linalg.norm(J_red)))
            r_norm = max(np.linalg.norm(R_red), 1e-300)
            worst["psd"] = max(worst["psd"], max(0.0, -np.linalg.eigvalsh(_sym(R_red))[0]) / r_norm)
            W = self.reduction_matrix(x_red)
            D = self.embedding.jacobian(x_red)
            worst["projection"] = max(worst["projection"], np.linalg.norm(W.T @ D - np.eye(self.r)))
            g = self.grad_hamiltonian(x_red)
            dx, y = self.rhs_output(x_red, u)
            terms = np.array([y @ u, dx @ g, g @ (R_red @ g)])
            balance = abs(terms[0] - terms[1] - terms[2]) / (np.sum(np.abs(terms)) + 1e-300)
            worst["power"] = max(worst["power"], balance)

        checks = [
            CheckResult(name="J_red skew-symmetric", passed=worst["skew"] <= 1e-9, value=worst["skew"], tolerance=1e-9),
            CheckResult(name="R_red positive semidefinite", passed=worst["psd"] <= 1e-9, value=worst["psd"],
                        tolerance=1e-9),
            CheckResult(name="W^T Dphi = I", passed=worst["projection"] <= 1e-9, value=worst["projection"],
                        tolerance=1e-9),
            CheckResult(name="reduced power balance", passed=worst["power"] <= 1e-8, value=worst["power"],
                        tolerance=1e-8),
        ]
        if self.method.startswith("GMG"):
            port = np.zeros((self.r, self.m))
            port[: self.m, : self.m] = np.eye(self.m)
            deviation = float(np.linalg.norm(self.B_red - port))
            checks.append(CheckResult(name="B_red = [I; 0]", passed=deviation <= 1e-12, value=deviation,
                                      tolerance=1e-12))
        return checks


class LinearReducedPHSystem(ReducedPHSystem):
    """Reduced model with constant J_red, R_red, B_red on a linear embedding"""

    def __init__(
        self,
        method: str,
        embedding: LinearEmbedding,
        hamiltonian: ReducedHamiltonian,
        x0: np.ndarray,
        W: np.ndarray,
        sys: PHSystem,
        B_red: Optional[np.ndarray] = None,
    ):
        B_red = W.T @ sys.B if B_red is None else B_red
        super().__init__(method, embedding, hamiltonian, x0, B_red)
        self.W = W
        self.J_red = _skew(W.T @ sys.J @ W)
        self.R_red = _sym(W.T @ sys.R @ W)

    def structure(self, x_red: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return self.J_red, self.R_red

    def reduction_matrix(self, x_red: np.ndarray) -> np.ndarray:
        return self.W

    def operator_tables(self) -> Dict[str, np.ndarray]:
        """Constant reduced operators for export."""
        return {
            "J_red": self.J_red,
            "R_red": self.R_red,
            "B_red": self.B_red,
            "VQV": self.reduced_hamiltonian.basis_Q_basis,
        }


class ManifoldReducedPHSystem(ReducedPHSystem):
    """
    GMG reduced model on a quadratic manifold with state-dependent J_red, R_red.

    With D(x_red) = basis @ S(x_red) the r x r Gram matrix S^T (basis^T K) S,
    K = (J - R)^{-1} basis, is rebuilt from cached factors at every evaluation.
    """

    def __init__(
        self,
        embedding: QuadraticEmbedding,
        hamiltonian: ReducedHamiltonian,
        x0: np.ndarray,
        sys: PHSystem,
        ctx: GmgContext,
        condition_limit: Optional[float] = None,
        runtime_checks: Optional[bool] = None,
    ):
        m = embedding.m
        B_red = np.zeros((embedding.r, m))
        B_red[:m, :m] = np.eye(m)
        super().__init__("GMG-QM", embedding, hamiltonian, x0, B_red)
        self.condition_limit = settings.SG_CONDITION_LIMIT if condition_limit is None else condition_limit
        self.runtime_checks = settings.RUNTIME_STRUCTURE_CHECKS if runtime_checks is None else runtime_checks

        basis = embedding.basis
        m, k = embedding.m, embedding.r - embedding.m
        self.K = ctx.apply(basis)
        self.K_B, self.K_1, self.K_2 = self.K[:, :m], self.K[:, m:m + k], self.K[:, m + k:]
        self.L = ctx.apply_transposed(basis)
        self.gram_factor = basis.T @ self.K
        self.J_factor = _skew(self.L.T @ (sys.J @ self.L))
        self.R_factor = _sym(self.L.T @ (sys.R @ self.L))

    def _inverse_gram_times_lift(self, x_red: np.ndarray) -> np.ndarray:
        """Gram^{-1} S^T, r x s"""
        S = self.embedding.lift_jacobian(x_red)
        gram = S.T @ self.gram_factor @ S
        cond = float(np.linalg.cond(gram))
        if not np.isfinite(cond) or cond > self.condition_limit:
            raise SGMembershipError("tangent basis left the admissible set", reduced_dim=self.r,
                                    condition=cond, state_norm=float(np.linalg.norm(x_red)),
                                    operation="rom.rom_rhs_output")
        try:
            return solve_dense(gram, S.T, operation="rom.rom_rhs_output")
        except SingularMatrixError as e:
            raise SGMembershipError("Gram matrix singular", reduced_dim=self.r, condition=e.condition,
                                    state_norm=float(np.linalg.norm(x_red)), operation="rom.rom_rhs_output")

    def structure(self, x_red: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        X = self._inverse_gram_times_lift(x_red)
        J_red = _skew(X @ self.J_factor @ X.T)
        R_red = _sym(X @ self.R_factor @ X.T)
        if self.runtime_checks:
            lam_min = np.linalg.eigvalsh(R_red)[0]
            if lam_min < -1e-9 * max(np.linalg.norm(R_red), 1e-300):
                raise StructureError(f"R_red lost semidefiniteness (eigenvalue {lam_min:.3e})",
                                     operation="rom.rom_rhs_output")
        return J_red, R_red

    def reduction_matrix(self, x_red: np.ndarray) -> np.ndarray:
        return self.L @ self._inverse_gram_times_lift(x_red).T


def _check_port_span(B: np.ndarray, D: np.ndarray, operation: str):
    """span(B) must lie in span(D)."""
    coeffs, *_ = np.linalg.lstsq(D, B, rcond=None)
    miss = float(np.linalg.norm(B - D @ coeffs))
    if miss > settings.PORT_SPAN_TOL * max(np.linalg.norm(B), 1e-300):
        raise EmbeddingError(f"span(B) is not contained in the tangent space (miss {miss:.3e})", operation=operation)


def build_gmg_pod_rom(sys: PHSystem, emb: LinearEmbedding, deim: Optional[DeimModel],
                      ctx: Optional[GmgContext] = None) -> LinearReducedPHSystem:
    """
    GMG reduced model on a port-aligned linear embedding.

    Args:
        sys: Full-order system
        emb: Linear embedding V = [B, Vbar]
        deim: DEIM model of the Hamiltonian, or None to evaluate p exactly
        ctx: Factorized G = (J - R)^{-1}; built from sys when omitted

    Returns:
        LinearReducedPHSystem with B_red = [I; 0]
    """
    _check_port_span(sys.B, emb.V, "rom.build_gmg_pod_rom")
    ctx = GmgContext.from_system(sys) if ctx is None else ctx
    W = gmg_reduction(emb.V, ctx)
    m = sys.m
    B_red = np.zeros((emb.r, m))
    B_red[:m, :m] = np.eye(m)
    rom = LinearReducedPHSystem("GMG-POD", emb, ReducedHamiltonian(sys.H, emb.V, deim), emb.reduce(sys.x0),
                                W, sys, B_red=B_red)
    logger.info(f"GMG-POD reduced model built: r={emb.r}")
    return rom


def build_gmg_qm_rom(sys: PHSystem, emb: QuadraticEmbedding, deim: Optional[DeimModel],
                     ctx: Optional[GmgContext] = None) -> ManifoldReducedPHSystem:
    """GMG reduced model on a quadratic manifold; x0_red = [B, V1]^+ x0."""
    x0_red = emb.reduce(sys.x0)
    _check_port_span(sys.B, emb.jacobian(x0_red), "rom.build_gmg_qm_rom")
    ctx = GmgContext.from_system(sys) if ctx is None else ctx
    rom = ManifoldReducedPHSystem(emb, ReducedHamiltonian(sys.H, emb.basis, deim), x0_red, sys, ctx)
    rom.structure(x0_red)
    logger.info(f"GMG-QM reduced model built: r={emb.r}, r_n={emb.r_n}")
    return rom


def build_sp1_rom(sys: PHSystem, X: np.ndarray, r: int) -> LinearReducedPHSystem:
    """
    Structure-preserving POD baseline for quadratic Hamiltonians.

    W = Q V (V^T Q V)^{-1} with V the plain POD basis of X.

    Raises:
        StructureError: if the Hamiltonian is not purely quadratic
    """
    if not sys.H.is_quadratic:
        raise StructureError("SP1 requires a purely quadratic Hamiltonian", operation="rom.build_sp1_rom")
    emb = build_pod_embedding(X, r)
    W = gmg_reduction(emb.V, GmgContext.from_matrix(sys.H.Q, label="Q"))
    rom = LinearReducedPHSystem("SP1", emb, ReducedHamiltonian(sys.H, emb.V), emb.reduce(sys.x0), W, sys)
    logger.info(f"SP1 reduced model built: r={r}")
    return rom


def build_sp2_rom(sys: PHSystem, X: np.ndarray, X_gradH: np.ndarray, r: int,
                  deim: Optional[DeimModel] = None) -> LinearReducedPHSystem:
    """
    Structure-preserving POD baseline with a gradient-snapshot test basis.

    W = V_gradH (V_POD^T V_gradH)^{-1}, so W^T V_POD = I.

    Raises:
        SingularMatrixError: if V_POD^T V_gradH is singular
    """
    emb = build_pod_embedding(X, r)
    V_grad = deflated_basis(X_gradH, np.zeros((X_gradH.shape[0], 0)), r)
    coupling = emb.V.T @ V_grad
    W = solve_dense(coupling.T, V_grad.T, operation="rom.build_sp2_rom").T
    rom = LinearReducedPHSystem("SP2", emb, ReducedHamiltonian(sys.H, emb.V, deim), emb.reduce(sys.x0), W, sys)
    logger.info(f"SP2 reduced model built: r={r}")
    return rom


def rom_rhs_output(rom: ReducedPHSystem, x_red: np.ndarray, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Reduced right-hand side and output.

    Args:
        rom: Reduced model
        x_red: Reduced state of length r
        u: Input of length m

    Returns:
        (dx_red/dt, y_red)
    """
    return rom.rhs_output(np.asarray(x_red, dtype=float), np.asarray(u, dtype=float))
