"""Full-order port-Hamiltonian systems.

A system is dx/dt = (J - R) grad H(x) + B u, y = B^T grad H(x) with the Hamiltonian
split as H(x) = 1/2 x^T Q x + p(x).
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, List, Optional

import numpy as np

from app.core.exceptions import DimensionMismatchError, StructureError
from app.core.numerics import EPS
from app.schemas.experiment import InputSection
from app.schemas.results import CheckResult

__all__ = [
    "SplitHamiltonian",
    "PHSystem",
    "InputSignal",
    "eval_rhs",
    "eval_output",
    "grad_hamiltonian",
    "power_balance_residual",
]

# Configure logging
logger = logging.getLogger(__name__)


def _zero_p(x: np.ndarray) -> float:
    return 0.0


def _zero_q(x: np.ndarray) -> np.ndarray:
    return np.zeros_like(x, dtype=float)


def _zero_p_local(indices: np.ndarray, values: np.ndarray) -> float:
    return 0.0


def _zero_q_local(indices: np.ndarray, values: np.ndarray) -> np.ndarray:
    return np.zeros(len(values))


def _check_vector(v: np.ndarray, size: int, name: str, operation: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (size,):
        raise DimensionMismatchError(f"{name} has shape {v.shape}, expected ({size},)", operation=operation)
    return v


@dataclass(frozen=True, eq=False)
class SplitHamiltonian:
    """
    Hamiltonian H(x) = 1/2 x^T Q x + p(x).

    Attributes:
        Q: Symmetric positive semidefinite quadratic part
        p: Non-quadratic part
        q: Gradient of p
        hess_p: Hessian of p
        x_e: Equilibrium with grad H(x_e) = 0
        is_quadratic: True when p vanishes identically
        p_local: p(x) for x supported on the given indices, from (indices, values);
            only valid when p is a sum of componentwise terms vanishing at zero
        q_local: Entries of q at the given indices for the same sparse argument
    """
    Q: np.ndarray
    p: Callable[[np.ndarray], float]
    q: Callable[[np.ndarray], np.ndarray]
    hess_p: Callable[[np.ndarray], np.ndarray]
    x_e: np.ndarray
    is_quadratic: bool = False
    p_local: Optional[Callable[[np.ndarray, np.ndarray], float]] = None
    q_local: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None

    @classmethod
    def quadratic(cls, Q: np.ndarray, x_e: Optional[np.ndarray] = None) -> "SplitHamiltonian":
        """Purely quadratic Hamiltonian with p = 0."""
        Q = np.asarray(Q, dtype=float)
        n = Q.shape[0]
        x_e = np.zeros(n) if x_e is None else np.asarray(x_e, dtype=float)
        return cls(Q=Q, p=_zero_p, q=_zero_q, hess_p=lambda x: np.zeros((n, n)), x_e=x_e, is_quadratic=True,
                   p_local=_zero_p_local, q_local=_zero_q_local)

    @property
    def N(self) -> int:
        return self.Q.shape[0]

    def value(self, x: np.ndarray) -> float:
        return float(0.5 * x @ (self.Q @ x) + self.p(x))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return self.Q @ x + self.q(x)

    def hessian(self, x: np.ndarray) -> np.ndarray:
        return self.Q + self.hess_p(x)

    def _scatter(self, indices: np.ndarray, values: np.ndarray) -> np.ndarray:
        x = np.zeros(self.N)
        x[indices] = values
        return x

    def p_at(self, indices: np.ndarray, values: np.ndarray) -> float:
        """p at the vector holding ``values`` at ``indices`` and zero elsewhere."""
        if self.p_local is not None:
            return float(self.p_local(indices, values))
        return float(self.p(self._scatter(indices, values)))

    def q_at(self, indices: np.ndarray, values: np.ndarray) -> np.ndarray:
        """Entries ``indices`` of q at the same sparse argument as p_at."""
        if self.q_local is not None:
            return np.asarray(self.q_local(indices, values), dtype=float)
        return self.q(self._scatter(indices, values))[indices]

    def structure_checks(self, rng: Optional[np.random.Generator] = None, scale: float = 0.5) -> List[CheckResult]:
        """Symmetry and semidefiniteness of Q, the equilibrium, and consistency of p and q."""
        Q = self.Q
        q_norm = np.linalg.norm(Q)
        checks = [
            CheckResult(name="Q symmetric", passed=bool(np.linalg.norm(Q - Q.T) <= 1e-12 * q_norm),
                        value=float(np.linalg.norm(Q - Q.T)), tolerance=1e-12 * q_norm),
        ]
        lam_min = float(np.linalg.eigvalsh(0.5 * (Q + Q.T))[0]) if self.N else 0.0
        checks.append(CheckResult(name="Q positive semidefinite", passed=bool(-lam_min <= 1e-10 * q_norm),
                                  value=max(0.0, -lam_min), tolerance=1e-10 * q_norm))
        g_e = float(np.linalg.norm(self.gradient(self.x_e)))
        checks.append(CheckResult(name="gradient vanishes at equilibrium", passed=g_e <= 1e-10,
                                  value=g_e, tolerance=1e-10))

        rng = np.random.default_rng(0) if rng is None else rng
        x = self.x_e + scale * rng.standard_normal(self.N)
        mismatch = _gradient_mismatch(self.p, self.q, x)
        checks.append(CheckResult(name="q matches finite differences of p", passed=mismatch <= 1e-6,
                                  value=mismatch, tolerance=1e-6))
        if self.p_local is not None or self.q_local is not None:
            indices = np.sort(rng.choice(self.N, size=min(self.N, 3), replace=False))
            values = scale * rng.standard_normal(indices.size)
            full = self._scatter(indices, values)
            local = (abs(self.p_at(indices, values) - self.p(full))
                     + float(np.linalg.norm(self.q_at(indices, values) - self.q(full)[indices])))
            checks.append(CheckResult(name="componentwise p and q match the full evaluation",
                                      passed=local <= 1e-12 * (1.0 + abs(self.p(full))), value=local,
                                      tolerance=1e-12 * (1.0 + abs(self.p(full)))))
        return checks


def _gradient_mismatch(p: Callable, q: Callable, x: np.ndarray) -> float:
    """Relative distance between q(x) and the central-difference gradient of p."""
    fd = np.empty_like(x)
    for i in range(x.size):
        h = 1e-5 * (1.0 + abs(x[i]))
        e = np.zeros_like(x)
        e[i] = h
        fd[i] = (p(x + e) - p(x - e)) / (2.0 * h)
    g = q(x)
    return float(np.linalg.norm(fd - g) / max(np.linalg.norm(g), 1e-10))


@dataclass(frozen=True, eq=False)
class PHSystem:
    """
    Full-order port-Hamiltonian model.

    Shapes and finiteness are checked on construction; call validate() for the
    structural invariants (skew J, positive semidefinite R, invertible J - R, rank of B).
    """
    J: np.ndarray
    R: np.ndarray
    B: np.ndarray
    H: SplitHamiltonian
    x0: np.ndarray
    name: str = field(default="ph_system", compare=False)

    def __post_init__(self):
        n = self.H.N
        for label, mat in (("J", self.J), ("R", self.R), ("Q", self.H.Q)):
            if mat.shape != (n, n):
                raise DimensionMismatchError(f"{label} has shape {mat.shape}, expected ({n}, {n})",
                                             operation="ph_core.PHSystem")
        if self.B.ndim != 2 or self.B.shape[0] != n:
            raise DimensionMismatchError(f"B has shape {self.B.shape}, expected ({n}, m)",
                                         operation="ph_core.PHSystem")
        _check_vector(self.x0, n, "x0", "ph_core.PHSystem")
        for label, arr in (("J", self.J), ("R", self.R), ("B", self.B), ("Q", self.H.Q), ("x0", self.x0)):
            if not np.all(np.isfinite(arr)):
                raise StructureError(f"{label} has non-finite entries", operation="ph_core.PHSystem")

    @property
    def N(self) -> int:
        return self.H.N

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @cached_property
    def JR(self) -> np.ndarray:
        """J - R"""
        return self.J - self.R

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return self.H.gradient(x)

    def hamiltonian(self, x: np.ndarray) -> float:
        return self.H.value(x)

    def rhs(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.JR @ self.H.gradient(x) + self.B @ u

    def output(self, x: np.ndarray) -> np.ndarray:
        return self.B.T @ self.H.gradient(x)

    def dissipation_rate(self, x: np.ndarray) -> float:
        g = self.H.gradient(x)
        return float(g @ (self.R @ g))

    def rhs_jacobian(self, x: np.ndarray) -> np.ndarray:
        """(J - R)(Q + Hessian of p)"""
        return self.JR @ self.H.hessian(x)

    def structure_checks(self, rng: Optional[np.random.Generator] = None) -> List[CheckResult]:
        """Evaluate every structural invariant of the model and its Hamiltonian."""
        J, R = self.J, self.R
        j_norm = np.linalg.norm(J)
        r_norm = np.linalg.norm(R)
        skew = float(np.linalg.norm(J + J.T))
        asym = float(np.linalg.norm(R - R.T))
        lam_min = float(np.linalg.eigvalsh(0.5 * (R + R.T))[0])
        cond = float(np.linalg.cond(self.JR))
        rank = int(np.linalg.matrix_rank(self.B))
        checks = [
            CheckResult(name="J skew-symmetric", passed=skew <= 1e-12 * j_norm, value=skew, tolerance=1e-12 * j_norm),
            CheckResult(name="R symmetric", passed=asym <= 1e-12 * r_norm, value=asym, tolerance=1e-12 * r_norm),
            CheckResult(name="R positive semidefinite", passed=-lam_min <= 1e-10 * r_norm,
                        value=max(0.0, -lam_min), tolerance=1e-10 * r_norm),
            CheckResult(name="J - R invertible", passed=bool(np.isfinite(cond) and cond < 1.0 / EPS),
                        value=cond, tolerance=1.0 / EPS),
            CheckResult(name="B full column rank", passed=rank == self.m, value=float(self.m - rank), tolerance=0.0),
        ]
        return checks + self.H.structure_checks(rng)

    def validate(self, rng: Optional[np.random.Generator] = None) -> "PHSystem":
        failures = [c for c in self.structure_checks(rng) if not c.passed]
        if failures:
            detail = "; ".join(c.describe() for c in failures)
            logger.error(f"Structural validation of {self.name} failed: {detail}")
            raise StructureError(detail, operation="ph_core.validate")
        logger.debug(f"{self.name}: N={self.N}, m={self.m} passed structural validation")
        return self


class InputSignal:
    """Input u(t) returning a vector of length m"""

    def __init__(self, func: Callable[[float], np.ndarray], m: int, label: str = "custom"):
        self.func = func
        self.m = m
        self.label = label

    def __call__(self, t: float) -> np.ndarray:
        return np.asarray(self.func(t), dtype=float).reshape(self.m)

    @classmethod
    def zero(cls, m: int) -> "InputSignal":
        return cls(lambda t: np.zeros(m), m, label="zero")

    @classmethod
    def constant(cls, amplitude: float, m: int) -> "InputSignal":
        return cls(lambda t: np.full(m, amplitude), m, label=f"constant({amplitude})")

    @classmethod
    def sine(cls, amplitude: float, frequency: float, m: int) -> "InputSignal":
        return cls(lambda t: np.full(m, amplitude * np.sin(frequency * t)), m,
                   label=f"sine({amplitude}, {frequency})")

    @classmethod
    def from_section(cls, section: InputSection, m: int) -> "InputSignal":
        if section.type == "constant":
            return cls.constant(section.amplitude, m)
        return cls.sine(section.amplitude, section.frequency, m)


def grad_hamiltonian(H: SplitHamiltonian, x: np.ndarray) -> np.ndarray:
    """Q x + q(x)"""
    return H.gradient(x)


def eval_rhs(sys: PHSystem, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """
    Right-hand side (J - R)(Q x + q(x)) + B u.

    Args:
        sys: Full-order system
        x: State of length N
        u: Input of length m

    Returns:
        Time derivative of the state
    """
    x = _check_vector(x, sys.N, "x", "ph_core.eval_rhs")
    u = _check_vector(u, sys.m, "u", "ph_core.eval_rhs")
    return sys.rhs(x, u)


def eval_output(sys: PHSystem, x: np.ndarray) -> np.ndarray:
    """Port output B^T (Q x + q(x))."""
    x = _check_vector(x, sys.N, "x", "ph_core.eval_output")
    return sys.output(x)


def power_balance_residual(sys: PHSystem, x: np.ndarray, u: np.ndarray) -> float:
    """y^T u - [dx/dt^T grad H + (R grad H)^T grad H], zero up to rounding for a pH system."""
    x = _check_vector(x, sys.N, "x", "ph_core.power_balance_residual")
    u = _check_vector(u, sys.m, "u", "ph_core.power_balance_residual")
    g = sys.gradient(x)
    xdot = sys.rhs(x, u)
    y = sys.B.T @ g
    return float(y @ u - (xdot @ g + (sys.R @ g) @ g))
