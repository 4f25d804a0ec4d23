from abc import ABC, abstractmethod
import logging
from typing import Dict

import numpy as np


class BaseEmbedding(ABC):
    """
    Abstract base class for all embeddings.

    An embedding maps reduced coordinates x_red in R^r to full states through
    phi(x_red) = basis @ lift(x_red), with a constant N x s basis and a nonlinear
    lift R^r -> R^s. The point reduction rho maps full states back and satisfies
    rho(phi(x_red)) = x_red. Subclasses implement the lift, its Jacobian and rho.
    """

    def __init__(self):
        """Initialize the embedding with a logger."""
        self.logger = logging.getLogger(self.__class__.__name__)

    @property
    @abstractmethod
    def basis(self) -> np.ndarray:
        """Constant N x s matrix multiplying the lifted coordinates."""

    @property
    def N(self) -> int:
        return self.basis.shape[0]

    @property
    @abstractmethod
    def r(self) -> int:
        """Reduced dimension."""

    @abstractmethod
    def lift(self, x_red: np.ndarray) -> np.ndarray:
        """
        Lifted coordinates w with phi(x_red) = basis @ w.

        Args:
            x_red: Reduced state of length r

        Returns:
            Vector of length s
        """
        pass

    @abstractmethod
    def lift_jacobian(self, x_red: np.ndarray) -> np.ndarray:
        """Derivative of lift, an s x r matrix."""
        pass

    @abstractmethod
    def reduce(self, x: np.ndarray) -> np.ndarray:
        """
        Point reduction rho.

        Args:
            x: Full state of length N, or an N x k matrix of states

        Returns:
            Reduced coordinates with the matching shape
        """
        pass

    @abstractmethod
    def to_tables(self) -> Dict[str, np.ndarray]:
        """Named matrices sufficient to rebuild the embedding."""
        pass

    def evaluate(self, x_red: np.ndarray) -> np.ndarray:
        return self.basis @ self.lift(x_red)

    def jacobian(self, x_red: np.ndarray) -> np.ndarray:
        return self.basis @ self.lift_jacobian(x_red)

    def evaluate_columns(self, X_red: np.ndarray) -> np.ndarray:
        """phi applied to every column."""
        return np.column_stack([self.evaluate(X_red[:, i]) for i in range(X_red.shape[1])])


def embed_eval(e: BaseEmbedding, x_red: np.ndarray) -> np.ndarray:
    """phi(x_red)"""
    return e.evaluate(np.asarray(x_red, dtype=float))


def embed_jacobian(e: BaseEmbedding, x_red: np.ndarray) -> np.ndarray:
    """D phi(x_red), an N x r matrix."""
    return e.jacobian(np.asarray(x_red, dtype=float))


def reduce_point(e: BaseEmbedding, x: np.ndarray) -> np.ndarray:
    """rho(x)"""
    return e.reduce(np.asarray(x, dtype=float))
