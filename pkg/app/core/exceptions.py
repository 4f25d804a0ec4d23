from typing import Optional

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_NUMERICAL_FAILURE = 2
EXIT_IO_ERROR = 3


class PhMorException(Exception):
    """Base exception class for toolkit errors"""
    def __init__(self, detail: str, operation: str = "", exit_code: int = EXIT_NUMERICAL_FAILURE):
        super().__init__(detail)
        self.detail = detail
        self.operation = operation
        self.exit_code = exit_code

    def __str__(self) -> str:
        if self.operation:
            return f"[{self.operation}] {self.detail}"
        return self.detail


class ConfigError(PhMorException):
    """Exception for invalid or missing experiment configuration"""
    def __init__(self, detail: str, operation: str = "config"):
        super().__init__(detail=detail, operation=operation, exit_code=EXIT_CONFIG_ERROR)


class OutputError(PhMorException):
    """Exception for failures writing or reading result files"""
    def __init__(self, detail: str, path: str = "", operation: str = "io"):
        super().__init__(detail=detail, operation=operation, exit_code=EXIT_IO_ERROR)
        self.path = path


class NumericalError(PhMorException):
    """Exception for numerical failures"""
    def __init__(self, detail: str, operation: str = ""):
        super().__init__(detail=detail, operation=operation, exit_code=EXIT_NUMERICAL_FAILURE)


class DimensionMismatchError(NumericalError):
    """Exception for inconsistent vector or matrix shapes"""


class SvdConvergenceError(NumericalError):
    """Exception for an SVD that failed to converge"""


class SingularMatrixError(NumericalError):
    """Exception for matrices that are singular to working precision"""
    def __init__(self, detail: str, condition: float = float("inf"), operation: str = ""):
        super().__init__(detail=f"{detail} (condition estimate {condition:.3e})", operation=operation)
        self.condition = condition


class StructureError(NumericalError):
    """Exception for violated port-Hamiltonian structure"""


class NonFiniteStateError(NumericalError):
    """Exception for NaN or Inf appearing in a simulated state"""


class DeimError(NumericalError):
    """Exception for DEIM construction errors"""


class EmbeddingError(NumericalError):
    """Exception for embedding construction errors"""


class GridMismatchError(NumericalError):
    """Exception for trajectories living on different time grids"""


class SGMembershipError(NumericalError):
    """Exception for a reduction basis outside the admissible set of the GMG map"""
    def __init__(
        self,
        detail: str,
        reduced_dim: int,
        condition: float,
        state_norm: Optional[float] = None,
        operation: str = "",
    ):
        message = f"{detail} (r={reduced_dim}, condition {condition:.3e}"
        if state_norm is not None:
            message += f", |x_red|={state_norm:.3e}"
        super().__init__(detail=message + ")", operation=operation)
        self.reduced_dim = reduced_dim
        self.condition = condition
        self.state_norm = state_norm
