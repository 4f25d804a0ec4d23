from .linear_msd import build_linear_msd
from .nonlinear_msd import bidiagonal_difference, build_nonlinear_msd, build_nonlinear_msd_untransformed
from .registry import build_system, get_model_builder

__all__ = [
    'build_linear_msd',
    'bidiagonal_difference',
    'build_nonlinear_msd',
    'build_nonlinear_msd_untransformed',
    'build_system',
    'get_model_builder',
]
