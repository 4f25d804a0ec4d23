import logging

from app.benchmarks.linear_msd import build_linear_msd
from app.benchmarks.nonlinear_msd import build_nonlinear_msd
from app.core.exceptions import ConfigError
from app.services.ph_core import PHSystem

# Configure logging
logger = logging.getLogger(__name__)


def get_model_builder(model_type: str):
    """
    Get a benchmark builder by model type

    Args:
        model_type: The ``type`` discriminator of the model section

    Returns:
        Function mapping the model config to a PHSystem, or None if not found
    """
    model_builders = {
        "linear_msd": build_linear_msd,
        "nonlinear_msd": lambda cfg: build_nonlinear_msd(cfg)[0],
    }

    return model_builders.get(model_type)


def build_system(model_cfg) -> PHSystem:
    """Build the full-order system described by a model section."""
    builder = get_model_builder(model_cfg.type)
    if builder is None:
        raise ConfigError(f"unknown model type '{model_cfg.type}'", operation="bench.build_system")
    sys = builder(model_cfg)
    logger.info(f"Full-order model {sys.name} built: N={sys.N}, m={sys.m}")
    return sys
