from typing import Any, Dict
import logging
import json
from pathlib import Path

from pydantic import ValidationError

from app.core.exceptions import ConfigError
from app.schemas.experiment import ExperimentConfig

# Configure logging
logger = logging.getLogger(__name__)


def _describe_validation_error(error: ValidationError) -> str:
    """Schema violations as 'section.field: message', joined by '; '."""
    parts = []
    for item in error.errors():
        location = ".".join(str(p) for p in item["loc"]) or "<root>"
        parts.append(f"{location}: {item['msg']}")
    return "; ".join(parts)


def parse_experiment_config(raw: Dict[str, Any], source: str = "<dict>") -> ExperimentConfig:
    """
    Validate a decoded experiment description

    Args:
        raw: Decoded JSON object
        source: Where the object came from, used in messages

    Returns:
        ExperimentConfig

    Raises:
        ConfigError: naming the offending field
    """
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        detail = _describe_validation_error(e)
        logger.error(f"Invalid experiment config {source}: {detail}")
        raise ConfigError(f"{source}: {detail}", operation="config.parse")


def load_experiment_config(path) -> ExperimentConfig:
    """
    Read and validate an experiment config file

    Args:
        path: JSON file

    Returns:
        ExperimentConfig

    Raises:
        ConfigError: if the file is missing, not JSON, or violates the schema
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}", operation="config.load")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON (line {e.lineno}, column {e.colno}): {e.msg}",
                          operation="config.load")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror or str(e)}", operation="config.load")
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object", operation="config.load")
    config = parse_experiment_config(raw, source=str(path))
    logger.debug(f"Loaded experiment config {path} (model {config.model.type})")
    return config
