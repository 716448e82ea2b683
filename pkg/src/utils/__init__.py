"""Utility modules - configuration, logging, exceptions, error handling."""

from src.utils.config import Config, load_config, validate_config
from src.utils.logging import get_logger, setup_logging

__all__ = [
    "Config",
    "load_config",
    "validate_config",
    "get_logger",
    "setup_logging",
]
