"""Hypersequent kernel and density-elimination engine."""

from loguru import logger

__version__ = "0.1.0"

logger.disable("densify")
