"""Optimizer update rules."""

from functools import cache

from .adam import Adam, AdamW
from .base import Optimizer, OptimizerRegistry
from .sgd import SGD

__all__ = [
    "SGD",
    "Adam",
    "AdamW",
    "Optimizer",
    "OptimizerRegistry",
    "create_default_registry",
    "default_registry",
]


def create_default_registry() -> OptimizerRegistry:
    """Create an optimizer registry with the built-in rules.

    Returns:
        Registry with SGD, Adam and AdamW
    """
    registry = OptimizerRegistry()
    registry.register(SGD())
    registry.register(Adam())
    registry.register(AdamW())
    return registry


@cache
def default_registry() -> OptimizerRegistry:
    """Shared registry used when callers do not pass their own."""
    return create_default_registry()
