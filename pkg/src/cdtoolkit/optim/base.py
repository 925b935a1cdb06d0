"""Base optimizer interface and registry."""

from abc import ABC, abstractmethod

import numpy as np

from ..errors import ConfigurationError
from ..models import OptimizerConfig, OptimizerKind, OptimizerState


class Optimizer(ABC):
    """Base class for parameter update rules.

    Implementations are stateless; all buffers live in ``OptimizerState`` so
    a network and its optimizer state can be copied or moved between threads.
    """

    kind: OptimizerKind

    @abstractmethod
    def slot_names(self, config: OptimizerConfig) -> tuple[str, ...]:
        """Names of the per-parameter buffers this rule keeps.

        Args:
            config: Optimizer configuration

        Returns:
            Slot names, each holding one array per parameter
        """

    @abstractmethod
    def update(
        self,
        params: list[np.ndarray],
        grads: list[np.ndarray],
        state: OptimizerState,
        config: OptimizerConfig,
    ) -> tuple[list[np.ndarray], OptimizerState]:
        """Apply one step.

        Args:
            params: Current parameter arrays (not modified)
            grads: Gradients, parallel to ``params``
            state: Buffers from the previous step
            config: Optimizer configuration

        Returns:
            Tuple of (new parameters, new state)
        """

    def init_state(self, params: list[np.ndarray], config: OptimizerConfig) -> OptimizerState:
        """Create zero-initialized buffers for ``params``.

        Args:
            params: Parameter arrays
            config: Optimizer configuration

        Returns:
            Fresh optimizer state at step 0
        """
        return OptimizerState(
            kind=self.kind,
            step=0,
            slots={name: [np.zeros_like(p) for p in params] for name in self.slot_names(config)},
        )

    def check_state(self, params: list[np.ndarray], state: OptimizerState) -> None:
        """Ensure ``state`` belongs to this optimizer and matches ``params``.

        Raises:
            ConfigurationError: If the state was built for another optimizer
                or other parameter shapes
        """
        if state.kind != self.kind:
            raise ConfigurationError(
                f"Optimizer state is for '{state.kind.value}', not '{self.kind.value}'"
            )
        for name, buffers in state.slots.items():
            if [b.shape for b in buffers] != [p.shape for p in params]:
                raise ConfigurationError(f"Optimizer slot '{name}' does not match parameters")


class OptimizerRegistry:
    """Registry mapping optimizer kinds to update rules."""

    def __init__(self) -> None:
        """Initialize the optimizer registry."""
        self._optimizers: dict[OptimizerKind, Optimizer] = {}

    def register(self, optimizer: Optimizer) -> None:
        """Register an update rule under its kind.

        Args:
            optimizer: Optimizer instance
        """
        self._optimizers[optimizer.kind] = optimizer

    def get_optimizer(self, kind: OptimizerKind) -> Optimizer:
        """Get the update rule for a kind.

        Args:
            kind: Optimizer kind

        Returns:
            Optimizer instance

        Raises:
            ConfigurationError: If no rule is registered for the kind
        """
        if kind not in self._optimizers:
            raise ConfigurationError(f"No optimizer registered for kind '{kind.value}'")
        return self._optimizers[kind]

    def has_optimizer(self, kind: OptimizerKind) -> bool:
        """Check whether a rule is registered for a kind."""
        return kind in self._optimizers
