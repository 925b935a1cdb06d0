"""Stochastic gradient descent with optional momentum."""

import numpy as np

from ..models import OptimizerConfig, OptimizerKind, OptimizerState
from .base import Optimizer


class SGD(Optimizer):
    """Heavy-ball SGD.

    With momentum mu the velocity is ``v <- mu * v + g`` and the step is
    ``p <- p - lr * v``; with mu = 0 this is plain gradient descent. A non-zero
    ``weight_decay`` is added to the gradient as an L2 penalty.
    """

    kind = OptimizerKind.SGD

    def slot_names(self, config: OptimizerConfig) -> tuple[str, ...]:
        return ("velocity",) if config.momentum > 0 else ()

    def update(
        self,
        params: list[np.ndarray],
        grads: list[np.ndarray],
        state: OptimizerState,
        config: OptimizerConfig,
    ) -> tuple[list[np.ndarray], OptimizerState]:
        velocities = state.slots.get("velocity")
        new_params: list[np.ndarray] = []
        new_velocities: list[np.ndarray] = []

        for i, (param, grad) in enumerate(zip(params, grads, strict=True)):
            if config.weight_decay > 0:
                grad = grad + config.weight_decay * param
            if velocities is not None:
                step = config.momentum * velocities[i] + grad
                new_velocities.append(step)
            else:
                step = grad
            new_params.append(param - config.learning_rate * step)

        slots = {"velocity": new_velocities} if velocities is not None else {}
        return new_params, OptimizerState(kind=self.kind, step=state.step + 1, slots=slots)
