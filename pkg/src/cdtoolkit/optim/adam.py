"""Adam and AdamW."""

import numpy as np

from ..models import OptimizerConfig, OptimizerKind, OptimizerState
from .base import Optimizer


class Adam(Optimizer):
    """Adam with bias-corrected first and second moments.

    ``weight_decay`` is applied as an L2 term on the gradient (coupled).
    """

    kind = OptimizerKind.ADAM

    def slot_names(self, config: OptimizerConfig) -> tuple[str, ...]:
        return ("m", "v")

    def _decay(self, param: np.ndarray, grad: np.ndarray, config: OptimizerConfig) -> tuple[
        np.ndarray, np.ndarray
    ]:
        if config.weight_decay > 0:
            grad = grad + config.weight_decay * param
        return param, grad

    def update(
        self,
        params: list[np.ndarray],
        grads: list[np.ndarray],
        state: OptimizerState,
        config: OptimizerConfig,
    ) -> tuple[list[np.ndarray], OptimizerState]:
        t = state.step + 1
        beta1, beta2 = config.beta1, config.beta2
        bias1 = 1.0 - beta1**t
        bias2 = 1.0 - beta2**t

        new_params: list[np.ndarray] = []
        new_m: list[np.ndarray] = []
        new_v: list[np.ndarray] = []

        for param, grad, m, v in zip(
            params, grads, state.slots["m"], state.slots["v"], strict=True
        ):
            param, grad = self._decay(param, grad, config)
            m = beta1 * m + (1.0 - beta1) * grad
            v = beta2 * v + (1.0 - beta2) * grad**2
            m_hat = m / bias1
            v_hat = v / bias2
            step = m_hat / (np.sqrt(v_hat) + config.epsilon)
            new_params.append(param - config.learning_rate * step)
            new_m.append(m)
            new_v.append(v)

        return new_params, OptimizerState(kind=self.kind, step=t, slots={"m": new_m, "v": new_v})


class AdamW(Adam):
    """Adam with decoupled weight decay: ``p <- p - lr * wd * p`` before the Adam step."""

    kind = OptimizerKind.ADAMW

    def _decay(self, param: np.ndarray, grad: np.ndarray, config: OptimizerConfig) -> tuple[
        np.ndarray, np.ndarray
    ]:
        if config.weight_decay > 0:
            param = param - config.learning_rate * config.weight_decay * param
        return param, grad
