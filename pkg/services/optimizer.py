"""Adaptive-moment optimizers"""

import logging
from typing import Dict, List, Sequence

import numpy as np

from config.run_config import TrainConfig
from layers.base_layer import Parameter
from utils.validators import OptimizerName

logger = logging.getLogger(__name__)


class AdamW:
    """Adam with decoupled weight decay

    With ``decoupled=False`` the decay is folded into the gradient instead
    (classic Adam with an L2 gradient term). Decay, like the step, is scaled
    by the learning rate, so lr = 0 leaves every parameter untouched.
    """

    def __init__(
        self,
        params: Sequence[Parameter],
        lr: float = 0.006,
        betas=(0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 0.0,
        decoupled: bool = True,
    ):
        self.params: List[Parameter] = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.decoupled = decoupled
        self.step_count = 0
        self._m: Dict[int, np.ndarray] = {}
        self._v: Dict[int, np.ndarray] = {}

    def step(self) -> None:
        """Apply one update from the accumulated ``.grad`` of every parameter"""
        self.step_count += 1
        t = self.step_count
        correction1 = 1.0 - self.beta1 ** t
        correction2 = 1.0 - self.beta2 ** t
        for param in self.params:
            if param.grad is None:
                continue
            grad = param.grad
            decay = self.weight_decay if param.decay else 0.0
            if decay and not self.decoupled:
                grad = grad + decay * param.data
            key = id(param)
            m = self._m.get(key)
            if m is None:
                m = self._m[key] = np.zeros_like(param.data)
                self._v[key] = np.zeros_like(param.data)
            v = self._v[key]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            if decay and self.decoupled:
                param.data -= self.lr * decay * param.data
            param.data -= self.lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)

    def zero_grad(self) -> None:
        for param in self.params:
            param.zero_grad()


def build_optimizer(params: Sequence[Parameter], config: TrainConfig) -> AdamW:
    """Optimizer named by the training configuration"""
    decoupled = config.optimizer is OptimizerName.ADAMW
    logger.debug(f"Optimizer {config.optimizer.value}: lr={config.learning_rate}, decay={config.weight_decay}")
    return AdamW(params, lr=config.learning_rate, weight_decay=config.weight_decay, decoupled=decoupled)
