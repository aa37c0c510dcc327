"""Feature fusion of the attention stream and the wavelet stream"""

from typing import Tuple

import numpy as np

from layers.base_layer import BaseLayer
from layers.primitives import Conv2d, Mlp2
from tensor_core import ops
from tensor_core.tensor import Tensor
from utils.errors import PreconditionError
from utils.validators import PoolMode, ShapeValidator


class FeatureFusion(BaseLayer):
    """Dual-pool gated fusion

    Both streams are projected to width/2 by 1x1 convs and concatenated.
    The concatenation is refined by 1x1 -> ReLU -> 1x1; avg- and max-pooled
    descriptors each go through their own 1x1 -> ReLU -> 1x1 -> sigmoid pair,
    and each gate multiplies the refined features before the two are added.
    """

    def __init__(
        self,
        name: str,
        m_channels: int,
        w_channels: int,
        width: int,
        rng: np.random.Generator,
        reduction_ratio: int = 8,
    ):
        super().__init__(name)
        if width % 2 != 0:
            raise PreconditionError(f"{name}: fusion width must be even, got {width}")
        self.width = width
        half = width // 2
        self.proj_m = self.add_child("proj_m", Conv2d(f"{name}.proj_m", m_channels, half, 1, rng))
        self.proj_w = self.add_child("proj_w", Conv2d(f"{name}.proj_w", w_channels, half, 1, rng))
        self.refine_a = self.add_child("refine_a", Conv2d(f"{name}.refine_a", width, width, 1, rng))
        self.refine_b = self.add_child("refine_b", Conv2d(f"{name}.refine_b", width, width, 1, rng))
        self.avg_gate = self.add_child("avg_gate", Mlp2(f"{name}.avg_gate", width, reduction_ratio, rng))
        self.max_gate = self.add_child("max_gate", Mlp2(f"{name}.max_gate", width, reduction_ratio, rng))

    def gates(self, joint: Tensor) -> Tuple[Tensor, Tensor]:
        """Channel gates in (0,1)^width from the avg and max branches"""
        g_avg = ops.sigmoid(self.avg_gate(ops.global_pool(joint, PoolMode.AVG)))
        g_max = ops.sigmoid(self.max_gate(ops.global_pool(joint, PoolMode.MAX)))
        return g_avg, g_max

    def forward(self, m: Tensor, w: Tensor) -> Tensor:
        ShapeValidator.require_spatial_match(m.shape, w.shape, self.name)
        joint = ops.concat([self.proj_m(m), self.proj_w(w)], axis=1)
        refined = self.refine_b(ops.relu(self.refine_a(joint)))
        g_avg, g_max = self.gates(joint)
        n = joint.shape[0]
        g_avg = ops.reshape(g_avg, (n, self.width, 1, 1))
        g_max = ops.reshape(g_max, (n, self.width, 1, 1))
        return g_avg * refined + g_max * refined


class ConcatFusion(BaseLayer):
    """Channel concatenation followed by a 1x1 conv"""

    def __init__(self, name: str, m_channels: int, w_channels: int, width: int, rng: np.random.Generator):
        super().__init__(name)
        self.width = width
        self.mix = self.add_child("mix", Conv2d(f"{name}.mix", m_channels + w_channels, width, 1, rng))

    def forward(self, m: Tensor, w: Tensor) -> Tensor:
        ShapeValidator.require_spatial_match(m.shape, w.shape, self.name)
        return self.mix(ops.concat([m, w], axis=1))
