"""Parameterised building blocks over tensor_core ops"""

from typing import Optional, Sequence, Tuple

import numpy as np

from layers.base_layer import BaseLayer
from tensor_core import init, ops
from tensor_core.ops import ConvSpec, RunningStats
from tensor_core.tensor import Tensor
from utils.validators import PaddingMode


def _pair(kernel) -> Tuple[int, int]:
    return (kernel, kernel) if isinstance(kernel, int) else tuple(kernel)


class Conv2d(BaseLayer):
    """2D convolution with He-initialised weights and zero bias"""

    def __init__(
        self,
        name: str,
        in_channels: int,
        out_channels: int,
        kernel,
        rng: np.random.Generator,
        groups: int = 1,
        bias: bool = True,
        padding: PaddingMode = PaddingMode.SAME,
    ):
        super().__init__(name)
        self.spec = ConvSpec(in_channels, out_channels, _pair(kernel), padding=padding, groups=groups)
        self.weight = self.add_parameter("weight", init.he_normal(self.spec.weight_shape, self.spec.fan_in, rng))
        self.bias = self.add_parameter("bias", init.zeros((out_channels,)), decay=False) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        return ops.conv2d(x, self.spec, self.weight, self.bias)


class Conv3d(BaseLayer):
    """3D convolution over (H, W, Depth)"""

    def __init__(
        self,
        name: str,
        in_channels: int,
        out_channels: int,
        kernel: Sequence[int],
        rng: np.random.Generator,
        stride: Sequence[int] = (1, 1, 1),
        bias: bool = True,
    ):
        super().__init__(name)
        self.spec = ConvSpec(in_channels, out_channels, tuple(kernel), stride=tuple(stride))
        self.weight = self.add_parameter("weight", init.he_normal(self.spec.weight_shape, self.spec.fan_in, rng))
        self.bias = self.add_parameter("bias", init.zeros((out_channels,)), decay=False) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        return ops.conv3d(x, self.spec, self.weight, self.bias)


class ConvTranspose2d(BaseLayer):
    """2x2 stride-2 transposed convolution (x2 upsampling)"""

    def __init__(self, name: str, in_channels: int, out_channels: int, rng: np.random.Generator):
        super().__init__(name)
        self.weight = self.add_parameter(
            "weight", init.he_normal((in_channels, out_channels, 2, 2), in_channels, rng)
        )
        self.bias = self.add_parameter("bias", init.zeros((out_channels,)), decay=False)

    def forward(self, x: Tensor) -> Tensor:
        return ops.conv_transpose2d(x, self.weight, self.bias)


class BatchNorm(BaseLayer):
    """Per-channel batch normalisation, identity-initialised"""

    def __init__(self, name: str, channels: int, momentum: float = 0.9, eps: float = 1e-5):
        super().__init__(name)
        self.momentum = momentum
        self.eps = eps
        self.gamma = self.add_parameter("gamma", init.ones((channels,)), decay=False)
        self.beta = self.add_parameter("beta", init.zeros((channels,)), decay=False)
        stats = RunningStats.identity(channels)
        self.add_buffer("running_mean", stats.mean)
        self.add_buffer("running_var", stats.var)

    @property
    def running(self) -> RunningStats:
        # Views of the registered buffers
        return RunningStats(self._buffers["running_mean"], self._buffers["running_var"])

    def forward(self, x: Tensor) -> Tensor:
        return ops.batch_norm(x, self.gamma, self.beta, self.running, self.training, self.momentum, self.eps)


class Mlp2(BaseLayer):
    """Shared two-layer perceptron C -> ceil(C/r) -> C on Tensor[N, C]"""

    def __init__(self, name: str, channels: int, reduction_ratio: int, rng: np.random.Generator):
        super().__init__(name)
        hidden = ops.hidden_width(channels, reduction_ratio)
        self.w1 = self.add_parameter("w1", init.he_normal((hidden, channels), channels, rng))
        self.b1 = self.add_parameter("b1", init.zeros((hidden,)), decay=False)
        self.w2 = self.add_parameter("w2", init.he_normal((channels, hidden), hidden, rng))
        self.b2 = self.add_parameter("b2", init.zeros((channels,)), decay=False)

    def forward(self, x: Tensor) -> Tensor:
        return ops.mlp2(x, self.w1, self.b1, self.w2, self.b2)


def zero_parameters(layer: BaseLayer, names: Optional[Sequence[str]] = None) -> None:
    """Set the named (or all) parameters of a layer to zero in place"""
    for name, param in layer.named_parameters():
        if names is None or name in names:
            param.data[...] = 0.0
