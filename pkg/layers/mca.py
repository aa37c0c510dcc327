"""Multi-channel attention (MCA)

Base features come from a 3D convolution over (H, W, spectral depth)
followed by BN and ReLU; the depth axis is then folded into channels.
A channel gate sigma(MLP(avg)) + sigma(MLP(max)) with one shared MLP is
applied first, then a single-channel spatial gate
sigma(conv7x7(channel-mean + channel-max)).
"""

import math
from typing import Sequence, Tuple

import numpy as np

from layers.base_layer import BaseLayer
from layers.primitives import BatchNorm, Conv2d, Conv3d, Mlp2
from tensor_core import ops
from tensor_core.tensor import Tensor
from utils.validators import PoolMode, ShapeValidator


def add_pseudo_depth(x: Tensor) -> Tensor:
    """Tensor[N,C,H,W] -> Tensor[N,1,H,W,C] with channels as the depth axis"""
    ShapeValidator.require_ndim(x.shape, 4, "add_pseudo_depth")
    n, c, h, w = x.shape
    return ops.reshape(ops.transpose(x, (0, 2, 3, 1)), (n, 1, h, w, c))


def fold_depth(x: Tensor) -> Tensor:
    """Tensor[N,C3,H,W,D] -> Tensor[N,C3*D,H,W], channel index c3*D + d"""
    n, c3, h, w, d = x.shape
    return ops.reshape(ops.transpose(x, (0, 1, 4, 2, 3)), (n, c3 * d, h, w))


def channel_attention(f3d: Tensor, mlp: Mlp2) -> Tuple[Tensor, Tensor]:
    """(F_mid1, gate) where gate = sigma(A) + sigma(B) per channel"""
    avg = mlp(ops.global_pool(f3d, PoolMode.AVG))
    mx = mlp(ops.global_pool(f3d, PoolMode.MAX))
    gate = ops.sigmoid(avg) + ops.sigmoid(mx)
    n, c = gate.shape
    return f3d * ops.reshape(gate, (n, c, 1, 1)), gate


def spatial_attention(f_mid: Tensor, conv: Conv2d) -> Tuple[Tensor, Tensor]:
    """(F_out, gate) where gate is a single-channel map in (0, 1)"""
    pooled = ops.channel_pool(f_mid, PoolMode.AVG) + ops.channel_pool(f_mid, PoolMode.MAX)
    gate = ops.sigmoid(conv(pooled))
    return f_mid * gate, gate


class MultiChannelAttention(BaseLayer):
    """MCA block on Tensor[N, C_in, H, W]; output channels = c3 * ceil(C_in / depth_stride)"""

    def __init__(
        self,
        name: str,
        in_channels: int,
        rng: np.random.Generator,
        conv_channels: int = 8,
        kernel: Sequence[int] = (3, 3, 7),
        depth_stride: int = 2,
        reduction_ratio: int = 8,
        spatial_kernel: int = 7,
        use_attention: bool = True,
    ):
        super().__init__(name)
        self.in_channels = in_channels
        self.use_attention = use_attention
        self.depth = math.ceil(in_channels / depth_stride)
        self.out_channels = conv_channels * self.depth
        self.conv3d = self.add_child(
            "conv3d", Conv3d(f"{name}.conv3d", 1, conv_channels, kernel, rng, stride=(1, 1, depth_stride))
        )
        self.bn = self.add_child("bn", BatchNorm(f"{name}.bn", conv_channels))
        if use_attention:
            self.mlp = self.add_child("mlp", Mlp2(f"{name}.mlp", self.out_channels, reduction_ratio, rng))
            self.spatial_conv = self.add_child(
                "spatial_conv", Conv2d(f"{name}.spatial_conv", 1, 1, spatial_kernel, rng)
            )

    def base(self, x: Tensor) -> Tensor:
        """F_3d = ReLU(BN(conv3d(x))) with depth folded into channels"""
        ShapeValidator.require_channels(x.shape[1], self.in_channels, self.name)
        features = ops.relu(self.bn(self.conv3d(add_pseudo_depth(x))))
        return fold_depth(features)

    def forward(self, x: Tensor) -> Tensor:
        f3d = self.base(x)
        if not self.use_attention:
            return f3d
        f_mid, _ = channel_attention(f3d, self.mlp)
        f_out, _ = spatial_attention(f_mid, self.spatial_conv)
        return f_out
