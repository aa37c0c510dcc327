"""Wavelet-domain binary convolution (WTBC)

Each level splits the running LL band into LL and the channel-stacked
high-frequency bands, convolves both with binarized depthwise kernels,
gates them with sigmoid frequency attention and hands LL on to the next
level. The levels are then folded back from the deepest one upward with
the inverse transform: Z(i) = IWT(Fused_LL(i) + Z(i+1), Fused_H(i)).
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple, Union

import numpy as np

from layers.base_layer import BaseLayer
from layers.primitives import Conv2d
from tensor_core import init, ops
from tensor_core.ops import ConvSpec
from tensor_core.tensor import Tensor, record_op
from utils.errors import PreconditionError
from utils.validators import AttentionWiring, KernelSet, PaddingMode, ShapeValidator
from wavelets.differentiable import wavelet_merge, wavelet_split
from wavelets.families import HAAR, WaveletFamily, get_family


def binarize(weight: Union[Tensor, np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    """sign(W) with sign(0) = +1 and the per-output-channel scale mean|W|"""
    data = weight.data if isinstance(weight, Tensor) else np.asarray(weight, dtype=np.float64)
    signs = np.where(data >= 0, 1.0, -1.0).astype(data.dtype)
    alpha = np.abs(data).reshape(data.shape[0], -1).mean(axis=1)
    return signs, alpha


def binary_weight(weight: Tensor) -> Tensor:
    """Effective weight alpha * sign(W) with a clipped straight-through gradient"""
    signs, alpha = binarize(weight)
    out = Tensor(signs * alpha.reshape((-1,) + (1,) * (weight.ndim - 1)))
    passthrough = np.abs(weight.data) <= 1.0
    record_op([out], [weight], lambda g: (g[0] * passthrough,), "binarize_ste")
    return out


def kernel_pair(kernel_set: KernelSet) -> Tuple[int, int]:
    """(LL kernel, high-frequency kernel) for a kernel set"""
    if kernel_set is KernelSet.K3:
        return 3, 3
    if kernel_set is KernelSet.K5:
        return 5, 5
    return 5, 3


class BinaryConv2d(BaseLayer):
    """Depthwise convolution with binarized weights"""

    def __init__(
        self,
        name: str,
        channels: int,
        kernel: int,
        rng: np.random.Generator,
        padding: PaddingMode = PaddingMode.SAME,
    ):
        super().__init__(name)
        self.spec = ConvSpec(channels, channels, (kernel, kernel), padding=padding, groups=channels)
        self.weight = self.add_parameter("weight", init.he_normal(self.spec.weight_shape, self.spec.fan_in, rng))

    def forward(self, x: Tensor) -> Tensor:
        return ops.conv2d(x, self.spec, binary_weight(self.weight))


def frequency_attention(
    x_ll: Tensor, x_h: Tensor, attn_ll: Conv2d, attn_h: Conv2d, wiring: AttentionWiring = AttentionWiring.SAME_BAND
) -> Tuple[Tensor, Tensor]:
    """Sigmoid attention maps for the LL band and the stacked high bands"""
    ShapeValidator.require_spatial_match(x_ll.shape, x_h.shape, "frequency_attention")
    if wiring is AttentionWiring.CROSS_BAND:
        return ops.sigmoid(attn_ll(x_h)), ops.sigmoid(attn_h(x_ll))
    return ops.sigmoid(attn_ll(x_ll)), ops.sigmoid(attn_h(x_h))


class WaveletLevel(BaseLayer):
    """Binary convolutions and attention convolutions of one decomposition level"""

    def __init__(
        self,
        name: str,
        channels: int,
        ll_kernel: int,
        h_kernel: int,
        wiring: AttentionWiring,
        rng: np.random.Generator,
        padding: PaddingMode = PaddingMode.SAME,
    ):
        super().__init__(name)
        self.wiring = wiring
        self.bc_ll = self.add_child("bc_ll", BinaryConv2d(f"{name}.bc_ll", channels, ll_kernel, rng, padding))
        self.bc_h = self.add_child("bc_h", BinaryConv2d(f"{name}.bc_h", 3 * channels, h_kernel, rng, padding))
        if wiring is AttentionWiring.CROSS_BAND:
            attn_ll = Conv2d(f"{name}.attn_ll", 3 * channels, channels, ll_kernel, rng, padding=padding)
            attn_h = Conv2d(f"{name}.attn_h", channels, 3 * channels, h_kernel, rng, padding=padding)
        else:
            attn_ll = Conv2d(
                f"{name}.attn_ll", channels, channels, ll_kernel, rng, groups=channels, padding=padding
            )
            attn_h = Conv2d(
                f"{name}.attn_h", 3 * channels, 3 * channels, h_kernel, rng, groups=3 * channels, padding=padding
            )
        self.attn_ll = self.add_child("attn_ll", attn_ll)
        self.attn_h = self.add_child("attn_h", attn_h)

    def forward(self, x_ll: Tensor, x_h: Tensor) -> Tuple[Tensor, Tensor]:
        """Fused (LL, H) pair of this level"""
        y_ll = self.bc_ll(x_ll)
        y_h = self.bc_h(x_h)
        a_ll, a_h = frequency_attention(x_ll, x_h, self.attn_ll, self.attn_h, self.wiring)
        return a_ll * y_ll, a_h * y_h

    def binary_parameter_count(self) -> int:
        return self.bc_ll.parameter_count() + self.bc_h.parameter_count()

    def attention_parameter_count(self) -> int:
        return self.attn_ll.parameter_count() + self.attn_h.parameter_count()


class WaveletBinaryConv(BaseLayer):
    """Multi-level WTBC block followed by a 1x1 projection to ``out_channels``"""

    def __init__(
        self,
        name: str,
        in_channels: int,
        out_channels: int,
        levels: int,
        rng: np.random.Generator,
        kernel_set: KernelSet = KernelSet.BOTH,
        wiring: AttentionWiring = AttentionWiring.SAME_BAND,
        family: Union[str, WaveletFamily] = HAAR,
        kernels: Optional[Tuple[int, int]] = None,
        padding: PaddingMode = PaddingMode.SAME,
    ):
        super().__init__(name)
        if levels < 1:
            raise PreconditionError(f"{name}: WTBC needs at least one level, got {levels}")
        self.levels = levels
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.family = get_family(family)
        self.ll_kernel, self.h_kernel = kernels or kernel_pair(kernel_set)
        self.level_layers: List[WaveletLevel] = [
            self.add_child(
                f"level{i}",
                WaveletLevel(f"{name}.level{i}", in_channels, self.ll_kernel, self.h_kernel, wiring, rng, padding),
            )
            for i in range(1, levels + 1)
        ]
        self.projection = self.add_child("projection", Conv2d(f"{name}.projection", in_channels, out_channels, 1, rng))

    def decompose(self, x: Tensor) -> List[Tuple[Tensor, Tensor]]:
        """Fused (LL, H) pairs for levels 1..L"""
        factor = 2 ** self.levels
        ShapeValidator.require_divisible(x.shape[-2], factor, "H", self.name)
        ShapeValidator.require_divisible(x.shape[-1], factor, "W", self.name)
        fused = []
        current = x
        for level in self.level_layers:
            x_ll, x_h = wavelet_split(current, self.family)
            fused.append(level(x_ll, x_h))
            current = x_ll
        return fused

    def aggregate(self, fused: List[Tuple[Tensor, Tensor]]) -> Tensor:
        """Depth-first inverse-transform aggregation, deepest level first"""
        z: Optional[Tensor] = None
        for fused_ll, fused_h in reversed(fused):
            low = fused_ll if z is None else fused_ll + z
            z = wavelet_merge(low, fused_h, self.family)
        return z

    def forward(self, x: Tensor) -> Tensor:
        ShapeValidator.require_channels(x.shape[1], self.in_channels, self.name)
        return self.projection(self.aggregate(self.decompose(x)))

    def binary_parameter_count(self) -> int:
        return sum(level.binary_parameter_count() for level in self.level_layers)

    def attention_parameter_count(self) -> int:
        return sum(level.attention_parameter_count() for level in self.level_layers)


class DepthwiseSeparableBlock(BaseLayer):
    """Depthwise conv of an equivalent receptive field plus 1x1 pointwise conv"""

    def __init__(self, name: str, in_channels: int, out_channels: int, receptive_field: int, rng: np.random.Generator):
        super().__init__(name)
        kernel = receptive_field if receptive_field % 2 == 1 else receptive_field + 1
        self.kernel = kernel
        self.depthwise = self.add_child(
            "depthwise", Conv2d(f"{name}.depthwise", in_channels, in_channels, kernel, rng, groups=in_channels)
        )
        self.pointwise = self.add_child("pointwise", Conv2d(f"{name}.pointwise", in_channels, out_channels, 1, rng))

    def forward(self, x: Tensor) -> Tensor:
        return self.pointwise(self.depthwise(x))


def equivalent_receptive_field(levels: int, kernel: int) -> int:
    """R = 2^L * k"""
    return (2 ** levels) * kernel


@dataclass
class ParamCountReport:
    """Closed-form and measured parameter counts of one WTBC configuration"""

    R: int
    L: int
    k: Optional[int]
    C_in: int
    P_std: int
    P_WTBC: Optional[int]
    ratio: Optional[Fraction]
    measured: Optional[int] = None
    measured_attention: Optional[int] = None
    measured_projection: Optional[int] = None
    measured_total: Optional[int] = None
    warning: str = ""

    def as_row(self) -> dict:
        def fmt(value):
            return "" if value is None else value

        return {
            "R": self.R,
            "L": self.L,
            "k": fmt(self.k),
            "C_in": self.C_in,
            "P_std": self.P_std,
            "P_WTBC": fmt(self.P_WTBC),
            "ratio": "" if self.ratio is None else f"{float(self.ratio):.6g}",
            "measured": fmt(self.measured),
            "attention": fmt(self.measured_attention),
            "projection": fmt(self.measured_projection),
            "total": fmt(self.measured_total),
            "warning": self.warning,
        }


def wtbc_param_count(R: int, L: int, C_in: int, measure: bool = True, seed: int = 0) -> ParamCountReport:
    """Standard-conv versus WTBC kernel parameters for receptive field R

    P_std = R^2 * C_in, P_WTBC = L * 4 * k^2 * C_in with k = R / 2^L, so the
    ratio is exactly L / 4^(L-1).
    """
    if L < 1 or C_in < 1 or R < 1:
        raise PreconditionError(f"wtbc_param_count: R, L and C_in must be positive (got {R}, {L}, {C_in})")
    factor = 2 ** L
    if R % factor != 0:
        raise PreconditionError(f"wtbc_param_count: R={R} is not divisible by 2^L={factor}")
    k = R // factor
    p_std = R * R * C_in
    p_wtbc = L * 4 * k * k * C_in
    report = ParamCountReport(R=R, L=L, k=k, C_in=C_in, P_std=p_std, P_WTBC=p_wtbc, ratio=Fraction(p_wtbc, p_std))
    if not measure:
        return report
    padding = PaddingMode.SAME
    if k % 2 == 0:
        # Counted on a valid-padded instance; such a block cannot run a shape-preserving forward
        padding = PaddingMode.VALID
        report.warning = f"kernel {k} is even; 'same' padding needs odd kernels, counted with valid padding"
    block = WaveletBinaryConv(
        f"wtbc_R{R}_L{L}", C_in, C_in, L, np.random.default_rng(seed), kernels=(k, k), padding=padding
    )
    report.measured = block.binary_parameter_count()
    report.measured_attention = block.attention_parameter_count()
    report.measured_projection = block.projection.parameter_count()
    report.measured_total = block.parameter_count()
    return report


def ratio_for_levels(L: int) -> Fraction:
    """L / 4^(L-1)"""
    return Fraction(L, 4 ** (L - 1))


__all__ = [
    "binarize",
    "binary_weight",
    "kernel_pair",
    "BinaryConv2d",
    "frequency_attention",
    "WaveletLevel",
    "WaveletBinaryConv",
    "DepthwiseSeparableBlock",
    "equivalent_receptive_field",
    "ParamCountReport",
    "wtbc_param_count",
    "ratio_for_levels",
]
