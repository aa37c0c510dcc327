"""CWSSNet encoder-decoder

Two encoder levels (MCA and WTBC in parallel, fused, max-pooled), two
decoder levels (2x2 transposed conv, skip concatenation, 3x3 merge conv)
and a 1x1 classification head. Shape ledger for a patch of size S:
F1 S, D1 S/2, F2 S/2, D2 S/4, U1 S/2, U2 S, logits S.
"""

from collections import OrderedDict
from typing import Dict, Optional, Tuple

import numpy as np

from config.run_config import ModelConfig
from layers.base_layer import BaseLayer
from layers.fusion import ConcatFusion, FeatureFusion
from layers.mca import MultiChannelAttention
from layers.primitives import Conv2d, ConvTranspose2d
from layers.wtbc import DepthwiseSeparableBlock, WaveletBinaryConv, equivalent_receptive_field, kernel_pair
from tensor_core import ops
from tensor_core.tensor import Tensor
from utils.errors import DimensionError
from utils.validators import PoolMode, ShapeValidator


class EncoderLevel(BaseLayer):
    """MCA || WTBC -> fusion at one resolution"""

    def __init__(self, name: str, in_channels: int, width: int, config: ModelConfig, rng: np.random.Generator):
        super().__init__(name)
        self.in_channels = in_channels
        self.width = width
        self.mca = self.add_child(
            "mca",
            MultiChannelAttention(
                f"{name}.mca",
                in_channels,
                rng,
                conv_channels=config.mca_channels,
                kernel=config.mca_kernel,
                depth_stride=config.mca_depth_stride,
                reduction_ratio=config.reduction_ratio,
                use_attention=config.use_mca,
            ),
        )
        if config.use_wtbc:
            wavelet_stream: BaseLayer = WaveletBinaryConv(
                f"{name}.wtbc",
                in_channels,
                width,
                config.wtbc_levels,
                rng,
                kernel_set=config.kernel_set,
                wiring=config.attention_wiring,
                family=config.wavelet.value,
            )
        else:
            receptive_field = equivalent_receptive_field(config.wtbc_levels, max(kernel_pair(config.kernel_set)))
            wavelet_stream = DepthwiseSeparableBlock(f"{name}.dsconv", in_channels, width, receptive_field, rng)
        self.wavelet_stream = self.add_child("wavelet_stream", wavelet_stream)
        m_channels = self.mca.out_channels
        if config.use_fusion:
            fusion: BaseLayer = FeatureFusion(
                f"{name}.fusion", m_channels, width, width, rng, config.reduction_ratio
            )
        else:
            fusion = ConcatFusion(f"{name}.concat", m_channels, width, width, rng)
        self.fusion = self.add_child("fusion", fusion)

    def forward(self, x: Tensor) -> Tensor:
        return self.fusion(self.mca(x), self.wavelet_stream(x))


class CWSSNet(BaseLayer):
    """Full segmentation network on PCA-reduced patches"""

    def __init__(
        self, bands: int, num_classes: int, config: Optional[ModelConfig] = None, seed: int = 0, dtype: str = "float64"
    ):
        super().__init__("cwssnet")
        self.config = config or ModelConfig()
        self.bands = bands
        self.num_classes = num_classes
        rng = np.random.default_rng(seed)
        w1, w2 = self.config.widths
        self.level1 = self.add_child("level1", EncoderLevel("level1", bands, w1, self.config, rng))
        self.level2 = self.add_child("level2", EncoderLevel("level2", w1, w2, self.config, rng))
        self.up1 = self.add_child("up1", ConvTranspose2d("up1", w2, w2, rng))
        self.merge1 = self.add_child("merge1", Conv2d("merge1", 2 * w2, w2, 3, rng))
        self.up2 = self.add_child("up2", ConvTranspose2d("up2", w2, w1, rng))
        self.merge2 = self.add_child("merge2", Conv2d("merge2", 2 * w1, w1, 3, rng))
        self.head = self.add_child("head", Conv2d("head", w1, num_classes, 1, rng))
        # Initialisers draw in float64
        if np.dtype(dtype) != np.float64:
            self.cast(dtype)
        self.logger.info(
            f"Built CWSSNet: bands={bands}, classes={num_classes}, widths={self.config.widths}, "
            f"dtype={np.dtype(dtype).name}, parameters={self.parameter_count()}"
        )

    def to_channels_first(self, batch: Tensor) -> Tensor:
        """Tensor[N,S,S,B] or Tensor[N,S,S,B,1] -> Tensor[N,B,S,S]"""
        if batch.ndim == 5:
            if batch.shape[-1] != 1:
                raise DimensionError("pseudo_depth", 1, batch.shape[-1], "CWSSNet input")
            batch = ops.reshape(batch, batch.shape[:4])
        ShapeValidator.require_ndim(batch.shape, 4, "CWSSNet input")
        if batch.shape[1] != batch.shape[2]:
            raise DimensionError("W", batch.shape[1], batch.shape[2], "CWSSNet input (square patches)")
        ShapeValidator.require_channels(batch.shape[3], self.bands, "CWSSNet input bands")
        ShapeValidator.require_divisible(batch.shape[1], 4, "S", "CWSSNet input")
        return ops.transpose(batch, (0, 3, 1, 2))

    def run_stages(self, batch: Tensor) -> "OrderedDict[str, Tensor]":
        """Every intermediate of the forward pass, in execution order"""
        stages: "OrderedDict[str, Tensor]" = OrderedDict()
        x = self.to_channels_first(batch)
        stages["F1"] = self.level1(x)
        stages["D1"] = ops.pool2d(stages["F1"], PoolMode.MAX)
        stages["F2"] = self.level2(stages["D1"])
        stages["D2"] = ops.pool2d(stages["F2"], PoolMode.MAX)
        stages["U1"] = self.up1(stages["D2"])
        stages["FU1"] = ops.relu(self.merge1(ops.concat([stages["U1"], stages["F2"]], axis=1)))
        stages["U2"] = self.up2(stages["FU1"])
        stages["FU2"] = ops.relu(self.merge2(ops.concat([stages["U2"], stages["F1"]], axis=1)))
        stages["logits"] = self.head(stages["FU2"])
        return stages

    def forward(self, batch: Tensor) -> Tensor:
        """Logits Tensor[N, C, S, S]"""
        return self.run_stages(batch)["logits"]

    def stage_shapes(self, patch_size: int, batch: int = 1) -> Dict[str, Tuple[int, ...]]:
        """Shape ledger of a forward pass at patch size S (computed, not traced)"""
        ShapeValidator.require_divisible(patch_size, 4, "S", "stage_shapes")
        w1, w2 = self.config.widths
        s, h, q = patch_size, patch_size // 2, patch_size // 4
        return OrderedDict(
            [
                ("F1", (batch, w1, s, s)),
                ("D1", (batch, w1, h, h)),
                ("F2", (batch, w2, h, h)),
                ("D2", (batch, w2, q, q)),
                ("U1", (batch, w2, h, h)),
                ("FU1", (batch, w2, h, h)),
                ("U2", (batch, w1, s, s)),
                ("FU2", (batch, w1, s, s)),
                ("logits", (batch, self.num_classes, s, s)),
            ]
        )

    def predict_logits(self, patches: np.ndarray) -> np.ndarray:
        """Eval-mode logits for a numpy batch Tensor[N,S,S,B]"""
        was_training = self.training
        self.eval()
        try:
            return self.forward(Tensor(patches)).data
        finally:
            self.train(was_training)


def l2_penalty(network: BaseLayer) -> Tensor:
    """Sum of squared entries over every decayed weight"""
    total: Optional[Tensor] = None
    for param in network.decay_parameters():
        term = ops.square_sum(param)
        total = term if total is None else total + term
    return total if total is not None else Tensor(np.array(0.0))


def segmentation_loss(logits: Tensor, labels: np.ndarray, network: BaseLayer, l2_lambda: float) -> Tensor:
    """Mean pixel cross entropy (ignore label 255) + lambda * sum ||W||^2"""
    loss = ops.cross_entropy(logits, labels)
    if l2_lambda > 0:
        loss = loss + ops.scale(l2_penalty(network), l2_lambda)
    return loss
