"""Network layers for CWSSNet"""

from layers.base_layer import BaseLayer, Parameter
from layers.fusion import ConcatFusion, FeatureFusion
from layers.mca import MultiChannelAttention
from layers.network import CWSSNet, EncoderLevel, l2_penalty, segmentation_loss
from layers.wtbc import DepthwiseSeparableBlock, WaveletBinaryConv, wtbc_param_count

__all__ = [
    "BaseLayer",
    "Parameter",
    "ConcatFusion",
    "FeatureFusion",
    "MultiChannelAttention",
    "CWSSNet",
    "EncoderLevel",
    "l2_penalty",
    "segmentation_loss",
    "DepthwiseSeparableBlock",
    "WaveletBinaryConv",
    "wtbc_param_count",
]
