"""Channel-stacked wavelet split/merge used inside network layers

The three high-frequency bands are stacked band-major on the channel axis:
Tensor[N, 3C, H/2, W/2] holds LH for channels 0..C-1, then HL, then HH.
"""

from typing import Tuple

from tensor_core import ops
from tensor_core.tensor import Tensor
from wavelets.families import WaveletFamily
from wavelets.transform import SubbandSet, dwt2, idwt2


def wavelet_split(x: Tensor, family: WaveletFamily) -> Tuple[Tensor, Tensor]:
    """Tensor[N,C,H,W] -> (LL Tensor[N,C,H/2,W/2], X_H Tensor[N,3C,H/2,W/2])"""
    subbands = dwt2(x, family)
    return subbands.LL, ops.concat([subbands.LH, subbands.HL, subbands.HH], axis=1)


def unstack_high(xh: Tensor) -> Tuple[Tensor, Tensor, Tensor]:
    """Split X_H back into its LH, HL, HH bands"""
    c = xh.shape[1] // 3
    lh, hl, hh = (ops.channel_slice(xh, i * c, (i + 1) * c) for i in range(3))
    return lh, hl, hh


def wavelet_merge(ll: Tensor, xh: Tensor, family: WaveletFamily) -> Tensor:
    """Inverse of wavelet_split"""
    lh, hl, hh = unstack_high(xh)
    return idwt2(SubbandSet(ll, lh, hl, hh), family)
