"""Periodized 2D discrete wavelet transform

The transform acts on the last two axes, so Tensor[C,H,W] and
Tensor[N,C,H,W] inputs are both accepted. With orthonormal taps and
periodic extension the synthesis bank is the transpose of the analysis
bank, which gives exact reconstruction at every even size.
"""

from dataclasses import dataclass
from typing import List, Tuple, Union

import numpy as np

from tensor_core.tensor import Tensor, record_op
from utils.errors import DimensionError, PreconditionError
from wavelets.families import HAAR, WaveletFamily, get_family

BAND_NAMES = ("LL", "LH", "HL", "HH")


def _analyze(x: np.ndarray, taps: np.ndarray, axis: int) -> np.ndarray:
    # out[n] = sum_k taps[k] * x[(2n + k) mod N]
    taps = taps.astype(x.dtype, copy=False)
    out = None
    for k, tap in enumerate(taps):
        term = tap * np.take(np.roll(x, -k, axis=axis), np.arange(0, x.shape[axis], 2), axis=axis)
        out = term if out is None else out + term
    return out


def _synthesize(y: np.ndarray, taps: np.ndarray, axis: int) -> np.ndarray:
    # Transpose of _analyze: scatter y[n] to 2n + k
    taps = taps.astype(y.dtype, copy=False)
    shape = list(y.shape)
    shape[axis] *= 2
    up = np.zeros(shape, dtype=y.dtype)
    index = [slice(None)] * y.ndim
    index[axis] = slice(0, None, 2)
    up[tuple(index)] = y
    out = None
    for k, tap in enumerate(taps):
        term = tap * np.roll(up, k, axis=axis)
        out = term if out is None else out + term
    return out


def analysis_bands(x: np.ndarray, family: WaveletFamily) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """One analysis level on raw arrays: (LL, LH, HL, HH)"""
    lo_rows = _analyze(x, family.dec_lo, axis=-2)
    hi_rows = _analyze(x, family.dec_hi, axis=-2)
    ll = _analyze(lo_rows, family.dec_lo, axis=-1)
    lh = _analyze(lo_rows, family.dec_hi, axis=-1)
    hl = _analyze(hi_rows, family.dec_lo, axis=-1)
    hh = _analyze(hi_rows, family.dec_hi, axis=-1)
    return ll, lh, hl, hh


def synthesis_bands(ll: np.ndarray, lh: np.ndarray, hl: np.ndarray, hh: np.ndarray, family: WaveletFamily) -> np.ndarray:
    """Exact inverse of analysis_bands on raw arrays"""
    lo_rows = _synthesize(ll, family.dec_lo, axis=-1) + _synthesize(lh, family.dec_hi, axis=-1)
    hi_rows = _synthesize(hl, family.dec_lo, axis=-1) + _synthesize(hh, family.dec_hi, axis=-1)
    return _synthesize(lo_rows, family.dec_lo, axis=-2) + _synthesize(hi_rows, family.dec_hi, axis=-2)


@dataclass
class SubbandSet:
    """The four half-resolution outputs of one decomposition level"""

    LL: Tensor
    LH: Tensor
    HL: Tensor
    HH: Tensor

    def bands(self) -> Tuple[Tensor, Tensor, Tensor, Tensor]:
        return self.LL, self.LH, self.HL, self.HH

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.LL.shape

    def energy(self) -> float:
        return float(sum(np.sum(band.data ** 2) for band in self.bands()))

    def validate(self, context: str = "SubbandSet") -> None:
        for name, band in zip(BAND_NAMES[1:], self.bands()[1:]):
            if band.shape != self.LL.shape:
                raise DimensionError(name, self.LL.shape, band.shape, context)

    def __add__(self, other: "SubbandSet") -> "SubbandSet":
        return SubbandSet(*(a + b for a, b in zip(self.bands(), other.bands())))


@dataclass
class WaveletPyramid:
    """High-frequency sets of levels 1..L plus the deepest LL"""

    levels: List[SubbandSet]
    ll: Tensor
    family: WaveletFamily = HAAR

    @property
    def depth(self) -> int:
        return len(self.levels)


def _require_even_spatial(shape: Tuple[int, ...], context: str) -> None:
    if len(shape) < 2:
        raise DimensionError("rank", ">= 2", len(shape), context)
    for axis, extent in zip(("H", "W"), shape[-2:]):
        if extent % 2 != 0:
            raise PreconditionError(f"{context}: axis '{axis}' has odd extent {extent}")


def dwt2(x: Union[Tensor, np.ndarray], family: Union[str, WaveletFamily] = HAAR) -> SubbandSet:
    """Single-level orthonormal 2D DWT with periodization"""
    family = get_family(family)
    x = x if isinstance(x, Tensor) else Tensor(x)
    _require_even_spatial(x.shape, "dwt2")
    outputs = [Tensor(band) for band in analysis_bands(x.data, family)]

    def backward(grads):
        return (synthesis_bands(*grads, family),)

    record_op(outputs, [x], backward, f"dwt2_{family.name}")
    return SubbandSet(*outputs)


def idwt2(subbands: SubbandSet, family: Union[str, WaveletFamily] = HAAR) -> Tensor:
    """Inverse of dwt2"""
    family = get_family(family)
    subbands.validate("idwt2")
    bands = list(subbands.bands())
    out = Tensor(synthesis_bands(*(band.data for band in bands), family))

    def backward(grads):
        return analysis_bands(grads[0], family)

    record_op([out], bands, backward, f"idwt2_{family.name}")
    return out


def wt_multilevel(x: Union[Tensor, np.ndarray], levels: int, family: Union[str, WaveletFamily] = HAAR) -> WaveletPyramid:
    """Recursive decomposition of the LL band, L levels deep"""
    family = get_family(family)
    x = x if isinstance(x, Tensor) else Tensor(x)
    if levels < 1:
        raise PreconditionError(f"wt_multilevel: level count must be >= 1, got {levels}")
    factor = 2 ** levels
    for axis, extent in zip(("H", "W"), x.shape[-2:]):
        if extent % factor != 0:
            raise PreconditionError(f"wt_multilevel: axis '{axis}' extent {extent} is not divisible by {factor}")
    sets: List[SubbandSet] = []
    current = x
    for _ in range(levels):
        subbands = dwt2(current, family)
        sets.append(subbands)
        current = subbands.LL
    return WaveletPyramid(sets, current, family)


def iwt_multilevel(pyramid: WaveletPyramid, family: Union[str, WaveletFamily, None] = None) -> Tensor:
    """Exact inverse of wt_multilevel"""
    family = get_family(family or pyramid.family)
    current = pyramid.ll
    for subbands in reversed(pyramid.levels):
        current = idwt2(SubbandSet(current, subbands.LH, subbands.HL, subbands.HH), family)
    return current
