"""Orthonormal wavelet filter families"""

import math
from dataclasses import dataclass, field
from typing import Dict, Union

import numpy as np

from utils.errors import ConfigError
from utils.validators import WaveletName

_S = 1.0 / math.sqrt(2.0)

DB2_TAPS = (0.482962913144534, 0.836516303737808, 0.224143868042013, -0.129409522551260)


@dataclass(frozen=True)
class WaveletFamily:
    """Analysis and synthesis taps of a two-channel orthonormal filter bank"""

    name: str
    dec_lo: np.ndarray = field(repr=False)

    @property
    def length(self) -> int:
        return int(self.dec_lo.shape[0])

    @property
    def dec_hi(self) -> np.ndarray:
        # Quadrature mirror: g[k] = (-1)^k h[L-1-k]
        signs = np.where(np.arange(self.length) % 2 == 0, 1.0, -1.0)
        return signs * self.dec_lo[::-1]

    @property
    def rec_lo(self) -> np.ndarray:
        return self.dec_lo[::-1].copy()

    @property
    def rec_hi(self) -> np.ndarray:
        return self.dec_hi[::-1].copy()

    def perfect_reconstruction_error(self) -> float:
        """Largest violation of the orthonormality conditions of the taps"""
        h, g = self.dec_lo, self.dec_hi
        worst = abs(float(np.dot(h, h)) - 1.0)
        worst = max(worst, abs(float(np.dot(g, g)) - 1.0), abs(float(np.dot(h, g))))
        for shift in range(2, self.length, 2):
            worst = max(worst, abs(float(np.dot(h[shift:], h[:-shift]))))
            worst = max(worst, abs(float(np.dot(g[shift:], g[:-shift]))))
            worst = max(worst, abs(float(np.dot(h[shift:], g[:-shift]))))
            worst = max(worst, abs(float(np.dot(g[shift:], h[:-shift]))))
        return worst


HAAR = WaveletFamily("haar", np.array([_S, _S]))
DB2 = WaveletFamily("db2", np.array(DB2_TAPS))

_FAMILIES: Dict[str, WaveletFamily] = {HAAR.name: HAAR, DB2.name: DB2}


def get_family(name: Union[str, WaveletName, WaveletFamily]) -> WaveletFamily:
    """Look up a family by name or enum"""
    if isinstance(name, WaveletFamily):
        return name
    key = name.value if isinstance(name, WaveletName) else str(name).lower()
    try:
        return _FAMILIES[key]
    except KeyError:
        raise ConfigError(f"Unknown wavelet family {name!r}; expected one of {sorted(_FAMILIES)}")
