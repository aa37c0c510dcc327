"""Orthonormal 2D wavelet transforms"""

from wavelets.families import DB2, HAAR, WaveletFamily, get_family
from wavelets.transform import SubbandSet, WaveletPyramid, dwt2, idwt2, iwt_multilevel, wt_multilevel

__all__ = [
    "DB2",
    "HAAR",
    "WaveletFamily",
    "get_family",
    "SubbandSet",
    "WaveletPyramid",
    "dwt2",
    "idwt2",
    "iwt_multilevel",
    "wt_multilevel",
]
