"""Weight initialisers"""

from typing import Sequence

import numpy as np


def he_normal(shape: Sequence[int], fan_in: int, rng: np.random.Generator, dtype=np.float64) -> np.ndarray:
    """Fan-in He normal: N(0, 2 / fan_in)"""
    std = np.sqrt(2.0 / max(fan_in, 1))
    return (rng.standard_normal(tuple(shape)) * std).astype(dtype)


def zeros(shape: Sequence[int], dtype=np.float64) -> np.ndarray:
    return np.zeros(tuple(shape), dtype=dtype)


def ones(shape: Sequence[int], dtype=np.float64) -> np.ndarray:
    return np.ones(tuple(shape), dtype=dtype)
