"""Finite-difference gradient checking"""

import logging
from typing import Callable, Iterable, Optional, Tuple

import numpy as np

from tensor_core.tensor import GradTape, Tensor

logger = logging.getLogger(__name__)


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)


def analytic_grad(fn: Callable[[], Tensor], x: Tensor) -> np.ndarray:
    """Gradient of the scalar closure with respect to x via the tape"""
    previous = x.requires_grad
    x.requires_grad = True
    x.grad = None
    try:
        with GradTape() as tape:
            out = fn()
        if out.size != 1:
            raise ValueError(f"grad_check closure must be scalar-valued, got shape {out.shape}")
        if not out.requires_grad:
            return np.zeros_like(x.data)
        tape.backward(out)
        return x.grad if x.grad is not None else np.zeros_like(x.data)
    finally:
        x.requires_grad = previous
        x.grad = None


def grad_check(
    fn: Callable[[], Tensor],
    x: Tensor,
    eps: float = 1e-5,
    coords: Optional[Iterable[Tuple[int, ...]]] = None,
    max_coords: Optional[int] = None,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and central-difference gradients

    ``fn`` closes over ``x``; x.data is perturbed in place and restored.
    With ``max_coords`` a seeded subset of coordinates is checked.
    """
    grad = analytic_grad(fn, x)
    if coords is None:
        all_coords = list(np.ndindex(*x.shape))
        if max_coords is not None and max_coords < len(all_coords):
            rng = np.random.default_rng(seed)
            picks = rng.choice(len(all_coords), size=max_coords, replace=False)
            all_coords = [all_coords[i] for i in sorted(picks)]
        coords = all_coords

    worst = 0.0
    for coord in coords:
        original = x.data[coord]
        x.data[coord] = original + eps
        plus = fn().item()
        x.data[coord] = original - eps
        minus = fn().item()
        x.data[coord] = original
        numeric = (plus - minus) / (2.0 * eps)
        worst = max(worst, relative_error(float(grad[coord]), numeric))
    logger.debug(f"grad_check max relative error {worst:.3e}")
    return worst
