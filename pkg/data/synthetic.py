"""Seeded synthetic hyperspectral scenes"""

import logging
from typing import List, Optional, Sequence

import numpy as np

from data.hsi_cube import HsiCube
from utils.errors import PreconditionError

logger = logging.getLogger(__name__)

MIX_OWN = 0.7
MIX_NEIGHBOUR = 0.3


def class_prototypes(rng: np.random.Generator, classes: int, bands: int) -> np.ndarray:
    """Smooth random spectra in [0.05, 0.95], one row per class

    White noise is smoothed with a Gaussian kernel, which gives curves with
    the correlation structure of a squared-exponential process.
    """
    width = max(bands / 12.0, 1.0)
    radius = int(np.ceil(3 * width))
    offsets = np.arange(-radius, radius + 1)
    kernel = np.exp(-0.5 * (offsets / width) ** 2)
    kernel /= kernel.sum()
    noise = rng.standard_normal((classes, bands + 2 * radius))
    curves = np.stack([np.convolve(row, kernel, mode="valid") for row in noise])
    low = curves.min(axis=1, keepdims=True)
    high = curves.max(axis=1, keepdims=True)
    span = np.where(high - low > 0, high - low, 1.0)
    level = rng.uniform(0.2, 0.8, size=(classes, 1))
    amplitude = rng.uniform(0.1, 0.3, size=(classes, 1))
    return np.clip(level + amplitude * ((curves - low) / span - 0.5) * 2.0, 0.05, 0.95)


def voronoi_labels(rng: np.random.Generator, rows: int, cols: int, classes: int, sites_per_class: int = 3) -> np.ndarray:
    """Label map of nearest random sites; every class owns at least one site"""
    n_sites = classes * sites_per_class
    site_rows = rng.uniform(0, rows, size=n_sites)
    site_cols = rng.uniform(0, cols, size=n_sites)
    site_classes = rng.permutation(np.arange(n_sites) % classes)
    rr, cc = np.meshgrid(np.arange(rows) + 0.5, np.arange(cols) + 0.5, indexing="ij")
    dist = (rr[..., None] - site_rows) ** 2 + (cc[..., None] - site_cols) ** 2
    return site_classes[np.argmin(dist, axis=-1)].astype(np.uint8)


def boundary_neighbour(labels: np.ndarray) -> np.ndarray:
    """Label of the first differing 4-neighbour (up, down, left, right), or -1"""
    neighbour = np.full(labels.shape, -1, dtype=np.int64)
    padded = np.pad(labels.astype(np.int64), 1, mode="edge")
    shifts = [(0, 1), (2, 1), (1, 0), (1, 2)]
    rows, cols = labels.shape
    for dr, dc in shifts:
        other = padded[dr:dr + rows, dc:dc + cols]
        take = (neighbour < 0) & (other != labels)
        neighbour[take] = other[take]
    return neighbour


def synth_scene(
    seed: int,
    rows: int = 64,
    cols: int = 64,
    bands: int = 100,
    classes: int = 6,
    noise_sigma: float = 0.01,
    mixing: bool = True,
    class_names: Optional[Sequence[str]] = None,
) -> HsiCube:
    """Voronoi land-cover scene with per-class prototype spectra"""
    if classes < 2:
        raise PreconditionError(f"synth_scene needs at least 2 classes, got {classes}")
    rng = np.random.default_rng(seed)
    prototypes = class_prototypes(rng, classes, bands)
    labels = voronoi_labels(rng, rows, cols, classes)
    data = prototypes[labels]
    if mixing:
        neighbour = boundary_neighbour(labels)
        edge = neighbour >= 0
        data[edge] = MIX_OWN * prototypes[labels[edge]] + MIX_NEIGHBOUR * prototypes[neighbour[edge]]
    if noise_sigma > 0:
        data = data + noise_sigma * rng.standard_normal(data.shape)
    names: List[str] = list(class_names or [])[:classes]
    names += [f"class_{i}" for i in range(len(names), classes)]
    logger.info(f"Synthesised {rows}x{cols}x{bands} scene with {classes} classes (seed {seed})")
    return HsiCube(data, labels, classes, names, prototypes)


def nearest_prototype_accuracy(cube: HsiCube, prototypes: Optional[np.ndarray] = None) -> float:
    """Share of labelled pixels whose nearest prototype is their own class"""
    prototypes = cube.prototypes if prototypes is None else prototypes
    if prototypes is None or cube.labels is None:
        raise PreconditionError("nearest_prototype_accuracy needs prototypes and labels")
    pixels = cube.pixels()
    dist = ((pixels[:, None, :] - prototypes[None, :, :]) ** 2).sum(axis=-1)
    predicted = np.argmin(dist, axis=1)
    truth = cube.labels.reshape(-1)
    scored = truth != 255
    return float(np.mean(predicted[scored] == truth[scored]))
