"""Overlapping patch extraction, reassembly and train/validation split"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from utils.errors import DataError, PreconditionError


def patch_origins(extent: int, size: int, stride: int) -> List[int]:
    """Multiples of stride, with the last origin snapped inward to cover the edge"""
    if size > extent:
        raise DataError(f"patch size {size} exceeds raster extent {extent}")
    if stride < 1 or stride > size:
        raise PreconditionError(f"stride must lie in [1, {size}], got {stride}")
    origins = list(range(0, extent - size + 1, stride))
    if origins[-1] != extent - size:
        origins.append(extent - size)
    return origins


@dataclass
class PatchSet:
    """S x S x B patches with their labels and raster origins"""

    patches: np.ndarray
    labels: Optional[np.ndarray]
    origins: List[Tuple[int, int]]
    patch_size: int
    stride: int
    raster_shape: Tuple[int, int] = (0, 0)
    indices: List[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.origins)

    def subset(self, indices: Sequence[int]) -> "PatchSet":
        indices = list(indices)
        return PatchSet(
            self.patches[indices],
            None if self.labels is None else self.labels[indices],
            [self.origins[i] for i in indices],
            self.patch_size,
            self.stride,
            self.raster_shape,
            [self.indices[i] for i in indices] if self.indices else indices,
        )


def extract_patches(data: np.ndarray, labels: Optional[np.ndarray], size: int, stride: int) -> PatchSet:
    """Raster-ordered overlapping patches of an M x N x B array"""
    rows, cols = data.shape[:2]
    if size > min(rows, cols):
        raise DataError(f"patch size {size} is larger than the cube ({rows} x {cols})")
    origins = [(r, c) for r in patch_origins(rows, size, stride) for c in patch_origins(cols, size, stride)]
    patches = np.stack([data[r:r + size, c:c + size] for r, c in origins])
    patch_labels = None
    if labels is not None:
        patch_labels = np.stack([labels[r:r + size, c:c + size] for r, c in origins])
    return PatchSet(patches, patch_labels, origins, size, stride, (rows, cols), list(range(len(origins))))


def coverage(patch_set: PatchSet) -> np.ndarray:
    """Number of patches covering each raster pixel"""
    counts = np.zeros(patch_set.raster_shape, dtype=np.int64)
    s = patch_set.patch_size
    for r, c in patch_set.origins:
        counts[r:r + s, c:c + s] += 1
    return counts


def reassemble_patches(patch_set: PatchSet) -> Tuple[np.ndarray, np.ndarray]:
    """Rebuild the raster from patches; returns (raster, covered mask)"""
    rows, cols = patch_set.raster_shape
    s = patch_set.patch_size
    raster = np.zeros((rows, cols) + patch_set.patches.shape[3:], dtype=patch_set.patches.dtype)
    covered = np.zeros((rows, cols), dtype=bool)
    for patch, (r, c) in zip(patch_set.patches, patch_set.origins):
        raster[r:r + s, c:c + s] = patch
        covered[r:r + s, c:c + s] = True
    return raster, covered


def split_patches(patch_set: PatchSet, train_fraction: float, seed: int) -> Tuple[PatchSet, PatchSet]:
    """Seeded split by patch; both halves keep raster order"""
    if not 0.0 < train_fraction <= 1.0:
        raise PreconditionError(f"train_fraction must lie in (0, 1], got {train_fraction}")
    n = len(patch_set)
    if n == 0:
        raise DataError("cannot split an empty patch set")
    n_train = min(n, max(1, int(round(train_fraction * n))))
    order = np.random.default_rng(seed).permutation(n)
    train_idx = sorted(order[:n_train].tolist())
    val_idx = sorted(order[n_train:].tolist())
    return patch_set.subset(train_idx), patch_set.subset(val_idx)
