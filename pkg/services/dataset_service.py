"""Dataset preparation: patch split, PCA on training pixels, reduced patches"""

import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from config.run_config import TrainConfig
from data.hsi_cube import HsiCube
from data.patches import PatchSet, coverage, extract_patches, split_patches
from data.pca import PcaModel, pca_apply, pca_fit
from utils.decorators import stage
from utils.errors import DataError

logger = logging.getLogger(__name__)


@dataclass
class PreparedDataset:
    """PCA model, reduced raster and train/validation patches"""

    pca: PcaModel
    reduced: np.ndarray
    labels: np.ndarray
    train: PatchSet
    val: PatchSet
    num_classes: int
    class_names: List[str] = field(default_factory=list)

    @property
    def bands(self) -> int:
        return int(self.reduced.shape[-1])


class DatasetService:
    """Builds training data from a labelled cube"""

    def __init__(self, config: TrainConfig):
        self.config = config

    @stage("prepare")
    def prepare(self, cube: HsiCube, seed: int, train_fraction: float = None) -> PreparedDataset:
        """PCA is fitted on pixels covered by training patches only"""
        if cube.labels is None:
            raise DataError("training needs a cube with a label plane")
        cfg = self.config
        fraction = cfg.train_fraction if train_fraction is None else train_fraction
        layout = extract_patches(np.zeros(cube.data.shape[:2] + (1,)), cube.labels, cfg.patch_size, cfg.stride)
        train_layout, val_layout = split_patches(layout, fraction, seed)
        train_mask = coverage(train_layout) > 0

        pca = pca_fit(cube, cfg.pca_bands, mask=train_mask)
        reduced = pca_apply(cube, pca).astype(cfg.dtype)
        full = extract_patches(reduced, cube.labels, cfg.patch_size, cfg.stride)
        train = full.subset(train_layout.indices)
        val = full.subset(val_layout.indices)
        logger.info(
            f"Prepared {len(train)} training and {len(val)} validation patches "
            f"(S={cfg.patch_size}, stride={cfg.stride}, B={cfg.pca_bands})"
        )
        return PreparedDataset(
            pca, reduced, cube.labels, train, val, cube.num_classes or cfg.num_classes, list(cube.class_names)
        )
