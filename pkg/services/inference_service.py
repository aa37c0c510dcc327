"""Patch inference, overlap stitching and evaluation"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config.settings import settings
from data.patches import PatchSet, extract_patches
from layers.network import CWSSNet
from metrics.confusion_matrix import ConfusionMatrix, MetricReport
from tensor_core.tensor import Tensor

logger = logging.getLogger(__name__)


def accumulate_logits(
    logits: np.ndarray, origins: Sequence[Tuple[int, int]], raster_shape: Tuple[int, int]
) -> np.ndarray:
    """Per-pixel sum of patch logits: (N_p, C, S, S) -> (C, M, N)"""
    n_patches, classes, size, _ = logits.shape
    total = np.zeros((classes,) + tuple(raster_shape), dtype=np.float64)
    for patch_logits, (r, c) in zip(logits, origins):
        total[:, r:r + size, c:c + size] += patch_logits
    return total


def argmax_labels(scores: np.ndarray, axis: int = 0) -> np.ndarray:
    """Arg-max over classes; ties go to the lowest class index"""
    return np.argmax(scores, axis=axis).astype(np.uint8)


class InferenceService:
    """Eval-mode forward passes over patch batches"""

    def __init__(self, network: CWSSNet, batch_size: int = 4, threads: Optional[int] = None):
        self.network = network
        self.batch_size = batch_size
        self.threads = threads or settings.CWSSNET_THREADS

    def patch_logits(self, patches: np.ndarray) -> np.ndarray:
        """Logits for every patch, in patch order"""
        batches: List[np.ndarray] = [
            patches[i:i + self.batch_size] for i in range(0, len(patches), self.batch_size)
        ]
        was_training = self.network.training
        self.network.eval()
        try:
            if self.threads > 1 and len(batches) > 1:
                with ThreadPoolExecutor(max_workers=self.threads) as pool:
                    outputs = list(pool.map(self._forward, batches))
            else:
                outputs = [self._forward(batch) for batch in batches]
        finally:
            self.network.train(was_training)
        return np.concatenate(outputs, axis=0)

    def _forward(self, batch: np.ndarray) -> np.ndarray:
        return self.network.forward(Tensor(batch)).data

    def predict_patches(self, patch_set: PatchSet) -> np.ndarray:
        """Per-patch label maps (N_p, S, S)"""
        return argmax_labels(self.patch_logits(patch_set.patches), axis=1)

    def predict_scene(self, reduced: np.ndarray, patch_size: int, stride: int) -> np.ndarray:
        """Label map M x N from summed overlapping patch logits"""
        patch_set = extract_patches(reduced, None, patch_size, stride)
        logits = self.patch_logits(patch_set.patches)
        total = accumulate_logits(logits, patch_set.origins, patch_set.raster_shape)
        logger.info(f"Predicted {reduced.shape[0]}x{reduced.shape[1]} scene from {len(patch_set)} patches")
        return argmax_labels(total, axis=0)

    def evaluate_patches(self, patch_set: PatchSet, num_classes: int, class_names=None) -> MetricReport:
        """Metrics of per-patch predictions against patch labels"""
        cm = ConfusionMatrix(num_classes)
        if len(patch_set):
            cm.accumulate(self.predict_patches(patch_set), patch_set.labels)
        return cm.compute(class_names)


def evaluate_map(pred: np.ndarray, gt: np.ndarray, num_classes: int, class_names=None) -> MetricReport:
    """Metrics of a full predicted label map"""
    return ConfusionMatrix(num_classes).accumulate(pred, gt).compute(class_names)
