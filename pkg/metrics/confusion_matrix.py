"""Confusion matrix and segmentation metrics (IoU, F1, recall accuracy)"""

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from utils.errors import DataError, DimensionError

logger = logging.getLogger(__name__)

IGNORE_LABEL = 255
PathLike = Union[str, Path]


class ConfusionMatrix:
    """Rows are ground-truth classes, columns are predicted classes"""

    def __init__(self, num_classes: int):
        if num_classes < 1:
            raise DataError(f"ConfusionMatrix needs at least one class, got {num_classes}")
        self.num_classes = num_classes
        self.counts = np.zeros((num_classes, num_classes), dtype=np.int64)

    def accumulate(self, pred: np.ndarray, gt: np.ndarray) -> "ConfusionMatrix":
        """Add one count per scored pixel; ignore-label ground truth is skipped"""
        pred = np.asarray(pred)
        gt = np.asarray(gt)
        if pred.shape != gt.shape:
            raise DimensionError("shape", gt.shape, pred.shape, "ConfusionMatrix.accumulate")
        mask = gt != IGNORE_LABEL
        truth = gt[mask].astype(np.int64)
        predicted = pred[mask].astype(np.int64)
        if predicted.size == 0:
            return self
        if predicted.min() < 0 or predicted.max() >= self.num_classes:
            raise DataError(f"prediction outside [0, {self.num_classes})")
        if truth.min() < 0 or truth.max() >= self.num_classes:
            raise DataError(f"ground truth outside [0, {self.num_classes}) and not {IGNORE_LABEL}")
        flat = np.bincount(truth * self.num_classes + predicted, minlength=self.num_classes ** 2)
        self.counts += flat.reshape(self.num_classes, self.num_classes)
        return self

    def merge(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        """Elementwise sum of two matrices over disjoint pixel sets"""
        if other.num_classes != self.num_classes:
            raise DimensionError("classes", self.num_classes, other.num_classes, "ConfusionMatrix.merge")
        merged = ConfusionMatrix(self.num_classes)
        merged.counts = self.counts + other.counts
        return merged

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return self.merge(other)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def true_positives(self) -> np.ndarray:
        return np.diag(self.counts).copy()

    def false_positives(self) -> np.ndarray:
        return self.counts.sum(axis=0) - np.diag(self.counts)

    def false_negatives(self) -> np.ndarray:
        return self.counts.sum(axis=1) - np.diag(self.counts)

    def reset(self) -> None:
        self.counts[...] = 0

    def compute(self, class_names: Optional[Sequence[str]] = None) -> "MetricReport":
        return compute_metrics(self, class_names)


@dataclass
class MetricReport:
    """Per-class IoU/F1/Acc and their class means"""

    class_names: List[str]
    iou: np.ndarray
    f1: np.ndarray
    acc: np.ndarray
    present: np.ndarray
    mIoU: float
    mF1: float
    mAcc: float
    absent: List[str] = field(default_factory=list)

    def as_dict(self) -> Dict[str, object]:
        per_class = {}
        for i, name in enumerate(self.class_names):
            per_class[name] = (
                {"IoU": float(self.iou[i]), "F1": float(self.f1[i]), "Acc": float(self.acc[i])}
                if self.present[i]
                else None
            )
        return {
            "mIoU": self.mIoU,
            "mF1": self.mF1,
            "mAcc": self.mAcc,
            "per_class": per_class,
            "absent_classes": list(self.absent),
        }

    def to_csv(self, config_echo: Optional[str] = None) -> str:
        buffer = io.StringIO()
        if config_echo:
            buffer.write(f"# config={config_echo}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["class", "IoU", "F1", "Acc"])
        for i, name in enumerate(self.class_names):
            if self.present[i]:
                writer.writerow([name, f"{self.iou[i]:.6f}", f"{self.f1[i]:.6f}", f"{self.acc[i]:.6f}"])
            else:
                writer.writerow([name, "n/a", "n/a", "n/a"])
        writer.writerow(["mean", f"{self.mIoU:.6f}", f"{self.mF1:.6f}", f"{self.mAcc:.6f}"])
        return buffer.getvalue()

    def write_csv(self, path: PathLike, config_echo: Optional[str] = None) -> None:
        Path(path).write_text(self.to_csv(config_echo), encoding="utf-8")

    def write_json(self, path: PathLike, config_echo: Optional[str] = None) -> None:
        payload = self.as_dict()
        payload["config"] = json.loads(config_echo) if config_echo else None
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")


def compute_metrics(cm: ConfusionMatrix, class_names: Optional[Sequence[str]] = None) -> MetricReport:
    """IoU = TP/(TP+FP+FN), F1 = 2TP/(2TP+FP+FN), Acc = TP/(TP+FN)

    A class with TP = FP = FN = 0 is excluded from the means and listed as
    absent. A class predicted but missing from the ground truth scores 0.
    """
    tp = cm.true_positives().astype(np.float64)
    fp = cm.false_positives().astype(np.float64)
    fn = cm.false_negatives().astype(np.float64)
    present = (tp + fp + fn) > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        iou = np.where(present, tp / (tp + fp + fn), np.nan)
        f1 = np.where(present, 2 * tp / (2 * tp + fp + fn), np.nan)
        acc = np.where(tp + fn > 0, tp / (tp + fn), np.where(present, 0.0, np.nan))
    names = list(class_names or [])[: cm.num_classes]
    names += [f"class_{i}" for i in range(len(names), cm.num_classes)]
    absent = [names[i] for i in range(cm.num_classes) if not present[i]]
    if absent:
        logger.info(f"Classes absent from prediction and ground truth: {absent}")

    def mean(values: np.ndarray) -> float:
        return float(values[present].mean()) if present.any() else 0.0

    return MetricReport(names, iou, f1, acc, present, mean(iou), mean(f1), mean(acc), absent)
