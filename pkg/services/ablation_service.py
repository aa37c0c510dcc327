"""Ablation harness: module toggles, kernel sets and training share"""

import csv
import io
import logging
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.run_config import RunConfig
from data.hsi_cube import HsiCube
from services.dataset_service import DatasetService
from services.inference_service import InferenceService
from services.training_service import TrainingService
from utils.decorators import stage
from utils.validators import KernelSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AblationSetting:
    """One column of the module-toggle grid"""

    index: int
    use_mca: bool
    use_wtbc: bool
    use_fusion: bool


# Checkmark grid, taken literally: setting 0 enables every module
ABLATION_GRID: Tuple[AblationSetting, ...] = (
    AblationSetting(0, True, True, True),
    AblationSetting(1, True, True, False),
    AblationSetting(2, False, True, True),
    AblationSetting(3, True, False, True),
    AblationSetting(4, True, False, False),
    AblationSetting(5, False, True, False),
    AblationSetting(6, False, False, False),
)

KERNEL_GRID: Tuple[KernelSet, ...] = (KernelSet.K3, KernelSet.K5, KernelSet.BOTH)


@dataclass
class RunScores:
    per_class_iou: np.ndarray
    mIoU: float
    mAcc: float
    mF1: float
    train_seconds: float


def _median(values: Sequence[float]) -> float:
    finite = [v for v in values if np.isfinite(v)]
    return float(np.median(finite)) if finite else float("nan")


def _fmt(value: float) -> str:
    return "n/a" if not np.isfinite(value) else f"{value:.6f}"


class AblationService:
    """Runs seeded train/evaluate cycles over configuration variants"""

    def __init__(self, config: RunConfig, seeds: Optional[Sequence[int]] = None):
        self.config = config
        self.seeds = list(seeds) if seeds is not None else [config.seed, config.seed + 1, config.seed + 2]

    def run_once(self, cube: HsiCube, config: RunConfig, train_fraction: Optional[float] = None) -> RunScores:
        """Prepare, train and score on the validation patches"""
        dataset = DatasetService(config.train).prepare(cube, config.seed, train_fraction)
        started = time.perf_counter()
        result = TrainingService(config).train(dataset)
        elapsed = time.perf_counter() - started
        eval_set = dataset.val if len(dataset.val) else dataset.train
        report = InferenceService(result.network, config.train.batch_size).evaluate_patches(
            eval_set, dataset.num_classes, dataset.class_names
        )
        return RunScores(report.iou, report.mIoU, report.mAcc, report.mF1, elapsed)

    def _median_scores(self, cube: HsiCube, overrides: Dict[str, object]) -> Tuple[np.ndarray, float, float, float]:
        runs = []
        for seed in self.seeds:
            variant = self.config.with_overrides(dict(overrides, seed=seed))
            runs.append(self.run_once(cube, variant))
        per_class = np.array([run.per_class_iou for run in runs], dtype=np.float64)
        class_median = np.array([_median(per_class[:, k]) for k in range(per_class.shape[1])])
        return (
            class_median,
            _median([r.mIoU for r in runs]),
            _median([r.mAcc for r in runs]),
            _median([r.mF1 for r in runs]),
        )

    @stage("ablate")
    def run_module_grid(self, cube: HsiCube, grid: Sequence[AblationSetting] = ABLATION_GRID) -> List[Dict[str, str]]:
        rows = []
        names = self._class_names(cube)
        for setting in grid:
            logger.info(f"Ablation setting {setting.index}: mca={setting.use_mca} wtbc={setting.use_wtbc} "
                        f"fusion={setting.use_fusion}")
            per_class, miou, macc, mf1 = self._median_scores(
                cube,
                {
                    "model.use_mca": setting.use_mca,
                    "model.use_wtbc": setting.use_wtbc,
                    "model.use_fusion": setting.use_fusion,
                },
            )
            row = {
                "setting": str(setting.index),
                "MCA": "yes" if setting.use_mca else "no",
                "WTBC": "yes" if setting.use_wtbc else "no",
                "fusion": "yes" if setting.use_fusion else "no",
            }
            row.update({name: _fmt(v) for name, v in zip(names, per_class)})
            row.update({"mIoU": _fmt(miou), "mAcc": _fmt(macc), "mF1": _fmt(mf1)})
            rows.append(row)
        return rows

    @stage("ablate")
    def run_kernel_grid(self, cube: HsiCube, grid: Sequence[KernelSet] = KERNEL_GRID) -> List[Dict[str, str]]:
        rows = []
        names = self._class_names(cube)
        for kernel_set in grid:
            logger.info(f"Kernel setting {kernel_set.value}")
            per_class, miou, macc, mf1 = self._median_scores(cube, {"model.kernel_set": kernel_set.value})
            row = {"kernels": kernel_set.value}
            row.update({name: _fmt(v) for name, v in zip(names, per_class)})
            row.update({"mIoU": _fmt(miou), "mAcc": _fmt(macc), "mF1": _fmt(mf1)})
            rows.append(row)
        return rows

    @stage("ablate")
    def run_train_fractions(self, cube: HsiCube, fractions: Sequence[float]) -> List[Dict[str, str]]:
        rows = []
        for fraction in fractions:
            variant = self.config.with_overrides({"train.train_fraction": fraction})
            scores = self.run_once(cube, variant, fraction)
            logger.info(f"Train fraction {fraction}: mIoU={scores.mIoU:.4f} in {scores.train_seconds:.1f}s")
            rows.append(
                {
                    "fraction": f"{fraction:g}",
                    "mIoU": _fmt(scores.mIoU),
                    "mAcc": _fmt(scores.mAcc),
                    "mF1": _fmt(scores.mF1),
                    "train_seconds": f"{scores.train_seconds:.3f}",
                }
            )
        return rows

    def _class_names(self, cube: HsiCube) -> List[str]:
        count = cube.num_classes or self.config.train.num_classes
        names = list(cube.class_names)[:count]
        return names + [f"class_{i}" for i in range(len(names), count)]


def rows_to_csv(rows: List[Dict[str, str]], config_echo: Optional[str] = None) -> str:
    buffer = io.StringIO()
    if config_echo:
        buffer.write(f"# config={config_echo}\n")
    if rows:
        writer = csv.DictWriter(buffer, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return buffer.getvalue()
