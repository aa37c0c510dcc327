"""Command handlers for the CWSSNet CLI"""

import csv
import io
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from config.run_config import RunConfig
from data.cube_io import read_cube, write_cube, write_label_plane
from data.hsi_cube import HsiCube
from data.pca import pca_apply
from data.ppm import load_palette, write_label_map_ppm
from data.synthetic import nearest_prototype_accuracy, synth_scene
from layers.wtbc import wtbc_param_count
from services.ablation_service import AblationService, rows_to_csv
from services.checkpoint_service import CheckpointService
from services.dataset_service import DatasetService
from services.inference_service import InferenceService, evaluate_map
from services.training_service import TrainingService
from utils.decorators import handle_errors, stage
from utils.errors import DataError, PreconditionError

logger = logging.getLogger(__name__)

PARAM_COLUMNS = ["R", "L", "k", "C_in", "P_std", "P_WTBC", "ratio", "measured", "attention", "projection", "total", "warning"]


def param_report_csv(R_list: Sequence[int], L_list: Sequence[int], C_in: int, seed: int = 0) -> str:
    """One row per (R, L); rows with a non-integral k carry only a warning"""
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=PARAM_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for R in R_list:
        for L in L_list:
            try:
                row = wtbc_param_count(R, L, C_in, measure=True, seed=seed).as_row()
            except PreconditionError as e:
                logger.warning(f"Skipping R={R}, L={L}: {e.message}")
                row = {key: "" for key in PARAM_COLUMNS}
                row.update({"R": R, "L": L, "C_in": C_in, "P_std": R * R * C_in,
                            "warning": f"R={R} not divisible by 2^L={2 ** L}"})
            writer.writerow(row)
    return buffer.getvalue()


class CommandHandlers:
    """One method per subcommand; each returns the paths it wrote"""

    def __init__(self, config: RunConfig):
        self.config = config
        self.out_dir = Path(config.out_dir)
        self.checkpoints = CheckpointService()

    def _write_text(self, name: str, text: str) -> Path:
        path = self.out_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        logger.info(f"Wrote {path}")
        return path

    def _load_cube(self, path: Optional[str] = None) -> HsiCube:
        path = path or self.config.cube_path
        if path:
            return read_cube(path)
        logger.info("No cube given, synthesising the configured scene")
        return self._synthesise()

    def _synthesise(self) -> HsiCube:
        synth = self.config.synth
        return synth_scene(self.config.seed, synth.rows, synth.cols, synth.bands, synth.classes,
                           synth.noise_sigma, synth.mixing, synth.class_names)

    @handle_errors
    @stage("synth")
    def cmd_synth(self) -> List[Path]:
        cube = self._synthesise()
        audit = nearest_prototype_accuracy(cube)
        logger.info(f"Class separability audit: nearest-prototype accuracy {audit:.4f}")
        print(f"separability={audit:.4f}")
        path = self.out_dir / "cube.bin"
        write_cube(path, cube, self.config.echo())
        logger.info(f"Wrote {path}")
        return [path]

    @handle_errors
    @stage("train")
    def cmd_train(self) -> List[Path]:
        cube = self._load_cube()
        dataset = DatasetService(self.config.train).prepare(cube, self.config.seed)
        result = TrainingService(self.config).train(dataset)
        checkpoint = self.checkpoints.save(
            self.out_dir / "checkpoint",
            result.network,
            self.config,
            dataset.pca,
            result.best_epoch,
            result.best_mIoU,
            state=result.best_state,
            class_names=dataset.class_names,
        )
        trace = self._write_text("trace.csv", result.trace_csv(self.config.echo()))
        print(f"best_epoch={result.best_epoch} best_val_mIoU={result.best_mIoU:.4f}")
        return [checkpoint, trace]

    def _restore(self):
        if not self.config.checkpoint_path:
            raise DataError("a checkpoint directory is required (--checkpoint)")
        checkpoint = self.checkpoints.load(self.config.checkpoint_path)
        cube = self._load_cube()
        if cube.bands != checkpoint.pca.input_bands:
            raise DataError(
                f"cube has {cube.bands} bands, checkpoint PCA expects {checkpoint.pca.input_bands}"
            )
        reduced = pca_apply(cube, checkpoint.pca).astype(checkpoint.config.train.dtype)
        service = InferenceService(checkpoint.network, checkpoint.config.train.batch_size)
        prediction = service.predict_scene(reduced, checkpoint.config.train.patch_size, checkpoint.config.train.stride)
        return checkpoint, cube, prediction

    @handle_errors
    @stage("eval")
    def cmd_eval(self) -> List[Path]:
        checkpoint, cube, prediction = self._restore()
        if cube.labels is None:
            raise DataError("evaluation needs a cube with a label plane")
        names = checkpoint.manifest.get("class_names") or list(cube.class_names)
        report = evaluate_map(prediction, cube.labels, checkpoint.network.num_classes, names)
        echo = checkpoint.config.echo()
        csv_path, json_path = self.out_dir / "metrics.csv", self.out_dir / "metrics.json"
        self.out_dir.mkdir(parents=True, exist_ok=True)
        report.write_csv(csv_path, echo)
        report.write_json(json_path, echo)
        print(f"mIoU={report.mIoU:.4f} mAcc={report.mAcc:.4f} mF1={report.mF1:.4f}")
        return [csv_path, json_path]

    @handle_errors
    @stage("predict")
    def cmd_predict(self) -> List[Path]:
        checkpoint, _, prediction = self._restore()
        palette = load_palette(self.config.palette_path)
        echo = checkpoint.config.echo()
        ppm_path, plane_path = self.out_dir / "prediction.ppm", self.out_dir / "prediction.labels"
        write_label_map_ppm(ppm_path, prediction, palette, echo)
        write_label_plane(plane_path, prediction, echo)
        logger.info(f"Wrote {ppm_path} and {plane_path}")
        return [ppm_path, plane_path]

    @handle_errors
    @stage("analyze-params")
    def cmd_analyze_params(self, R_list: Sequence[int], L_list: Sequence[int], C_in: int) -> List[Path]:
        text = param_report_csv(R_list, L_list, C_in, seed=self.config.seed)
        return [self._write_text("params.csv", text)]

    @handle_errors
    @stage("ablate")
    def cmd_ablate(self, fractions: Optional[Sequence[float]] = None, seeds: Optional[Sequence[int]] = None) -> List[Path]:
        cube = self._load_cube()
        service = AblationService(self.config, seeds)
        echo = self.config.echo()
        written = [
            self._write_text("ablation.csv", rows_to_csv(service.run_module_grid(cube), echo)),
            self._write_text("kernel.csv", rows_to_csv(service.run_kernel_grid(cube), echo)),
        ]
        if fractions:
            written.append(self._write_text("train_fraction.csv", rows_to_csv(service.run_train_fractions(cube, fractions), echo)))
        return written


def describe(paths: Sequence[Path]) -> Dict[str, List[str]]:
    return {"written": [str(p) for p in paths]}


def print_summary(paths: Sequence[Path]) -> None:
    print(json.dumps(describe(paths), sort_keys=True))
