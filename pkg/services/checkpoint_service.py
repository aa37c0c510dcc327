"""Checkpoint directories: one tensor container per parameter plus a JSON manifest"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from config.run_config import RunConfig
from data.pca import PcaModel
from layers.network import CWSSNet
from tensor_core.serialization import load_array, save_tensor
from utils.decorators import stage
from utils.errors import ConfigError, DataError

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
PathLike = Union[str, Path]


def _file_name(name: str) -> str:
    return name.replace("/", "_") + ".tensor"


@dataclass
class Checkpoint:
    """Restored network with its configuration and PCA projection"""

    network: CWSSNet
    config: RunConfig
    pca: PcaModel
    manifest: Dict[str, Any]


class CheckpointService:
    """Reads and writes checkpoint directories"""

    @stage("checkpoint")
    def save(
        self,
        directory: PathLike,
        network: CWSSNet,
        config: RunConfig,
        pca: PcaModel,
        epoch: int,
        best_mIoU: float,
        state: Optional[Dict[str, np.ndarray]] = None,
        class_names=None,
    ) -> Path:
        directory = Path(directory)
        (directory / "tensors").mkdir(parents=True, exist_ok=True)
        state = state if state is not None else network.state_dict()
        entries = []
        for name, value in state.items():
            save_tensor(value, directory / "tensors" / _file_name(name))
            entries.append({"name": name, "shape": list(value.shape), "file": f"tensors/{_file_name(name)}"})
        for key in ("mean", "components", "eigenvalues"):
            save_tensor(getattr(pca, key), directory / f"pca_{key}.tensor")
        manifest = {
            "format": "cwssnet-checkpoint",
            "version": 1,
            "bands": network.bands,
            "num_classes": network.num_classes,
            "class_names": list(class_names or []),
            "epoch": epoch,
            "best_mIoU": best_mIoU,
            "config": json.loads(config.echo()),
            "seed": config.seed,
            "pca": {"total_variance": pca.total_variance, "input_bands": pca.input_bands},
            "tensors": entries,
        }
        (directory / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
        logger.info(f"Saved checkpoint with {len(entries)} tensors to {directory}")
        return directory

    def read_manifest(self, directory: PathLike) -> Dict[str, Any]:
        path = Path(directory) / MANIFEST
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except OSError as e:
            raise DataError(f"Cannot read checkpoint manifest {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise DataError(f"Malformed checkpoint manifest {path}: {e}") from e

    @stage("checkpoint")
    def load(self, directory: PathLike, expected: Optional[RunConfig] = None) -> Checkpoint:
        """Rebuild the network and audit every tensor shape before loading"""
        directory = Path(directory)
        manifest = self.read_manifest(directory)
        config = RunConfig.from_dict(manifest["config"])
        if expected is not None and expected.model != config.model:
            raise ConfigError("checkpoint model configuration differs from the requested configuration")
        network = CWSSNet(
            int(manifest["bands"]), int(manifest["num_classes"]), config.model, seed=config.seed, dtype=config.train.dtype
        )

        model_shapes = {name: value.shape for name, value in network.state_dict().items()}
        listed = {entry["name"]: tuple(entry["shape"]) for entry in manifest["tensors"]}
        if set(listed) != set(model_shapes):
            missing = sorted(set(model_shapes) - set(listed))[:5]
            extra = sorted(set(listed) - set(model_shapes))[:5]
            raise ConfigError(f"checkpoint tensors do not match the model (missing {missing}, unexpected {extra})")
        for name, shape in listed.items():
            if tuple(model_shapes[name]) != shape:
                raise ConfigError(f"checkpoint tensor '{name}' has shape {shape}, model expects {model_shapes[name]}")

        state = {}
        for entry in manifest["tensors"]:
            array, _ = load_array(directory / entry["file"])
            state[entry["name"]] = array
        network.load_state(state)

        pca_parts = {key: load_array(directory / f"pca_{key}.tensor")[0] for key in ("mean", "components", "eigenvalues")}
        pca = PcaModel(
            pca_parts["mean"], pca_parts["components"], pca_parts["eigenvalues"],
            float(manifest["pca"]["total_variance"]),
        )
        logger.info(f"Loaded checkpoint from {directory} (epoch {manifest.get('epoch')})")
        return Checkpoint(network, config, pca, manifest)
