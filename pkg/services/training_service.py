"""Training loop"""

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from config.logging_config import training_logger
from config.run_config import RunConfig
from layers.base_layer import BaseLayer
from layers.network import CWSSNet, segmentation_loss
from services.dataset_service import PreparedDataset
from services.inference_service import InferenceService
from services.optimizer import build_optimizer
from tensor_core.tensor import GradTape, Tensor
from utils.decorators import stage, timed
from utils.errors import DataError, NumericError

logger = logging.getLogger(__name__)


@dataclass
class EpochRecord:
    """One row of the metric trace"""

    epoch: int
    loss: float
    val_mIoU: float


@dataclass
class TrainingResult:
    """Trained network (best state loaded), trace and best checkpoint state"""

    network: CWSSNet
    trace: List[EpochRecord]
    best_epoch: int
    best_mIoU: float
    best_state: Dict[str, np.ndarray] = field(default_factory=dict)
    train_seconds: float = 0.0

    def trace_csv(self, config_echo: Optional[str] = None) -> str:
        lines = [f"# config={config_echo}"] if config_echo else []
        lines.append("epoch,loss,val_mIoU")
        lines.extend(f"{r.epoch},{r.loss:.8f},{r.val_mIoU:.6f}" for r in self.trace)
        return "\n".join(lines) + "\n"


def first_nonfinite(tape: GradTape) -> Optional[str]:
    """Name of the first recorded op whose output is not finite"""
    for record in tape.records:
        for out in record.outputs:
            if not np.all(np.isfinite(out.data)):
                return out.name or record.op
    return None


def check_gradients(network: BaseLayer) -> None:
    for name, param in network.named_parameters():
        if param.grad is not None and not np.all(np.isfinite(param.grad)):
            raise NumericError(f"non-finite gradient in parameter '{name}'", tensor_name=name)


def training_step(network: CWSSNet, optimizer, batch: np.ndarray, labels: np.ndarray, l2_lambda: float) -> float:
    """Forward, backward and one optimizer update; returns the loss"""
    network.train()
    with GradTape() as tape:
        logits = network(Tensor(batch))
        loss = segmentation_loss(logits, labels, network, l2_lambda)
    value = loss.item()
    if not np.isfinite(value):
        culprit = first_nonfinite(tape) or "loss"
        raise NumericError(f"non-finite loss {value}; first non-finite tensor: {culprit}", tensor_name=culprit)
    tape.backward(loss)
    check_gradients(network)
    optimizer.step()
    optimizer.zero_grad()
    return value


def fit_batch(network: CWSSNet, batch: np.ndarray, labels: np.ndarray, config: RunConfig, steps: int) -> List[float]:
    """Repeated updates on a single batch; returns the loss of every step"""
    optimizer = build_optimizer(network.parameters(), config.train)
    return [training_step(network, optimizer, batch, labels, config.train.l2_lambda) for _ in range(steps)]


class TrainingService:
    """Seeded mini-batch training with best-by-mIoU selection"""

    def __init__(self, config: RunConfig):
        self.config = config

    def build_network(self, bands: int, num_classes: int) -> CWSSNet:
        return CWSSNet(bands, num_classes, self.config.model, seed=self.config.seed, dtype=self.config.train.dtype)

    @stage("train")
    @timed("training")
    def train(self, dataset: PreparedDataset, network: Optional[CWSSNet] = None) -> TrainingResult:
        cfg = self.config.train
        if len(dataset.train) == 0:
            raise DataError("training set is empty")
        network = network or self.build_network(dataset.bands, dataset.num_classes)
        optimizer = build_optimizer(network.parameters(), cfg)
        shuffler = np.random.default_rng(self.config.seed)
        evaluator = InferenceService(network, cfg.batch_size)
        val_set = dataset.val if len(dataset.val) else dataset.train

        trace: List[EpochRecord] = []
        best_state: Dict[str, np.ndarray] = network.state_dict()
        best_mIoU, best_epoch = -1.0, 0
        started = time.perf_counter()
        for epoch in range(1, cfg.epochs + 1):
            order = shuffler.permutation(len(dataset.train))
            losses = []
            for start in range(0, len(order), cfg.batch_size):
                idx = np.sort(order[start:start + cfg.batch_size])
                batch = dataset.train.patches[idx]
                labels = dataset.train.labels[idx]
                losses.append(training_step(network, optimizer, batch, labels, cfg.l2_lambda))
            report = evaluator.evaluate_patches(val_set, dataset.num_classes, dataset.class_names)
            record = EpochRecord(epoch, float(np.mean(losses)), report.mIoU)
            trace.append(record)
            training_logger.info(f"epoch {epoch}/{cfg.epochs} loss={record.loss:.6f} val_mIoU={record.val_mIoU:.4f}")
            if not np.isfinite(record.val_mIoU):
                training_logger.warning(f"epoch {epoch}: validation mIoU is not finite; skipped for best selection")
            elif record.val_mIoU > best_mIoU:
                best_mIoU, best_epoch = record.val_mIoU, epoch
                best_state = network.state_dict()
        elapsed = time.perf_counter() - started
        if best_epoch == 0:
            best_mIoU = float("nan")

        network.load_state(best_state)
        logger.info(f"Best validation mIoU {best_mIoU:.4f} at epoch {best_epoch}")
        return TrainingResult(network, trace, best_epoch, best_mIoU, best_state, elapsed)
