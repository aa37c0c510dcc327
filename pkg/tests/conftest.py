"""Shared fixtures for the CWSSNet test suite"""

import numpy as np
import pytest

from config.run_config import ModelConfig, RunConfig
from data.synthetic import synth_scene


def tiny_model_config(**overrides) -> ModelConfig:
    """Smallest architecture that still exercises every module"""
    values = dict(wtbc_levels=1, mca_channels=2, reduction_ratio=4, widths=(8, 8))
    values.update(overrides)
    return ModelConfig(**values)


def tiny_run_config(out_dir: str = "runs", **train_overrides) -> RunConfig:
    train = dict(patch_size=8, stride=8, pca_bands=4, num_classes=3, epochs=2, batch_size=4, l2_lambda=0.0)
    train.update(train_overrides)
    return RunConfig(
        seed=7,
        out_dir=str(out_dir),
        train=train,
        model=tiny_model_config(),
        synth=dict(rows=16, cols=16, bands=12, classes=3),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_config(tmp_path):
    return tiny_run_config(tmp_path / "out")


@pytest.fixture
def small_scene():
    return synth_scene(42, rows=16, cols=16, bands=12, classes=3)
