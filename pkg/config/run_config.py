"""Run configuration models for CWSSNet commands"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from config.settings import settings
from utils.errors import ConfigError
from utils.validators import AttentionWiring, KernelSet, OptimizerName, WaveletName

DEFAULT_CLASS_NAMES = ["Built-up Area", "Water", "Vegetation", "Bare Land", "Road", "Other"]


class TrainConfig(BaseModel):
    """Optimisation and data-shape settings"""

    learning_rate: float = 0.006
    optimizer: OptimizerName = OptimizerName.ADAMW
    weight_decay: float = 0.0
    l2_lambda: float = 1e-4
    batch_size: int = 4
    epochs: int = 200
    patch_size: int = 32
    pca_bands: int = 30
    num_classes: int = 6
    stride: int = 16
    train_fraction: float = 0.7
    dtype: str = Field(default_factory=lambda: settings.DEFAULT_DTYPE)

    @field_validator('patch_size')
    def validate_patch_size(cls, v):
        if v < 4 or v % 4 != 0:
            raise ValueError('patch_size must be a positive multiple of 4')
        return v

    @field_validator('pca_bands', 'batch_size', 'epochs', 'stride')
    def validate_positive(cls, v):
        if v < 1:
            raise ValueError('value must be at least 1')
        return v

    @field_validator('num_classes')
    def validate_classes(cls, v):
        if v < 2:
            raise ValueError('num_classes must be at least 2')
        return v

    @field_validator('train_fraction')
    def validate_fraction(cls, v):
        if not 0.0 < v <= 1.0:
            raise ValueError('train_fraction must lie in (0, 1]')
        return v

    @field_validator('learning_rate', 'weight_decay', 'l2_lambda')
    def validate_non_negative(cls, v):
        if v < 0:
            raise ValueError('value must be non-negative')
        return v

    @field_validator('dtype')
    def validate_dtype(cls, v):
        if v not in ("float64", "float32"):
            raise ValueError('dtype must be float64 or float32')
        return v


class ModelConfig(BaseModel):
    """Architecture settings and ablation toggles"""

    wavelet: WaveletName = WaveletName.HAAR
    wtbc_levels: int = 2
    kernel_set: KernelSet = KernelSet.BOTH
    attention_wiring: AttentionWiring = AttentionWiring.SAME_BAND
    mca_channels: int = 8
    mca_kernel: Tuple[int, int, int] = (3, 3, 7)
    mca_depth_stride: int = 2
    reduction_ratio: int = 8
    widths: Tuple[int, int] = (32, 64)
    use_mca: bool = True
    use_wtbc: bool = True
    use_fusion: bool = True

    @field_validator('wtbc_levels', 'mca_channels', 'mca_depth_stride', 'reduction_ratio')
    def validate_positive(cls, v):
        if v < 1:
            raise ValueError('value must be at least 1')
        return v

    @field_validator('mca_kernel')
    def validate_kernel(cls, v):
        if any(k < 1 or k % 2 == 0 for k in v):
            raise ValueError('mca_kernel extents must be odd and positive')
        return v

    @model_validator(mode='after')
    def validate_widths(self):
        for width in self.widths:
            if width < 2 or width % 2 != 0 or width % self.reduction_ratio != 0:
                raise ValueError(
                    f'width {width} must be even and divisible by reduction_ratio {self.reduction_ratio}'
                )
        return self


class SynthConfig(BaseModel):
    """Synthetic scene settings"""

    rows: int = 64
    cols: int = 64
    bands: int = 100
    classes: int = 6
    noise_sigma: float = 0.01
    mixing: bool = True
    class_names: List[str] = Field(default_factory=lambda: list(DEFAULT_CLASS_NAMES))

    @field_validator('classes')
    def validate_classes(cls, v):
        if v < 2:
            raise ValueError('classes must be at least 2')
        return v


class RunConfig(BaseModel):
    """Complete configuration of one CLI command"""

    seed: int = 42
    out_dir: str = Field(default_factory=lambda: settings.OUTPUT_DIR)
    cube_path: Optional[str] = None
    checkpoint_path: Optional[str] = None
    palette_path: Optional[str] = None
    train: TrainConfig = Field(default_factory=TrainConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    synth: SynthConfig = Field(default_factory=SynthConfig)

    @model_validator(mode='after')
    def validate_shape_ledger(self):
        factor = 2 ** (self.model.wtbc_levels + 1)
        if self.train.patch_size % factor != 0:
            raise ValueError(
                f'patch_size {self.train.patch_size} must be divisible by {factor} '
                f'for {self.model.wtbc_levels}-level WTBC at the second encoder level'
            )
        if self.train.stride > self.train.patch_size:
            raise ValueError('stride must not exceed patch_size')
        return self

    def echo(self) -> str:
        """Deterministic JSON echo embedded in every artifact"""
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def with_overrides(self, overrides: Dict[str, Any]) -> "RunConfig":
        """Return a copy with dotted-key overrides applied ('train.epochs': 5)"""
        data = self.model_dump(mode="json")
        for dotted, value in overrides.items():
            if value is None:
                continue
            target = data
            parts = dotted.split(".")
            for part in parts[:-1]:
                target = target[part]
            target[parts[-1]] = value
        return RunConfig.from_dict(data)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        """Validate a plain dict"""
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise ConfigError(f"Invalid run configuration: {e}") from e

    @classmethod
    def from_json_file(cls, path: str) -> "RunConfig":
        """Load a JSON configuration file"""
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot read configuration {path}: {e}") from e
        return cls.from_dict(data)

    @classmethod
    def json_schema_text(cls) -> str:
        """Documented schema of the configuration file"""
        return json.dumps(cls.model_json_schema(), indent=2, sort_keys=True)
