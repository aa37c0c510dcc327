"""Hyperspectral cube container"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from utils.errors import DataError

IGNORE_LABEL = 255


@dataclass
class HsiCube:
    """M x N x D reflectance raster with an optional M x N label raster"""

    data: np.ndarray
    labels: Optional[np.ndarray] = None
    num_classes: int = 0
    class_names: List[str] = field(default_factory=list)
    prototypes: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.data.ndim != 3 or min(self.data.shape) < 1:
            raise DataError(f"HsiCube data must be M x N x D, got shape {self.data.shape}")
        if self.labels is not None:
            self.labels = np.asarray(self.labels)
            if self.labels.shape != self.data.shape[:2]:
                raise DataError(
                    f"HsiCube labels shape {self.labels.shape} does not match raster {self.data.shape[:2]}"
                )
            self.validate_labels()

    @property
    def rows(self) -> int:
        return int(self.data.shape[0])

    @property
    def cols(self) -> int:
        return int(self.data.shape[1])

    @property
    def bands(self) -> int:
        return int(self.data.shape[2])

    def pixels(self) -> np.ndarray:
        """Band-interleaved pixel matrix (M*N, D)"""
        return self.data.reshape(-1, self.bands)

    def validate_labels(self) -> None:
        """Labels must lie in [0, C) or equal the ignore label"""
        labels = self.labels
        scored = labels[labels != IGNORE_LABEL]
        if scored.size and (scored.min() < 0 or (self.num_classes and scored.max() >= self.num_classes)):
            raise DataError(
                f"HsiCube labels outside [0, {self.num_classes}) and not {IGNORE_LABEL}: "
                f"range {int(scored.min())}..{int(scored.max())}"
            )

    def with_data(self, data: np.ndarray) -> "HsiCube":
        """Same labels and metadata over new spectral data (e.g. PCA output)"""
        return HsiCube(data, self.labels, self.num_classes, list(self.class_names), None)
