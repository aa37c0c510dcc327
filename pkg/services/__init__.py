"""Services module initialization"""

from .ablation_service import AblationService
from .checkpoint_service import CheckpointService
from .dataset_service import DatasetService, PreparedDataset
from .inference_service import InferenceService
from .optimizer import AdamW, build_optimizer
from .training_service import TrainingService, TrainingResult

__all__ = [
    'AblationService',
    'CheckpointService',
    'DatasetService',
    'PreparedDataset',
    'InferenceService',
    'AdamW',
    'build_optimizer',
    'TrainingService',
    'TrainingResult',
]
