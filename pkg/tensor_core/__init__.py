"""Dense tensors with tape-based reverse-mode gradients"""

from tensor_core.tensor import DEFAULT_DTYPE, GradTape, Tensor, active_tape, record_op
from tensor_core.ops import ConvSpec, RunningStats
from tensor_core.gradcheck import grad_check

__all__ = [
    "DEFAULT_DTYPE",
    "GradTape",
    "Tensor",
    "active_tape",
    "record_op",
    "ConvSpec",
    "RunningStats",
    "grad_check",
]
