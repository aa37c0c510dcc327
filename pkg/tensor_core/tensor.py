"""Dense tensor and gradient tape"""

import threading
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from utils.errors import DimensionError, PreconditionError

DEFAULT_DTYPE = np.float64

BackwardFn = Callable[[List[np.ndarray]], Sequence[Optional[np.ndarray]]]

_state = threading.local()


class Tensor:
    """Dense N-dimensional float array with an optional gradient slot"""

    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None, dtype=None):
        if isinstance(data, Tensor):
            data = data.data
        if dtype is None:
            existing = getattr(data, "dtype", None)
            dtype = existing if existing is not None and np.issubdtype(existing, np.floating) else DEFAULT_DTYPE
        array = np.ascontiguousarray(data, dtype=dtype)
        if any(extent < 1 for extent in array.shape):
            raise DimensionError("shape", "all extents >= 1", array.shape, "Tensor")
        self.data = array
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self.is_leaf = True

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        """Return a copy of the underlying array"""
        return self.data.copy()

    def item(self) -> float:
        if self.data.size != 1:
            raise DimensionError("size", 1, self.data.size, "Tensor.item")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        """New leaf sharing no history with this tensor"""
        return Tensor(self.data.copy(), name=self.name)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{label})"

    def __add__(self, other):
        from tensor_core import ops
        return ops.add(self, ops.as_tensor(other, self.dtype))

    def __radd__(self, other):
        return self.__add__(other)

    def __sub__(self, other):
        from tensor_core import ops
        return ops.sub(self, ops.as_tensor(other, self.dtype))

    def __mul__(self, other):
        from tensor_core import ops
        return ops.mul(self, ops.as_tensor(other, self.dtype))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        from tensor_core import ops
        return ops.scale(self, -1.0)


class _Record(NamedTuple):
    outputs: Tuple[Tensor, ...]
    inputs: Tuple[Tensor, ...]
    backward: BackwardFn
    op: str


class GradTape:
    """Ordered record of executed forward operations

    Operations run while a tape is active (``with GradTape() as tape``) and
    touching a tensor that requires gradients are appended in execution
    order. ``backward`` replays them in reverse. A tape belongs to the
    thread that opened it.
    """

    def __init__(self):
        self.records: List[_Record] = []

    def __enter__(self) -> "GradTape":
        stack = getattr(_state, "tapes", None)
        if stack is None:
            stack = []
            _state.tapes = stack
        stack.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _state.tapes.pop()

    def __len__(self) -> int:
        return len(self.records)

    def record(self, outputs: Sequence[Tensor], inputs: Sequence[Tensor], backward: BackwardFn, op: str) -> None:
        for out in outputs:
            out.requires_grad = True
            out.is_leaf = False
        self.records.append(_Record(tuple(outputs), tuple(inputs), backward, op))

    def backward(self, target: Tensor, seed: Optional[np.ndarray] = None) -> Dict[int, np.ndarray]:
        """Accumulate d(target)/d(leaf) into ``.grad`` of every tracked leaf"""
        if not target.requires_grad:
            raise PreconditionError("backward called on a tensor that was not recorded on this tape")
        grads: Dict[int, np.ndarray] = {
            id(target): np.ones_like(target.data) if seed is None else np.asarray(seed, dtype=target.dtype)
        }
        leaves: Dict[int, Tensor] = {}
        if target.is_leaf:
            leaves[id(target)] = target

        for record in reversed(self.records):
            out_grads = [grads.pop(id(out), None) for out in record.outputs]
            if all(g is None for g in out_grads):
                continue
            out_grads = [
                g if g is not None else np.zeros_like(out.data)
                for g, out in zip(out_grads, record.outputs)
            ]
            in_grads = record.backward(out_grads)
            for tensor, grad in zip(record.inputs, in_grads):
                if grad is None or not tensor.requires_grad:
                    continue
                key = id(tensor)
                grads[key] = grads[key] + grad if key in grads else grad
                if tensor.is_leaf:
                    leaves[key] = tensor

        for key, leaf in leaves.items():
            grad = grads.get(key)
            if grad is None:
                continue
            leaf.grad = grad if leaf.grad is None else leaf.grad + grad
        return {key: grads[key] for key in leaves if key in grads}


def active_tape() -> Optional[GradTape]:
    """Innermost tape of the calling thread"""
    stack = getattr(_state, "tapes", None)
    return stack[-1] if stack else None


def record_op(outputs: Sequence[Tensor], inputs: Sequence[Tensor], backward: BackwardFn, op: str) -> None:
    """Record an op on the active tape if any input is tracked"""
    tape = active_tape()
    if tape is None:
        return
    if any(t.requires_grad for t in inputs):
        tape.record(outputs, inputs, backward, op)
