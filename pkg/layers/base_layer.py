"""Base layer class"""

from abc import ABC, abstractmethod
from collections import OrderedDict
from typing import Any, Dict, Iterator, List, Optional, Tuple
import logging

import numpy as np

from tensor_core.tensor import Tensor
from utils.errors import ConfigError


class Parameter(Tensor):
    """Trainable tensor; ``decay`` marks it for the L2 term"""

    def __init__(self, data, name: Optional[str] = None, decay: bool = True):
        super().__init__(data, requires_grad=True, name=name)
        self.decay = decay


class BaseLayer(ABC):
    """Base class for all network layers"""

    def __init__(self, name: str):
        self.name = name
        self.training = True
        self.logger = logging.getLogger(f"layer.{name}")
        self._parameters: "OrderedDict[str, Parameter]" = OrderedDict()
        self._children: "OrderedDict[str, BaseLayer]" = OrderedDict()
        self._buffers: "OrderedDict[str, np.ndarray]" = OrderedDict()

    @abstractmethod
    def forward(self, *inputs: Tensor) -> Tensor:
        """Run the layer"""
        pass

    def __call__(self, *inputs: Tensor) -> Tensor:
        return self.forward(*inputs)

    def add_parameter(self, name: str, data: np.ndarray, decay: bool = True) -> Parameter:
        """Register a trainable tensor under this layer"""
        if name in self._parameters:
            raise ConfigError(f"Layer {self.name}: duplicate parameter '{name}'")
        param = Parameter(data, name=f"{self.name}.{name}", decay=decay)
        self._parameters[name] = param
        return param

    def add_child(self, name: str, layer: "BaseLayer") -> "BaseLayer":
        if name in self._children:
            raise ConfigError(f"Layer {self.name}: duplicate child '{name}'")
        self._children[name] = layer
        return layer

    def add_buffer(self, name: str, data: np.ndarray) -> np.ndarray:
        """Register non-trainable state that is saved with the parameters"""
        self._buffers[name] = data
        return data

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Parameter]]:
        """Every parameter exactly once, own parameters before children"""
        seen = set()
        for qualified, param in self._walk_parameters(prefix):
            if id(param) in seen:
                continue
            seen.add(id(param))
            yield qualified, param

    def _walk_parameters(self, prefix: str) -> Iterator[Tuple[str, Parameter]]:
        for name, param in self._parameters.items():
            yield f"{prefix}{name}", param
        for child_name, child in self._children.items():
            yield from child._walk_parameters(f"{prefix}{child_name}.")

    def named_buffers(self, prefix: str = "") -> Iterator[Tuple[str, np.ndarray]]:
        for name, buffer in self._buffers.items():
            yield f"{prefix}{name}", buffer
        for child_name, child in self._children.items():
            yield from child.named_buffers(f"{prefix}{child_name}.")

    def parameters(self) -> List[Parameter]:
        return [param for _, param in self.named_parameters()]

    def decay_parameters(self) -> List[Parameter]:
        """Weights covered by the L2 term (biases and BN affine excluded)"""
        return [param for param in self.parameters() if param.decay]

    def children(self) -> List["BaseLayer"]:
        return list(self._children.values())

    def parameter_count(self) -> int:
        return sum(param.size for param in self.parameters())

    def zero_grad(self) -> None:
        for param in self.parameters():
            param.zero_grad()

    def train(self, mode: bool = True) -> "BaseLayer":
        """Switch this layer and its children between training and eval mode"""
        self.training = mode
        for child in self._children.values():
            child.train(mode)
        return self

    def eval(self) -> "BaseLayer":
        return self.train(False)

    def cast(self, dtype) -> "BaseLayer":
        """Convert every parameter and buffer to ``dtype``; gradients are dropped"""
        dtype = np.dtype(dtype)
        for param in self._parameters.values():
            if param.data.dtype != dtype:
                param.data = param.data.astype(dtype)
                param.grad = None
        for name, buffer in self._buffers.items():
            self._buffers[name] = buffer.astype(dtype, copy=False)
        for child in self._children.values():
            child.cast(dtype)
        return self

    def state_dict(self) -> "OrderedDict[str, np.ndarray]":
        """Copies of every parameter and buffer keyed by qualified name"""
        state: "OrderedDict[str, np.ndarray]" = OrderedDict()
        for name, param in self.named_parameters():
            state[name] = param.data.copy()
        for name, buffer in self.named_buffers():
            state[name] = buffer.copy()
        return state

    def load_state(self, state: Dict[str, np.ndarray]) -> None:
        """Load values in place after auditing names and shapes"""
        targets: Dict[str, np.ndarray] = {name: param.data for name, param in self.named_parameters()}
        targets.update(dict(self.named_buffers()))

        missing = sorted(set(targets) - set(state))
        unexpected = sorted(set(state) - set(targets))
        if missing or unexpected:
            raise ConfigError(
                f"Layer {self.name}: state mismatch (missing {missing[:5]}, unexpected {unexpected[:5]})"
            )
        for name, target in targets.items():
            value = np.asarray(state[name])
            if value.shape != target.shape:
                raise ConfigError(
                    f"Layer {self.name}: '{name}' has shape {value.shape}, model expects {target.shape}"
                )
        for name, target in targets.items():
            target[...] = state[name]
        self.logger.debug(f"Loaded {len(targets)} tensors into {self.name}")

    def get_layer_info(self) -> Dict[str, Any]:
        """Get layer information"""
        return {
            "name": self.name,
            "type": type(self).__name__,
            "training": self.training,
            "parameters": self.parameter_count(),
            "children": list(self._children),
        }
