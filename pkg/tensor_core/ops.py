"""Differentiable tensor operations

Every forward op records its backward counterpart on the active GradTape.
Network ops take a leading batch axis: Tensor[N, C, H, W] for 2D ops and
Tensor[N, C, H, W, Depth] for 3D ops.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from tensor_core.tensor import Tensor, record_op
from utils.errors import DataError, DimensionError, PreconditionError
from utils.validators import PaddingMode, PoolMode, ShapeValidator

IGNORE_LABEL = 255


def as_tensor(value, dtype=None) -> Tensor:
    """Wrap scalars and arrays; pass tensors through"""
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=dtype or np.float64))


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back to the operand shape"""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# Elementwise and structural ops
# ---------------------------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.data + b.data)
    record_op([out], [a, b], lambda g: (_unbroadcast(g[0], a.shape), _unbroadcast(g[0], b.shape)), "add")
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.data - b.data)
    record_op([out], [a, b], lambda g: (_unbroadcast(g[0], a.shape), -_unbroadcast(g[0], b.shape)), "sub")
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.data * b.data)

    def backward(g):
        return (
            _unbroadcast(g[0] * b.data, a.shape),
            _unbroadcast(g[0] * a.data, b.shape),
        )

    record_op([out], [a, b], backward, "mul")
    return out


def scale(a: Tensor, factor: float) -> Tensor:
    out = Tensor(a.data * factor)
    record_op([out], [a], lambda g: (g[0] * factor,), "scale")
    return out


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    out = Tensor(a.data.reshape(tuple(shape)))
    record_op([out], [a], lambda g: (g[0].reshape(a.shape),), "reshape")
    return out


def transpose(a: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    out = Tensor(a.data.transpose(axes))
    record_op([out], [a], lambda g: (g[0].transpose(inverse),), "transpose")
    return out


def concat(tensors: Sequence[Tensor], axis: int = 1) -> Tensor:
    """Concatenate along an axis (channels by default)"""
    sizes = [t.shape[axis] for t in tensors]
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis))

    def backward(g):
        bounds = np.cumsum(sizes)[:-1]
        return tuple(np.split(g[0], bounds, axis=axis))

    record_op([out], list(tensors), backward, "concat")
    return out


def channel_slice(x: Tensor, start: int, stop: int) -> Tensor:
    """Channels start..stop-1 of Tensor[N,C,...]"""
    out = Tensor(x.data[:, start:stop])

    def backward(g):
        full = np.zeros_like(x.data)
        full[:, start:stop] = g[0]
        return (full,)

    record_op([out], [x], backward, "channel_slice")
    return out


def sum_all(a: Tensor) -> Tensor:
    out = Tensor(np.array(a.data.sum(), dtype=a.dtype))
    record_op([out], [a], lambda g: (np.broadcast_to(g[0], a.shape).copy(),), "sum")
    return out


def square_sum(a: Tensor) -> Tensor:
    """Sum of squares, the L2 penalty kernel"""
    out = Tensor(np.array(np.sum(a.data * a.data), dtype=a.dtype))
    record_op([out], [a], lambda g: (2.0 * g[0] * a.data,), "square_sum")
    return out


# ---------------------------------------------------------------------------
# Activations
# ---------------------------------------------------------------------------

def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    out = Tensor(np.where(mask, x.data, 0.0).astype(x.dtype))
    record_op([out], [x], lambda g: (g[0] * mask,), "relu")
    return out


def _sigmoid(values: np.ndarray) -> np.ndarray:
    # Split by sign so exp never overflows
    out = np.empty_like(values)
    positive = values >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-values[positive]))
    exp_neg = np.exp(values[~positive])
    out[~positive] = exp_neg / (1.0 + exp_neg)
    return out


def sigmoid(x: Tensor) -> Tensor:
    s = _sigmoid(x.data)
    out = Tensor(s)
    record_op([out], [x], lambda g: (g[0] * s * (1.0 - s),), "sigmoid")
    return out


def _log_softmax(values: np.ndarray, axis: int) -> np.ndarray:
    shifted = values - values.max(axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


def softmax(x: Tensor, axis: int = 1) -> Tensor:
    """Softmax over the class axis with max subtraction"""
    p = np.exp(_log_softmax(x.data, axis))

    def backward(g):
        inner = (g[0] * p).sum(axis=axis, keepdims=True)
        return (p * (g[0] - inner),)

    out = Tensor(p)
    record_op([out], [x], backward, "softmax")
    return out


def cross_entropy(logits: Tensor, labels: np.ndarray, ignore_label: int = IGNORE_LABEL) -> Tensor:
    """Mean pixel cross entropy of Tensor[N,C,...] logits against integer labels"""
    labels = np.asarray(labels)
    num_classes = logits.shape[1]
    expected = (logits.shape[0],) + logits.shape[2:]
    if labels.shape != expected:
        raise DimensionError("labels", expected, labels.shape, "cross_entropy")
    mask = labels != ignore_label
    scored = labels[mask]
    if scored.size and (scored.min() < 0 or scored.max() >= num_classes):
        raise DataError(f"label out of range [0, {num_classes}) in cross_entropy")

    safe = np.where(mask, labels, 0).astype(np.int64)
    log_p = _log_softmax(logits.data, axis=1)
    picked = np.take_along_axis(log_p, np.expand_dims(safe, 1), axis=1)[:, 0]
    count = int(mask.sum())
    loss_value = -(picked * mask).sum() / count if count else 0.0
    out = Tensor(np.array(loss_value, dtype=logits.dtype))

    def backward(g):
        if count == 0:
            return (np.zeros_like(logits.data),)
        grad = np.exp(log_p)
        onehot = np.zeros_like(grad)
        np.put_along_axis(onehot, np.expand_dims(safe, 1), 1.0, axis=1)
        grad = (grad - onehot) * np.expand_dims(mask, 1) / count
        return (grad * g[0],)

    record_op([out], [logits], backward, "cross_entropy")
    return out


# ---------------------------------------------------------------------------
# Convolution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvSpec:
    """Shape contract of a convolution"""

    in_channels: int
    out_channels: int
    kernel: Tuple[int, ...]
    stride: Tuple[int, ...] = ()
    padding: PaddingMode = PaddingMode.SAME
    groups: int = 1

    def __post_init__(self):
        if not self.stride:
            object.__setattr__(self, "stride", (1,) * len(self.kernel))
        if len(self.stride) != len(self.kernel):
            raise DimensionError("stride", len(self.kernel), len(self.stride), "ConvSpec")
        if self.in_channels % self.groups or self.out_channels % self.groups:
            raise PreconditionError(
                f"ConvSpec: channels {self.in_channels}->{self.out_channels} not divisible by groups {self.groups}"
            )
        if self.padding is PaddingMode.SAME and any(k % 2 == 0 for k in self.kernel):
            raise PreconditionError(f"ConvSpec: 'same' padding needs odd kernel extents, got {self.kernel}")

    @property
    def weight_shape(self) -> Tuple[int, ...]:
        return (self.out_channels, self.in_channels // self.groups) + tuple(self.kernel)

    @property
    def fan_in(self) -> int:
        return (self.in_channels // self.groups) * int(np.prod(self.kernel))

    def pads(self) -> Tuple[int, ...]:
        if self.padding is PaddingMode.SAME:
            return tuple(k // 2 for k in self.kernel)
        return (0,) * len(self.kernel)

    def output_spatial(self, spatial: Sequence[int]) -> Tuple[int, ...]:
        return tuple(
            (size + 2 * pad - k) // s + 1
            for size, pad, k, s in zip(spatial, self.pads(), self.kernel, self.stride)
        )

    def validate(self, x: Tensor, w: Tensor, b: Optional[Tensor], context: str) -> None:
        nd = len(self.kernel)
        ShapeValidator.require_ndim(x.shape, nd + 2, context)
        ShapeValidator.require_channels(x.shape[1], self.in_channels, context)
        if tuple(w.shape) != self.weight_shape:
            axis = next(
                (name for name, a, e in zip(["out_channels", "in_channels"] + [f"kernel{i}" for i in range(nd)],
                                            w.shape, self.weight_shape) if a != e),
                "weight",
            )
            raise DimensionError(axis, self.weight_shape, tuple(w.shape), f"{context} weight")
        if b is not None and tuple(b.shape) != (self.out_channels,):
            raise DimensionError("bias", (self.out_channels,), tuple(b.shape), context)
        out_spatial = self.output_spatial(x.shape[2:])
        if any(extent < 1 for extent in out_spatial):
            raise DimensionError("spatial", "kernel within padded input", tuple(x.shape[2:]), context)


def _offset_slices(offset: Sequence[int], stride: Sequence[int], out_spatial: Sequence[int]) -> Tuple[slice, ...]:
    return (slice(None), slice(None)) + tuple(
        slice(o, o + s * (n - 1) + 1, s) for o, s, n in zip(offset, stride, out_spatial)
    )


def _conv_nd(x: Tensor, spec: ConvSpec, w: Tensor, b: Optional[Tensor], context: str) -> Tensor:
    spec.validate(x, w, b, context)
    n, c = x.shape[:2]
    g = spec.groups
    cg = c // g
    og = spec.out_channels // g
    out_spatial = spec.output_spatial(x.shape[2:])
    pads = spec.pads()
    xp = np.pad(x.data, [(0, 0), (0, 0)] + [(p, p) for p in pads]) if any(pads) else x.data
    wr = w.data.reshape((g, og, cg) + tuple(spec.kernel))

    out = np.zeros((n, g, og) + out_spatial, dtype=x.dtype)
    for offset in np.ndindex(*spec.kernel):
        patch = xp[_offset_slices(offset, spec.stride, out_spatial)].reshape((n, g, cg) + out_spatial)
        out += np.einsum("ngc...,goc->ngo...", patch, wr[(Ellipsis,) + offset])
    out = out.reshape((n, spec.out_channels) + out_spatial)
    if b is not None:
        out += b.data.reshape((1, -1) + (1,) * len(out_spatial))
    result = Tensor(out)

    def backward(grads):
        gy = grads[0].reshape((n, g, og) + out_spatial)
        gxp = np.zeros_like(xp)
        gw = np.zeros_like(wr)
        for offset in np.ndindex(*spec.kernel):
            window = _offset_slices(offset, spec.stride, out_spatial)
            patch = xp[window].reshape((n, g, cg) + out_spatial)
            gw[(Ellipsis,) + offset] = np.einsum("ngo...,ngc...->goc", gy, patch)
            gxp[window] += np.einsum("ngo...,goc->ngc...", gy, wr[(Ellipsis,) + offset]).reshape(
                (n, c) + out_spatial
            )
        if any(pads):
            gxp = gxp[(slice(None), slice(None)) + tuple(slice(p, p + s) for p, s in zip(pads, x.shape[2:]))]
        gb = grads[0].sum(axis=(0,) + tuple(range(2, 2 + len(out_spatial)))) if b is not None else None
        return (gxp, gw.reshape(w.shape), gb)

    inputs = [x, w] + ([b] if b is not None else [])
    record_op([result], inputs, backward, context)
    return result


def _batched(x: Tensor, batched_ndim: int, fn) -> Tensor:
    """Run fn on x, adding and removing a batch axis for unbatched input"""
    if x.ndim == batched_ndim - 1:
        out = fn(reshape(x, (1,) + x.shape))
        return reshape(out, out.shape[1:])
    return fn(x)


def conv2d(x: Tensor, spec: ConvSpec, w: Tensor, b: Optional[Tensor] = None) -> Tensor:
    """2D cross-correlation of Tensor[N,C_in,H,W] (or Tensor[C_in,H,W])"""
    if len(spec.kernel) != 2:
        raise DimensionError("kernel", 2, len(spec.kernel), "conv2d")
    return _batched(x, 4, lambda t: _conv_nd(t, spec, w, b, "conv2d"))


def conv3d(x: Tensor, spec: ConvSpec, w: Tensor, b: Optional[Tensor] = None) -> Tensor:
    """3D cross-correlation over H, W, Depth of Tensor[N,C_in,H,W,Depth]"""
    if len(spec.kernel) != 3:
        raise DimensionError("kernel", 3, len(spec.kernel), "conv3d")
    return _batched(x, 5, lambda t: _conv_nd(t, spec, w, b, "conv3d"))


def conv_transpose2d(x: Tensor, w: Tensor, b: Optional[Tensor] = None) -> Tensor:
    """Transposed convolution with a 2x2 kernel and stride 2 (exact x2 upsampling)

    w has shape (C_in, C_out, 2, 2).
    """
    ShapeValidator.require_ndim(x.shape, 4, "conv_transpose2d")
    if w.ndim != 4 or w.shape[2:] != (2, 2):
        raise DimensionError("kernel", (2, 2), tuple(w.shape[2:]), "conv_transpose2d")
    ShapeValidator.require_channels(x.shape[1], w.shape[0], "conv_transpose2d")
    n, _, h, wd = x.shape
    c_out = w.shape[1]
    y = np.einsum("nchw,coij->nohiwj", x.data, w.data).reshape(n, c_out, 2 * h, 2 * wd)
    if b is not None:
        y = y + b.data.reshape(1, -1, 1, 1)
    out = Tensor(y)

    def backward(grads):
        gy = grads[0].reshape(n, c_out, h, 2, wd, 2)
        gx = np.einsum("nohiwj,coij->nchw", gy, w.data)
        gw = np.einsum("nchw,nohiwj->coij", x.data, gy)
        gb = grads[0].sum(axis=(0, 2, 3)) if b is not None else None
        return (gx, gw, gb)

    record_op([out], [x, w] + ([b] if b is not None else []), backward, "conv_transpose2d")
    return out


def linear(x: Tensor, w: Tensor, b: Optional[Tensor] = None) -> Tensor:
    """Dense layer on Tensor[N, C_in] with w of shape (C_out, C_in)"""
    ShapeValidator.require_channels(x.shape[-1], w.shape[1], "linear")
    y = x.data @ w.data.T
    if b is not None:
        y = y + b.data
    out = Tensor(y)

    def backward(grads):
        gy = grads[0]
        gb = gy.sum(axis=0) if b is not None else None
        return (gy @ w.data, gy.T @ x.data, gb)

    record_op([out], [x, w] + ([b] if b is not None else []), backward, "linear")
    return out


def mlp2(x: Tensor, w1: Tensor, b1: Optional[Tensor], w2: Tensor, b2: Optional[Tensor]) -> Tensor:
    """Two-layer perceptron C -> C/r (ReLU) -> C"""
    return linear(relu(linear(x, w1, b1)), w2, b2)


def hidden_width(channels: int, reduction_ratio: int) -> int:
    """Hidden width of the reduction MLP, at least one unit"""
    return max(1, math.ceil(channels / reduction_ratio))


# ---------------------------------------------------------------------------
# Pooling
# ---------------------------------------------------------------------------

def _pool2d(x: Tensor, mode: PoolMode) -> Tensor:
    ShapeValidator.require_ndim(x.shape, 4, "pool2d")
    n, c, h, w = x.shape
    ShapeValidator.require_even(h, "H", "pool2d")
    ShapeValidator.require_even(w, "W", "pool2d")
    blocks = x.data.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h // 2, w // 2, 4)
    if mode is PoolMode.MAX:
        argmax = blocks.argmax(axis=-1)
        values = np.take_along_axis(blocks, argmax[..., None], axis=-1)[..., 0]
    else:
        argmax = None
        values = blocks.mean(axis=-1)
    out = Tensor(values)

    def backward(grads):
        gy = grads[0]
        if mode is PoolMode.MAX:
            gblocks = np.zeros_like(blocks)
            np.put_along_axis(gblocks, argmax[..., None], gy[..., None], axis=-1)
        else:
            gblocks = np.repeat(gy[..., None] / 4.0, 4, axis=-1)
        gx = gblocks.reshape(n, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h, w)
        return (gx,)

    record_op([out], [x], backward, f"pool2d_{mode.value}")
    return out


def pool2d(x: Tensor, mode: PoolMode = PoolMode.MAX) -> Tensor:
    """2x2 window, stride 2 pooling; max ties go to the first element"""
    return _batched(x, 4, lambda t: _pool2d(t, mode))


def reduce(x: Tensor, axes: Sequence[int], mode: PoolMode, keepdims: bool = False) -> Tensor:
    """Max or mean over several axes; max gradient flows to the first argmax"""
    axes = tuple(sorted(a % x.ndim for a in axes))
    kept = [a for a in range(x.ndim) if a not in axes]
    perm = kept + list(axes)
    kept_shape = tuple(x.shape[a] for a in kept)
    moved = x.data.transpose(perm).reshape(kept_shape + (-1,))
    if mode is PoolMode.MAX:
        argmax = moved.argmax(axis=-1)
        values = np.take_along_axis(moved, argmax[..., None], axis=-1)[..., 0]
    else:
        argmax = None
        values = moved.mean(axis=-1)
    out_shape = tuple(1 if a in axes else x.shape[a] for a in range(x.ndim)) if keepdims else kept_shape
    out = Tensor(values.reshape(out_shape))
    inverse = tuple(np.argsort(perm))
    permuted_shape = tuple(x.shape[a] for a in perm)

    def backward(grads):
        gy = grads[0].reshape(kept_shape)
        if mode is PoolMode.MAX:
            gmoved = np.zeros_like(moved)
            np.put_along_axis(gmoved, argmax[..., None], gy[..., None], axis=-1)
        else:
            gmoved = np.broadcast_to(gy[..., None] / moved.shape[-1], moved.shape)
        return (np.ascontiguousarray(gmoved).reshape(permuted_shape).transpose(inverse),)

    record_op([out], [x], backward, f"reduce_{mode.value}")
    return out


def global_pool(x: Tensor, mode: PoolMode = PoolMode.AVG) -> Tensor:
    """One scalar per channel: Tensor[N,C,...] -> Tensor[N,C] (or Tensor[C,...] -> Tensor[C])"""
    if x.ndim == 3:
        return reduce(x, (1, 2), mode)
    return reduce(x, tuple(range(2, x.ndim)), mode)


def channel_pool(x: Tensor, mode: PoolMode = PoolMode.AVG) -> Tensor:
    """Per-position cross-channel reduction: Tensor[N,C,H,W] -> Tensor[N,1,H,W]"""
    return reduce(x, (1,), mode, keepdims=True)


# ---------------------------------------------------------------------------
# Batch normalisation
# ---------------------------------------------------------------------------

@dataclass
class RunningStats:
    """Per-channel running mean and variance"""

    mean: np.ndarray
    var: np.ndarray

    @classmethod
    def identity(cls, channels: int, dtype=np.float64) -> "RunningStats":
        return cls(np.zeros(channels, dtype=dtype), np.ones(channels, dtype=dtype))


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_stats: RunningStats,
    training: bool,
    momentum: float = 0.9,
    eps: float = 1e-5,
) -> Tensor:
    """Per-channel normalisation over batch and spatial axes"""
    c = x.shape[1]
    ShapeValidator.require_channels(gamma.shape[0], c, "batch_norm gamma")
    axes = (0,) + tuple(range(2, x.ndim))
    bshape = (1, c) + (1,) * (x.ndim - 2)
    count = x.size // c

    if training:
        if count < 2:
            raise PreconditionError("batch_norm: training mode needs at least 2 elements per channel")
        mean = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        running_stats.mean[:] = momentum * running_stats.mean + (1.0 - momentum) * mean
        running_stats.var[:] = momentum * running_stats.var + (1.0 - momentum) * var * count / (count - 1)
    else:
        mean = running_stats.mean.copy()
        var = running_stats.var.copy()

    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mean.reshape(bshape)) * inv_std.reshape(bshape)
    out = Tensor(gamma.data.reshape(bshape) * xhat + beta.data.reshape(bshape))

    def backward(grads):
        gy = grads[0]
        ggamma = (gy * xhat).sum(axis=axes)
        gbeta = gy.sum(axis=axes)
        gxhat = gy * gamma.data.reshape(bshape)
        if training:
            gx = (inv_std.reshape(bshape) / count) * (
                count * gxhat
                - gxhat.sum(axis=axes).reshape(bshape)
                - xhat * (gxhat * xhat).sum(axis=axes).reshape(bshape)
            )
        else:
            gx = gxhat * inv_std.reshape(bshape)
        return (gx, ggamma, gbeta)

    record_op([out], [x, gamma, beta], backward, "batch_norm")
    return out


__all__: List[str] = [
    "ConvSpec", "RunningStats", "IGNORE_LABEL", "as_tensor", "add", "sub", "mul", "scale", "reshape",
    "transpose", "concat", "channel_slice", "sum_all", "square_sum", "relu", "sigmoid", "softmax", "cross_entropy",
    "conv2d", "conv3d", "conv_transpose2d", "linear", "mlp2", "hidden_width", "pool2d", "reduce",
    "global_pool", "channel_pool", "batch_norm",
]
