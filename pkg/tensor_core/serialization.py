"""Tensor container files

Layout: magic ``CWSN``, uint32 little-endian header length, UTF-8 JSON header,
then raw row-major little-endian payload.
"""

import json
import struct
from pathlib import Path
from typing import Any, Dict, Tuple, Union

import numpy as np

from tensor_core.tensor import Tensor
from utils.errors import DataError

MAGIC = b"CWSN"
_SUPPORTED = {"float64", "float32", "uint8", "int64"}

PathLike = Union[str, Path]


def encode_container(header: Dict[str, Any], payload: bytes) -> bytes:
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    return MAGIC + struct.pack("<I", len(header_bytes)) + header_bytes + payload


def decode_container(raw: bytes, source: str = "container") -> Tuple[Dict[str, Any], bytes]:
    if len(raw) < 8 or raw[:4] != MAGIC:
        raise DataError(f"{source}: not a tensor container (bad magic)")
    (length,) = struct.unpack("<I", raw[4:8])
    if len(raw) < 8 + length:
        raise DataError(f"{source}: truncated header")
    try:
        header = json.loads(raw[8:8 + length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise DataError(f"{source}: malformed header: {e}") from e
    if not isinstance(header, dict):
        raise DataError(f"{source}: header is not a JSON object")
    return header, raw[8 + length:]


def array_to_bytes(array: np.ndarray) -> bytes:
    return np.ascontiguousarray(array).astype(array.dtype.newbyteorder("<"), copy=False).tobytes(order="C")


def bytes_to_array(payload: bytes, shape, dtype: str, source: str) -> np.ndarray:
    if dtype not in _SUPPORTED:
        raise DataError(f"{source}: unsupported dtype {dtype!r}")
    expected = int(np.prod(shape)) * np.dtype(dtype).itemsize
    if len(payload) != expected:
        raise DataError(f"{source}: payload has {len(payload)} bytes, header implies {expected}")
    return np.frombuffer(payload, dtype=np.dtype(dtype).newbyteorder("<")).astype(dtype).reshape(shape)


def save_tensor(tensor: Union[Tensor, np.ndarray], path: PathLike, extra: Dict[str, Any] = None) -> None:
    """Write one tensor to a container file"""
    array = tensor.data if isinstance(tensor, Tensor) else np.asarray(tensor)
    header = {"shape": list(array.shape), "dtype": str(array.dtype), "byte_order": "little"}
    if extra:
        header.update(extra)
    Path(path).write_bytes(encode_container(header, array_to_bytes(array)))


def load_array(path: PathLike) -> Tuple[np.ndarray, Dict[str, Any]]:
    """Read a container file into an array plus its header"""
    source = str(path)
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise DataError(f"Cannot read {source}: {e}") from e
    header, payload = decode_container(raw, source)
    try:
        shape = tuple(int(v) for v in header["shape"])
        dtype = str(header["dtype"])
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"{source}: header missing shape/dtype") from e
    if header.get("byte_order", "little") != "little":
        raise DataError(f"{source}: only little-endian payloads are supported")
    return bytes_to_array(payload, shape, dtype, source), header


def load_tensor(path: PathLike) -> Tensor:
    array, _ = load_array(path)
    return Tensor(array.copy())
