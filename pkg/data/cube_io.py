"""Cube container files

Header {M, N, D, C, dtype, byte_order, has_labels, class_names, config}
followed by float32 band-interleaved-by-pixel data and, when present, one
uint8 label plane.
"""

import json
from pathlib import Path
from typing import Optional, Union

import numpy as np

from data.hsi_cube import HsiCube
from tensor_core.serialization import array_to_bytes, decode_container, encode_container, save_tensor, load_array
from utils.errors import DataError

PathLike = Union[str, Path]


def encode_cube(cube: HsiCube, config_echo: Optional[str] = None) -> bytes:
    m, n, d = cube.data.shape
    header = {
        "M": m,
        "N": n,
        "D": d,
        "C": cube.num_classes,
        "dtype": "float32",
        "byte_order": "little",
        "has_labels": cube.labels is not None,
        "class_names": list(cube.class_names),
        "config": json.loads(config_echo) if config_echo else None,
    }
    payload = array_to_bytes(cube.data.astype(np.float32))
    if cube.labels is not None:
        payload += array_to_bytes(cube.labels.astype(np.uint8))
    return encode_container(header, payload)


def decode_cube(raw: bytes, source: str = "cube") -> HsiCube:
    header, payload = decode_container(raw, source)
    try:
        m, n, d, c = (int(header[key]) for key in ("M", "N", "D", "C"))
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"{source}: malformed cube header ({e})") from e
    if header.get("dtype") != "float32" or header.get("byte_order") != "little":
        raise DataError(f"{source}: expected little-endian float32 payload")
    if min(m, n, d) < 1:
        raise DataError(f"{source}: non-positive cube extents {m}x{n}x{d}")
    has_labels = bool(header.get("has_labels", False))
    data_bytes = m * n * d * 4
    expected = data_bytes + (m * n if has_labels else 0)
    if len(payload) != expected:
        raise DataError(f"{source}: payload has {len(payload)} bytes, header {m}x{n}x{d} implies {expected}")
    data = np.frombuffer(payload[:data_bytes], dtype="<f4").astype(np.float32).reshape(m, n, d)
    labels = None
    if has_labels:
        labels = np.frombuffer(payload[data_bytes:], dtype=np.uint8).reshape(m, n).copy()
    return HsiCube(data, labels, c, list(header.get("class_names") or []))


def write_cube(path: PathLike, cube: HsiCube, config_echo: Optional[str] = None) -> None:
    """Write a cube container"""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_bytes(encode_cube(cube, config_echo))


def read_cube(path: PathLike) -> HsiCube:
    """Read a cube container"""
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise DataError(f"Cannot read cube {path}: {e}") from e
    return decode_cube(raw, str(path))


def write_label_plane(path: PathLike, labels: np.ndarray, config_echo: Optional[str] = None) -> None:
    """Write a predicted label raster as a uint8 tensor container"""
    extra = {"config": json.loads(config_echo)} if config_echo else None
    save_tensor(np.asarray(labels, dtype=np.uint8), path, extra)


def read_label_plane(path: PathLike) -> np.ndarray:
    labels, _ = load_array(path)
    return labels
