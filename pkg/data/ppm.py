"""Binary PPM (P6) label-map images and colour palettes"""

import json
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np

from data.hsi_cube import IGNORE_LABEL
from utils.errors import DataError

PathLike = Union[str, Path]
Palette = Dict[int, Tuple[int, int, int]]

DEFAULT_PALETTE: Palette = {
    0: (255, 0, 0),      # Built-up Area
    1: (0, 0, 255),      # Water
    2: (0, 160, 0),      # Vegetation
    3: (200, 170, 110),  # Bare Land
    4: (128, 128, 128),  # Road
    5: (255, 255, 0),    # Other
}


def load_palette(path: Optional[PathLike]) -> Palette:
    """Palette JSON {class_id: [r, g, b]}; the default palette when path is None"""
    if path is None:
        return dict(DEFAULT_PALETTE)
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"Cannot read palette {path}: {e}") from e
    palette: Palette = {}
    try:
        for key, rgb in raw.items():
            values = tuple(int(v) for v in rgb)
            if len(values) != 3 or any(v < 0 or v > 255 for v in values):
                raise ValueError(f"entry {key} is not an RGB triple in 0..255")
            palette[int(key)] = values
    except (AttributeError, TypeError, ValueError) as e:
        raise DataError(f"Malformed palette {path}: {e}") from e
    return palette


def encode_label_map(labels: np.ndarray, palette: Palette) -> bytes:
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise DataError(f"label map must be 2-D, got shape {labels.shape}")
    present = [int(v) for v in np.unique(labels) if int(v) != IGNORE_LABEL]
    missing = [v for v in present if v not in palette]
    if missing:
        raise DataError(f"palette has no colour for class ids {missing}")
    lut = np.zeros((256, 3), dtype=np.uint8)
    for class_id, rgb in palette.items():
        if 0 <= class_id < 256 and class_id != IGNORE_LABEL:
            lut[class_id] = rgb
    rgb = lut[labels.astype(np.int64)]
    height, width = labels.shape
    return f"P6\n{width} {height}\n255\n".encode("ascii") + rgb.tobytes()


def write_label_map_ppm(
    path: PathLike, labels: np.ndarray, palette: Optional[Palette] = None, config_echo: Optional[str] = None
) -> None:
    """Render a label raster; ignore-label pixels are black

    With ``config_echo`` a ``<path>.json`` sidecar records the run configuration.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_label_map(labels, palette if palette is not None else DEFAULT_PALETTE))
    if config_echo:
        path.with_name(path.name + ".json").write_text(config_echo, encoding="utf-8")


def read_ppm(path: PathLike) -> np.ndarray:
    """Parse a binary P6 file into an H x W x 3 uint8 array"""
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise DataError(f"Cannot read {path}: {e}") from e
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DataError(f"{path}: truncated PPM header")
        tokens.append(raw[start:pos])
    pos += 1
    if tokens[0] != b"P6":
        raise DataError(f"{path}: not a binary PPM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as e:
        raise DataError(f"{path}: malformed PPM header") from e
    if maxval != 255:
        raise DataError(f"{path}: only 8-bit PPM is supported")
    pixels = raw[pos:]
    if len(pixels) != width * height * 3:
        raise DataError(f"{path}: expected {width * height * 3} pixel bytes, found {len(pixels)}")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(height, width, 3).copy()
