"""PNG helpers: float/bool image arrays <-> 8-bit PNG bytes and files."""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import GridError


def to_uint8(img: np.ndarray) -> np.ndarray:
    """[0,1] float -> uint8 with round-half-away behavior of np.rint."""
    return np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def color_png_bytes(img: np.ndarray) -> bytes:
    """Encode an (H, W, 3) float [0,1] or uint8 array as RGB PNG."""
    arr = img if img.dtype == np.uint8 else to_uint8(img)
    buf = io.BytesIO()
    Image.fromarray(arr, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def binary_png_bytes(mask: np.ndarray) -> bytes:
    """Encode an (H, W) bool array as 8-bit grayscale PNG with values {0, 255}."""
    if mask.dtype != bool:
        raise GridError("binary image must be a bool array")
    buf = io.BytesIO()
    Image.fromarray(mask.astype(np.uint8) * 255, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def load_png(path_or_bytes) -> np.ndarray:
    """Decode a PNG into a uint8 array ((H, W) grayscale or (H, W, 3) RGB)."""
    if isinstance(path_or_bytes, (bytes, bytearray)):
        src = io.BytesIO(path_or_bytes)
    else:
        src = str(path_or_bytes)
    with Image.open(src) as im:
        if im.mode == "L":
            return np.asarray(im)
        return np.asarray(im.convert("RGB"))


def load_binary_png(path_or_bytes) -> np.ndarray:
    """Decode a strictly binary mask PNG into a bool array; rejects gray pixels."""
    arr = load_png(path_or_bytes)
    if arr.ndim == 3:
        if not (arr[..., 0] == arr[..., 1]).all() or not (arr[..., 1] == arr[..., 2]).all():
            raise GridError("mask PNG has colored pixels")
        arr = arr[..., 0]
    bad = ~np.isin(arr, (0, 255))
    if bad.any():
        raise GridError(f"mask PNG is not binary ({int(bad.sum())} gray pixels)")
    return arr == 255


def save_bytes(path, data: bytes) -> None:
    Path(path).write_bytes(data)
