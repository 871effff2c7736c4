"""RGBA raster helpers.

A raster is a numpy uint8 array of shape (H, W, 4); masks are single-channel
uint8 arrays of shape (H, W) where nonzero means "inside". Every image that
crosses a module boundary in this package uses this representation.
"""

from __future__ import annotations

import hashlib
import io

import numpy as np
from PIL import Image

Raster = np.ndarray
Mask = np.ndarray

# ITU-R BT.601 luma weights
_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)


class RasterError(ValueError):
    pass


def ensure_rgba(arr: np.ndarray) -> Raster:
    """Validate/convert an array to (H, W, 4) uint8."""
    a = np.asarray(arr)
    if a.ndim == 2:
        a = np.stack([a, a, a, np.full_like(a, 255)], axis=-1)
    if a.ndim != 3 or a.shape[2] not in (3, 4):
        raise RasterError(f"expected (H, W, 3|4) array, got shape {a.shape}")
    if a.shape[2] == 3:
        alpha = np.full(a.shape[:2] + (1,), 255, dtype=a.dtype)
        a = np.concatenate([a, alpha], axis=2)
    if a.dtype != np.uint8:
        a = np.clip(a, 0, 255).astype(np.uint8)
    return np.ascontiguousarray(a)


def new_canvas(width: int, height: int, fill: tuple[int, int, int] = (255, 255, 255)) -> Raster:
    if width <= 0 or height <= 0:
        raise RasterError("canvas dimensions must be positive")
    canvas = np.empty((height, width, 4), dtype=np.uint8)
    canvas[..., 0] = fill[0]
    canvas[..., 1] = fill[1]
    canvas[..., 2] = fill[2]
    canvas[..., 3] = 255
    return canvas


def luminance(raster: np.ndarray) -> np.ndarray:
    """BT.601 luma as float64 (H, W)."""
    a = np.asarray(raster)
    if a.ndim == 2:
        return a.astype(np.float64)
    return a[..., :3].astype(np.float64) @ _LUMA


def from_pil(img: Image.Image) -> Raster:
    return ensure_rgba(np.asarray(img.convert("RGBA")))


def to_pil(raster: Raster) -> Image.Image:
    return Image.fromarray(ensure_rgba(raster), mode="RGBA")


def load(path) -> Raster:
    with Image.open(path) as img:
        return from_pil(img)


def decode_png(data: bytes) -> Raster:
    with Image.open(io.BytesIO(data)) as img:
        return from_pil(img)


def encode_png(raster: Raster) -> bytes:
    buf = io.BytesIO()
    to_pil(raster).save(buf, format="PNG")
    return buf.getvalue()


def save(raster: Raster, path) -> None:
    to_pil(raster).save(path, format="PNG")


def content_hash(raster: Raster) -> str:
    a = ensure_rgba(raster)
    h = hashlib.sha256()
    h.update(np.asarray(a.shape, dtype=np.int64).tobytes())
    h.update(a.tobytes())
    return h.hexdigest()


def resize_bilinear(raster: Raster, width: int, height: int) -> Raster:
    """Bilinear resize of an RGBA raster (Pillow resampling)."""
    if width <= 0 or height <= 0:
        raise RasterError("target dimensions must be positive")
    img = to_pil(raster).resize((width, height), Image.BILINEAR)
    return from_pil(img)


def resize_mask(mask: Mask, width: int, height: int) -> Mask:
    # masks keep hard edges: nearest-neighbour only
    img = Image.fromarray(np.asarray(mask, dtype=np.uint8), mode="L")
    return np.asarray(img.resize((width, height), Image.NEAREST), dtype=np.uint8)
