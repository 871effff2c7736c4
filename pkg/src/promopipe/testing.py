"""Synthetic asset factories for tests, demos, and mock-backed runs.

Mock embeddings bridge text and image space through label stamps (see
backends.mock.stamp_label): a product generated here retrieves under the
exact query of its label. Real deployments ingest real photography and use
a real embedding backend instead.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .backends.mock import stamp_label
from .raster import Raster, save


def make_product_raster(label: str, width: int = 200, height: int = 200,
                        seed: int = 0) -> Raster:
    """An opaque elliptical product with seeded speckle on a transparent
    background, label-stamped for mock retrieval."""
    rng = np.random.default_rng(seed)
    out = np.zeros((height, width, 4), dtype=np.uint8)
    yy, xx = np.mgrid[0:height, 0:width]
    cy, cx = (height - 1) / 2.0, (width - 1) / 2.0
    ry, rx = height * 0.45, width * 0.45
    inside = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0
    base = rng.integers(60, 200, size=3)
    speckle = rng.integers(-40, 40, size=(height, width, 3))
    rgb = np.clip(base[None, None, :] + speckle, 0, 255).astype(np.uint8)
    out[..., :3][inside] = rgb[inside]
    out[..., 3][inside] = 255
    return stamp_label(out, label)


def make_background_raster(label: str, width: int = 512, height: int = 512,
                           seed: int = 0) -> Raster:
    """A soft gradient scene with a few blobs, label-stamped."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    top = rng.integers(40, 220, size=3).astype(np.float64)
    bottom = rng.integers(40, 220, size=3).astype(np.float64)
    t = (yy / max(height - 1, 1))[..., None]
    rgb = top[None, None, :] * (1 - t) + bottom[None, None, :] * t
    for _ in range(4):
        by, bx = rng.uniform(0, height), rng.uniform(0, width)
        radius = rng.uniform(0.1, 0.3) * min(width, height)
        blob = np.exp(-(((yy - by) ** 2 + (xx - bx) ** 2) / (2 * radius ** 2)))
        tint = rng.integers(-60, 60, size=3).astype(np.float64)
        rgb += blob[..., None] * tint[None, None, :]
    out = np.empty((height, width, 4), dtype=np.uint8)
    out[..., :3] = np.clip(np.rint(rgb), 0, 255).astype(np.uint8)
    out[..., 3] = 255
    return stamp_label(out, label)


def write_asset(directory, stem: str, raster: Raster, label: str,
                category: str = "") -> Path:
    """Write a PNG plus its {label, category} sidecar; returns the PNG path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    png_path = directory / f"{stem}.png"
    save(raster, png_path)
    sidecar = {"label": label, "category": category}
    (directory / f"{stem}.json").write_text(
        json.dumps(sidecar, indent=2) + "\n", encoding="utf-8")
    return png_path
