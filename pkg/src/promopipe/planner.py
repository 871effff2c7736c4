"""Composition planning: product scale advice, placement/rotation variants.

Geometry conventions (documented because tests check them exactly):
  - target product size = floor(scale * canvas dimension), per axis
  - rotation is visually counterclockwise, pivot at product center; the
    rotated frame is ceil(w|cos| + h|sin|) x ceil(w|sin| + h|cos|), the
    tight bound obtained by transforming the four corners
  - RGBA resampling is bilinear, mask resampling nearest
  - slot centers sit at 1/6, 1/2, 5/6 of canvas width; the product's bottom
    edge is anchored at `vertical_anchor` (default 0.85) of canvas height
  - if any variant overflows the canvas, both scale factors are multiplied
    by 0.95 until every variant fits (at most 20 times)
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .backends.base import BackendError, LLMBackend, TextCompletionRequest
from .caption import SceneCaption
from .raster import Raster, ensure_rgba, new_canvas, resize_bilinear
from .store import Asset

logger = logging.getLogger(__name__)

DEFAULT_SLOTS = ("left", "center", "right")
DEFAULT_ROTATIONS = (0, 15, 345)
DEFAULT_SCALE_BOUNDS = (0.1, 0.8)
DEFAULT_VERTICAL_ANCHOR = 0.85
FALLBACK_SCALE = 0.33
_SLOT_CENTERS = {"left": 1.0 / 6.0, "center": 0.5, "right": 5.0 / 6.0}
_MAX_REDUCTIONS = 20


class PlanError(Exception):
    pass


@dataclass(frozen=True)
class ScaleFactors:
    s_w: float
    s_h: float

    def __post_init__(self):
        if not (0.0 < self.s_w <= 1.0 and 0.0 < self.s_h <= 1.0):
            raise ValueError(f"scale factors must lie in (0, 1], got {self.s_w}, {self.s_h}")


@dataclass
class Canvas:
    raster: Raster
    width_px: int
    height_px: int
    background_source: str  # "empty" or "asset:<asset_id>"

    def __post_init__(self):
        h, w = self.raster.shape[:2]
        if (w, h) != (self.width_px, self.height_px):
            raise ValueError("canvas raster does not match declared dimensions")


@dataclass
class CompositionVariant:
    variant_id: str
    position_slot: str
    rotation_deg: int
    scale: ScaleFactors
    placed_bbox: tuple  # (x0, y0, x1, y1), exclusive right/bottom
    composed: Raster
    mask: Raster


def build_canvas(size: tuple, background: Optional[Asset] = None) -> Canvas:
    """A background asset resized to canvas dimensions, or a white canvas."""
    width, height = size
    if background is None:
        return Canvas(new_canvas(width, height), width, height, "empty")
    raster = resize_bilinear(ensure_rgba(background.raster), width, height)
    return Canvas(raster, width, height, f"asset:{background.asset_id}")


# ----------------------------------------------------------------- advisor

def advise_scale(canvas: Canvas, product: Asset, caption: SceneCaption,
                 llm: LLMBackend, bounds: tuple = DEFAULT_SCALE_BOUNDS,
                 record: Optional[dict] = None) -> ScaleFactors:
    """Ask the advisor for width/height scale factors, clamped into bounds.

    On backend failure the documented default (0.33, 0.33) is returned and
    flagged in `record` when provided.
    """
    lo, hi = bounds
    if not (0.0 < lo <= hi <= 1.0):
        raise ValueError(f"invalid scale bounds {bounds}")
    ph, pw = ensure_rgba(product.raster).shape[:2]
    request = TextCompletionRequest(
        system_instructions=(
            "Recommend width and height scale factors (fractions of the "
            "canvas) for placing the product into the scene. Reply with "
            "JSON {\"s_w\": ..., \"s_h\": ...}."
        ),
        user_content=(
            f"CATEGORY: {product.category or 'default'}\n"
            f"PRODUCT_WIDTH: {pw}\n"
            f"PRODUCT_HEIGHT: {ph}\n"
            f"CAPTION: {caption.text}"
        ),
        expected_schema_id="scale_advice",
        attached_images=[canvas.raster, product.raster],
    )
    fallback = False
    try:
        value = llm.complete(request)
        raw_w, raw_h = float(value["s_w"]), float(value["s_h"])
    except BackendError as exc:
        logger.warning("scale advisor failed (%s); using default %.2f", exc, FALLBACK_SCALE)
        raw_w = raw_h = FALLBACK_SCALE
        fallback = True
    s_w = min(max(raw_w, lo), hi)
    s_h = min(max(raw_h, lo), hi)
    if (s_w, s_h) != (raw_w, raw_h):
        logger.warning("advisor scale (%.3f, %.3f) clamped to (%.3f, %.3f)",
                       raw_w, raw_h, s_w, s_h)
    if record is not None:
        record.update({
            "raw": {"s_w": raw_w, "s_h": raw_h},
            "clamped": (s_w, s_h) != (raw_w, raw_h),
            "fallback_used": fallback,
        })
    return ScaleFactors(s_w, s_h)


# ---------------------------------------------------------------- geometry

def rotated_frame_size(width: int, height: int, angle_deg: float) -> tuple:
    """Tight output frame for a rotation: transform corners, ceil the extent."""
    theta = math.radians(angle_deg)
    c, s = abs(math.cos(theta)), abs(math.sin(theta))
    out_w = int(math.ceil(width * c + height * s))
    out_h = int(math.ceil(width * s + height * c))
    return out_w, out_h


def _inverse_coords(w: int, h: int, out_w: int, out_h: int,
                    angle_deg: float) -> tuple:
    """Map every output pixel center back into input coordinates for a
    visually-counterclockwise rotation (y-down image space), pivoting on
    the image centers."""
    theta = math.radians(angle_deg)
    c, s = math.cos(theta), math.sin(theta)
    cy_in, cx_in = (h - 1) / 2.0, (w - 1) / 2.0
    cy_out, cx_out = (out_h - 1) / 2.0, (out_w - 1) / 2.0
    yy, xx = np.mgrid[0:out_h, 0:out_w].astype(np.float64)
    dy, dx = yy - cy_out, xx - cx_out
    iy = c * dy + s * dx + cy_in
    ix = -s * dy + c * dx + cx_in
    return iy, ix


def _sample_nearest(img: np.ndarray, iy: np.ndarray, ix: np.ndarray) -> np.ndarray:
    """Nearest-neighbour gather; points outside the image read as zero."""
    ry = np.rint(iy).astype(np.int64)
    rx = np.rint(ix).astype(np.int64)
    h, w = img.shape[:2]
    valid = (ry >= 0) & (ry < h) & (rx >= 0) & (rx < w)
    out = np.zeros(iy.shape + img.shape[2:], dtype=img.dtype)
    out[valid] = img[ry[valid], rx[valid]]
    return out


def _sample_bilinear(img: np.ndarray, iy: np.ndarray, ix: np.ndarray) -> np.ndarray:
    """Bilinear gather with zero (transparent) padding beyond the edges."""
    h, w = img.shape[:2]
    y0 = np.floor(iy).astype(np.int64)
    x0 = np.floor(ix).astype(np.int64)
    fy = iy - y0
    fx = ix - x0
    acc = np.zeros(iy.shape + img.shape[2:], dtype=np.float64)
    values = img.astype(np.float64)
    for dy in (0, 1):
        wy = fy if dy else 1.0 - fy
        yy = y0 + dy
        for dx in (0, 1):
            wx = fx if dx else 1.0 - fx
            xx = x0 + dx
            valid = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
            weight = wy * wx * valid
            gathered = np.zeros_like(acc)
            gathered[valid] = values[yy[valid], xx[valid]]
            acc += weight[..., None] * gathered if img.ndim == 3 else weight * gathered
    return acc


def rotate_product(raster: Raster, angle_deg: float) -> tuple:
    """Rotate an RGBA product about its center.

    Returns (rotated RGBA, footprint mask). RGBA channels are resampled
    bilinearly; the footprint (alpha > 0) is resampled nearest — an output
    pixel belongs to the mask iff its inverse-rotated center rounds to an
    in-bounds input pixel with nonzero alpha — so the mask stays a crisp
    binary region whose area matches the input footprint.
    """
    rgba = ensure_rgba(raster)
    h, w = rgba.shape[:2]
    footprint = ((rgba[..., 3] > 0) * np.uint8(255))
    if angle_deg % 360 == 0:
        return rgba.copy(), footprint
    out_w, out_h = rotated_frame_size(w, h, angle_deg)
    iy, ix = _inverse_coords(w, h, out_w, out_h, angle_deg)
    rotated = np.clip(np.rint(_sample_bilinear(rgba, iy, ix)), 0, 255).astype(np.uint8)
    mask = _sample_nearest(footprint, iy, ix)
    rotated[..., 3][mask == 0] = 0
    return rotated, mask


def _scaled_product(product: Asset, canvas: Canvas, scale: ScaleFactors) -> Raster:
    tw = int(math.floor(scale.s_w * canvas.width_px))
    th = int(math.floor(scale.s_h * canvas.height_px))
    if tw < 1 or th < 1:
        raise PlanError(f"scale {scale} collapses product below one pixel")
    return resize_bilinear(ensure_rgba(product.raster), tw, th)


def _placement(canvas: Canvas, slot: str, rot_w: int, rot_h: int,
               vertical_anchor: float) -> tuple:
    cx = _SLOT_CENTERS[slot] * canvas.width_px
    x0 = int(math.floor(cx - rot_w / 2.0))
    y1 = int(math.floor(vertical_anchor * canvas.height_px))
    y0 = y1 - rot_h
    return x0, y0, x0 + rot_w, y1


def composite(canvas: Canvas, product: Asset, slot: str, rotation_deg: int,
              scale: ScaleFactors,
              vertical_anchor: float = DEFAULT_VERTICAL_ANCHOR) -> tuple:
    """Alpha-composite the scaled, rotated product into one slot.

    Returns (composed raster, full-canvas footprint mask, bbox). Raises
    PlanError if the placement leaves the canvas.
    """
    if slot not in _SLOT_CENTERS:
        raise ValueError(f"unknown slot {slot!r}")
    scaled = _scaled_product(product, canvas, scale)
    rotated, footprint = rotate_product(scaled, rotation_deg)
    rot_h, rot_w = rotated.shape[:2]
    x0, y0, x1, y1 = _placement(canvas, slot, rot_w, rot_h, vertical_anchor)
    if x0 < 0 or y0 < 0 or x1 > canvas.width_px or y1 > canvas.height_px:
        raise PlanError(
            f"slot {slot} rotation {rotation_deg} bbox ({x0},{y0},{x1},{y1}) "
            f"leaves the {canvas.width_px}x{canvas.height_px} canvas"
        )
    composed = canvas.raster.copy()
    region = composed[y0:y1, x0:x1].astype(np.float64)
    alpha = rotated[..., 3:4].astype(np.float64) / 255.0
    region[..., :3] = rotated[..., :3] * alpha + region[..., :3] * (1.0 - alpha)
    composed[y0:y1, x0:x1] = np.clip(np.rint(region), 0, 255).astype(np.uint8)
    mask = np.zeros((canvas.height_px, canvas.width_px), dtype=np.uint8)
    mask[y0:y1, x0:x1] = footprint
    return composed, mask, (x0, y0, x1, y1)


def enumerate_variants(canvas: Canvas, product: Asset, scale: ScaleFactors,
                       slots: Sequence[str] = DEFAULT_SLOTS,
                       rotations: Sequence[int] = DEFAULT_ROTATIONS,
                       vertical_anchor: float = DEFAULT_VERTICAL_ANCHOR,
                       record: Optional[dict] = None) -> list:
    """All slot x rotation variants at a common scale.

    If any variant would overflow, the scale is reduced globally (x0.95 per
    step, up to 20 steps) so every variant shares one product size; the
    applied reduction lands in `record`.
    """
    raw = np.asarray(product.raster)
    if raw.ndim != 3 or raw.shape[2] != 4:
        raise ValueError("product raster must carry an alpha channel")
    if not slots or not rotations:
        raise ValueError("slots and rotations must be non-empty")
    effective = scale
    reduction = 1.0
    for attempt in range(_MAX_REDUCTIONS + 1):
        try:
            variants = []
            for slot in slots:
                for rot in rotations:
                    composed, mask, bbox = composite(
                        canvas, product, slot, rot, effective, vertical_anchor)
                    variants.append(CompositionVariant(
                        variant_id=f"{slot}_rot{rot}",
                        position_slot=slot,
                        rotation_deg=rot,
                        scale=effective,
                        placed_bbox=bbox,
                        composed=composed,
                        mask=mask,
                    ))
            if record is not None:
                record["scale_reduction"] = reduction
                record["effective_scale"] = {"s_w": effective.s_w, "s_h": effective.s_h}
            return variants
        except PlanError:
            if attempt == _MAX_REDUCTIONS:
                raise
            reduction *= 0.95
            effective = ScaleFactors(scale.s_w * reduction, scale.s_h * reduction)
            logger.info("variant overflow; reducing scale to %.4f of advised", reduction)
    raise PlanError("unreachable")
