"""Product-fidelity measurement: did generation preserve the placed product?

The pipeline knows exactly where it put the product, so the object is
extracted by cropping the placement bbox (no detector involved). The
generated crop is compared against the same crop of the pre-generation
composed canvas: both are masked to the product footprint over neutral
gray, resized identically to the reference asset's dimensions, then scored
with MS-SSIM and embedding cosine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..backends.base import EmbeddingBackend, cosine
from ..generate import CandidateImage
from ..planner import CompositionVariant
from ..raster import Raster, ensure_rgba, resize_bilinear
from ..store import Asset
from .msssim import ms_ssim

_NEUTRAL_GRAY = 128


@dataclass(frozen=True)
class FidelityRecord:
    pair_id: str
    ms_ssim: float
    embed_cosine: float


def _masked_crop(raster: Raster, mask: np.ndarray, bbox: tuple,
                 out_w: int, out_h: int) -> Raster:
    x0, y0, x1, y1 = bbox
    crop = ensure_rgba(raster)[y0:y1, x0:x1].copy()
    footprint = mask[y0:y1, x0:x1] > 0
    crop[~footprint] = (_NEUTRAL_GRAY, _NEUTRAL_GRAY, _NEUTRAL_GRAY, 255)
    crop[..., 3] = 255
    return resize_bilinear(crop, out_w, out_h)


def product_fidelity(generated: CandidateImage, variant: CompositionVariant,
                     reference: Asset, embedder: EmbeddingBackend) -> FidelityRecord:
    """Fidelity of the generated product region against what was placed."""
    x0, y0, x1, y1 = variant.placed_bbox
    if x1 <= x0 or y1 <= y0:
        raise ValueError(f"degenerate bbox {variant.placed_bbox}")
    ref_h, ref_w = ensure_rgba(reference.raster).shape[:2]
    observed = _masked_crop(generated.raster, variant.mask, variant.placed_bbox,
                            ref_w, ref_h)
    expected = _masked_crop(variant.composed, variant.mask, variant.placed_bbox,
                            ref_w, ref_h)
    return FidelityRecord(
        pair_id=f"{generated.candidate_id}:{reference.asset_id}",
        ms_ssim=ms_ssim(observed, expected),
        embed_cosine=cosine(embedder.embed_image(observed),
                            embedder.embed_image(expected)),
    )
