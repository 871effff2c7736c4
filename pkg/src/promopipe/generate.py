"""Scene generation stage: fan variants out to the generation backend."""

from __future__ import annotations

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

from .backends.base import BackendError, GenerationBackend, GenerationRequest
from .caption import SceneCaption
from .planner import CompositionVariant
from .raster import Raster

logger = logging.getLogger(__name__)


class GenerationBatchError(Exception):
    """Every candidate in the batch failed; the orchestrator may retry."""

    def __init__(self, failures: list):
        super().__init__(f"all {len(failures)} generation attempts failed")
        self.failures = failures


@dataclass
class CandidateImage:
    candidate_id: str
    variant_id: str
    raster: Raster
    seed: int
    attempt: int


def derive_seed(run_seed: int, variant_id: str, attempt: int, seed_index: int) -> int:
    """Stable per-candidate seed: run_seed XOR a hash of the candidate slot."""
    payload = f"{variant_id}|{attempt}|{seed_index}".encode("utf-8")
    h = int.from_bytes(hashlib.sha256(payload).digest()[:8], "little")
    return (int(run_seed) ^ h) & 0xFFFFFFFFFFFFFFFF


def generate_all(variants: Sequence[CompositionVariant], caption: SceneCaption,
                 backend: GenerationBackend, run_seed: int,
                 seeds_per_variant: int = 1, attempt: int = 1,
                 record: Optional[list] = None) -> list:
    """Generate candidates for every variant x seed, concurrently.

    Per-candidate failures are logged (and appended to `record` when given)
    without aborting the batch; results come back in deterministic
    (variant, seed) order. If nothing at all succeeds, GenerationBatchError
    carries the failure records so the orchestrator can retry.
    """
    if not variants:
        raise ValueError("generate_all requires at least one variant")
    if seeds_per_variant < 1:
        raise ValueError("seeds_per_variant must be positive")

    jobs = []
    for variant in variants:
        for k in range(seeds_per_variant):
            seed = derive_seed(run_seed, variant.variant_id, attempt, k)
            jobs.append((variant, k, seed))

    def run(job):
        variant, k, seed = job
        request = GenerationRequest(
            composed_canvas=variant.composed,
            product_mask=variant.mask,
            caption=caption.text,
            seed=seed,
        )
        return backend.generate_scene(request)

    max_workers = max(1, getattr(backend, "max_in_flight", 1))
    candidates = []
    failures = []
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        outcomes = []
        for job, future in [(j, pool.submit(run, j)) for j in jobs]:
            try:
                outcomes.append((job, future.result(), None))
            except BackendError as exc:
                outcomes.append((job, None, exc))
    for (variant, k, seed), raster, error in outcomes:
        if error is not None:
            logger.warning("generation failed for %s seed %d: %s",
                           variant.variant_id, seed, error)
            failures.append({
                "variant_id": variant.variant_id,
                "seed": seed,
                "attempt": attempt,
                "kind": error.kind,
                "detail": error.detail,
            })
            continue
        candidates.append(CandidateImage(
            candidate_id=f"{variant.variant_id}_a{attempt}_s{k}",
            variant_id=variant.variant_id,
            raster=raster,
            seed=seed,
            attempt=attempt,
        ))
    if record is not None:
        record.extend(failures)
    if not candidates:
        raise GenerationBatchError(failures)
    return candidates
