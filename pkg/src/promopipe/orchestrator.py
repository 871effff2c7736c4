"""Pipeline orchestration: decompose -> retrieve -> caption -> plan ->
generate -> quality control -> select, persisted as a run manifest.

run_id is derived from (prompt, run_seed, config), so re-running the same
inputs under mock backends reproduces the same run directory byte-for-byte
(modulo the manifest's volatile timing/timestamp fields).
"""

from __future__ import annotations

import hashlib
import logging
import time
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from .backends.base import BackendError
from .caption import generate_caption
from .config import Backends, PipelineConfig
from .decompose import decompose
from .generate import GenerationBatchError, generate_all
from .manifest import image_name, write_run
from .planner import (
    PlanError,
    advise_scale,
    build_canvas,
    enumerate_variants,
)
from .quality import build_report, rank_and_select
from .store import AssetStore, StoreError

logger = logging.getLogger(__name__)


class OrchestrationError(Exception):
    pass


def compute_run_id(prompt: str, config: PipelineConfig) -> str:
    payload = f"{prompt}|{config.run_seed}|{config.canonical_json()}"
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def run_pipeline(prompt: str, config: PipelineConfig,
                 store: Optional[AssetStore] = None,
                 backends: Optional[Backends] = None) -> dict:
    """Execute the full pipeline and persist the run. Returns the manifest.

    Stage-fatal problems (no product above threshold, generation exhausted)
    do not raise: the manifest is persisted with status "failed" and a
    failure log, which is what the CLI and API report.
    """
    config.validate()
    if backends is None:
        backends = config.build_backends()
    if store is None:
        store = AssetStore(config.store_path, backends.embed)

    run_id = compute_run_id(prompt, config)
    timings: dict = {}
    failures: list = []
    images: dict = {}
    manifest: dict = {
        "run_id": run_id,
        "schema_version": 1,
        "status": "complete",
        "prompt": prompt,
        "config_snapshot": config.snapshot(),
        "created_at": _utc_now(),
        "brief": None,
        "retrieval": {"products": [], "backgrounds": [], "background_used": None},
        "caption": None,
        "advisor": {},
        "plan": {"variants": []},
        "candidates": [],
        "quality_reports": [],
        "selected": [],
        "human_selection": None,
        "stage_timings": timings,
        "failures": failures,
    }

    @contextmanager
    def stage(name):
        start = time.perf_counter()
        try:
            yield
        finally:
            timings[name] = round(time.perf_counter() - start, 6)

    def fail(stage_name: str, message: str) -> dict:
        failures.append({"stage": stage_name, "error": message})
        manifest["status"] = "failed"
        write_run(config.runs_dir, manifest, images)
        logger.error("run %s failed at %s: %s", run_id, stage_name, message)
        return manifest

    # ---- decompose ----
    try:
        with stage("decompose"):
            brief = decompose(prompt, backends.llm)
        manifest["brief"] = brief.to_dict()
    except (ValueError, BackendError) as exc:
        return fail("decompose", str(exc))

    # ---- retrieval ----
    retrieval_cfg = config.retrieval
    try:
        with stage("retrieve_products"):
            products = store.retrieve_products(
                brief, limit=retrieval_cfg["product_limit"],
                threshold=retrieval_cfg["tau_p"])
    except StoreError as exc:
        return fail("retrieve_products", str(exc))
    manifest["retrieval"]["products"] = [
        {"asset_id": r.asset.asset_id, "label": r.asset.label,
         "similarity": r.similarity}
        for r in products
    ]
    if not products:
        return fail("retrieve_products",
                    "no product asset reached the similarity threshold")
    product = products[0].asset

    bg_considered: list = []
    with stage("retrieve_backgrounds"):
        backgrounds = store.retrieve_backgrounds(
            brief, k=retrieval_cfg["background_k"], llm=backends.llm,
            record=bg_considered)
    manifest["retrieval"]["backgrounds"] = [
        {"asset_id": r.asset.asset_id, "label": r.asset.label,
         "similarity": r.similarity, "verdict": r.validator_verdict}
        for r in bg_considered
    ]
    background = backgrounds[0].asset if backgrounds else None
    manifest["retrieval"]["background_used"] = (
        background.asset_id if background else None)

    # ---- caption ----
    with stage("caption"):
        caption = generate_caption(brief, background, backends.llm)
    manifest["caption"] = {
        "text": caption.text,
        "derived_from_background": caption.derived_from_background,
        "fallback_used": caption.fallback_used,
    }

    # ---- plan ----
    plan_cfg = config.plan
    canvas = build_canvas(tuple(plan_cfg["canvas_size"]), background)
    advisor_record: dict = {}
    with stage("advise_scale"):
        scale = advise_scale(canvas, product, caption, backends.llm,
                             bounds=tuple(plan_cfg["scale_bounds"]),
                             record=advisor_record)
    manifest["advisor"] = advisor_record
    plan_record: dict = {}
    try:
        with stage("enumerate_variants"):
            variants = enumerate_variants(
                canvas, product, scale,
                slots=tuple(plan_cfg["slots"]),
                rotations=tuple(plan_cfg["rotations_deg"]),
                vertical_anchor=plan_cfg["vertical_anchor"],
                record=plan_record)
    except PlanError as exc:
        return fail("enumerate_variants", str(exc))
    variant_entries = []
    for v in variants:
        composed_name = image_name(v.composed)
        mask_name = image_name(v.mask)
        images[composed_name] = v.composed
        images[mask_name] = v.mask
        variant_entries.append({
            "variant_id": v.variant_id,
            "position_slot": v.position_slot,
            "rotation_deg": v.rotation_deg,
            "scale": {"s_w": v.scale.s_w, "s_h": v.scale.s_h},
            "bbox": list(v.placed_bbox),
            "composed_image": composed_name,
            "mask_image": mask_name,
        })
    manifest["plan"] = {
        "background_source": canvas.background_source,
        "scale_reduction": plan_record.get("scale_reduction", 1.0),
        "effective_scale": plan_record.get("effective_scale"),
        "variants": variant_entries,
    }

    # ---- generate + score, with one retry pass on empty selection ----
    policy = config.selection_policy()
    seeds_per_variant = config.generation["seeds_per_variant"]
    gen_failures: list = []
    candidates: list = []
    reports: list = []

    def generate_pass(attempt: int) -> None:
        with stage(f"generate_attempt{attempt}"):
            try:
                batch = generate_all(
                    variants, caption, backends.generate, config.run_seed,
                    seeds_per_variant=seeds_per_variant, attempt=attempt,
                    record=gen_failures)
            except GenerationBatchError:
                batch = []
        with stage(f"quality_attempt{attempt}"):
            for candidate in batch:
                reports.append(build_report(
                    candidate, caption, backends.llm, backends.embed,
                    backends.aesthetic, policy))
        candidates.extend(batch)

    generate_pass(attempt=1)
    selected = rank_and_select(reports, policy)
    retried = False
    if not selected:
        retried = True
        logger.info("run %s: empty selection after first pass; retrying once", run_id)
        generate_pass(attempt=2)
        selected = rank_and_select(reports, policy)
    manifest["retried"] = retried
    for failure in gen_failures:
        failures.append({"stage": "generate", **failure})

    for candidate in candidates:
        name = image_name(candidate.raster)
        images[name] = candidate.raster
        manifest["candidates"].append({
            "candidate_id": candidate.candidate_id,
            "variant_id": candidate.variant_id,
            "seed": candidate.seed,
            "attempt": candidate.attempt,
            "image": name,
        })
    manifest["quality_reports"] = [
        {
            "candidate_id": r.candidate_id,
            "rubric": {
                "caption_alignment": r.rubric.caption_alignment,
                "product_uniqueness": r.rubric.product_uniqueness,
                "physical_realism": r.rubric.physical_realism,
                "lighting_consistency": r.rubric.lighting_consistency,
            },
            "gate": r.gate,
            "matched_pattern": list(r.matched_pattern) if r.matched_pattern else None,
            "aesthetic": r.aesthetic,
            "clip_score": r.clip_score,
            "combined": r.combined,
            "flags": r.flags,
        }
        for r in reports
    ]
    manifest["selected"] = selected

    if not candidates:
        return fail("generate", "all generation attempts failed in both passes")
    if not selected:
        manifest["status"] = "empty_selection"

    write_run(config.runs_dir, manifest, images)
    return manifest
