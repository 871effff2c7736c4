"""Run-level evaluation: fidelity records per selected candidate, CSV + summary."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Optional

import numpy as np

from ..backends.base import EmbeddingBackend
from ..generate import CandidateImage
from ..manifest import load_manifest, run_dir
from ..planner import CompositionVariant, ScaleFactors
from ..raster import load as load_raster
from ..store import AssetStore
from .fidelity import FidelityRecord, product_fidelity
from .stats import paired_t_test


def _load_mask(path) -> np.ndarray:
    return np.asarray(load_raster(path))[..., 0]


def _rebuild_variant(entry: dict, image_dir: Path) -> CompositionVariant:
    return CompositionVariant(
        variant_id=entry["variant_id"],
        position_slot=entry["position_slot"],
        rotation_deg=entry["rotation_deg"],
        scale=ScaleFactors(entry["scale"]["s_w"], entry["scale"]["s_h"]),
        placed_bbox=tuple(entry["bbox"]),
        composed=load_raster(image_dir / entry["composed_image"]),
        mask=_load_mask(image_dir / entry["mask_image"]),
    )


def evaluate_run(runs_dir, run_id: str, store: AssetStore,
                 embedder: EmbeddingBackend,
                 candidate_ids: Optional[list] = None) -> list:
    """FidelityRecords for a persisted run's selected candidates.

    Compares each candidate's product region against the run's reference
    product from the store. `candidate_ids` narrows the evaluation;
    defaults to the pipeline-selected set (all candidates when selection
    was empty).
    """
    manifest = load_manifest(runs_dir, run_id)
    image_dir = run_dir(runs_dir, run_id) / "images"
    products = manifest.get("retrieval", {}).get("products", [])
    if not products:
        raise ValueError(f"run {run_id} has no retrieved product to compare against")
    reference = store.get(products[0]["asset_id"])
    variants = {
        v["variant_id"]: _rebuild_variant(v, image_dir)
        for v in manifest.get("plan", {}).get("variants", [])
    }
    wanted = candidate_ids
    if wanted is None:
        wanted = manifest.get("selected") or [
            c["candidate_id"] for c in manifest.get("candidates", [])
        ]
    wanted_set = set(wanted)
    records = []
    for entry in manifest.get("candidates", []):
        if entry["candidate_id"] not in wanted_set:
            continue
        candidate = CandidateImage(
            candidate_id=entry["candidate_id"],
            variant_id=entry["variant_id"],
            raster=load_raster(image_dir / entry["image"]),
            seed=entry["seed"],
            attempt=entry["attempt"],
        )
        records.append(product_fidelity(
            candidate, variants[entry["variant_id"]], reference, embedder))
    return records


def records_to_csv(records: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["pair_id", "ms_ssim", "embed_cosine"])
    for r in records:
        writer.writerow([r.pair_id, f"{r.ms_ssim:.6f}", f"{r.embed_cosine:.6f}"])
    return buf.getvalue()


def _metric_summary(values: list) -> dict:
    arr = np.asarray(values, dtype=np.float64)
    return {
        "n": int(arr.size),
        "mean": float(arr.mean()) if arr.size else None,
        "std": float(arr.std(ddof=1)) if arr.size > 1 else None,
    }


def summarize(records: list, baseline_records: Optional[list] = None) -> dict:
    """Mean/std per metric; paired t-tests when a baseline is supplied.

    Baseline pairing is positional over the common prefix — meaningful when
    both evaluations cover the same candidates in the same order.
    """
    summary = {
        "ms_ssim": _metric_summary([r.ms_ssim for r in records]),
        "embed_cosine": _metric_summary([r.embed_cosine for r in records]),
    }
    if baseline_records is not None:
        n = min(len(records), len(baseline_records))
        tests = {}
        if n >= 2:
            for metric in ("ms_ssim", "embed_cosine"):
                base = [getattr(r, metric) for r in baseline_records[:n]]
                ours = [getattr(r, metric) for r in records[:n]]
                result = paired_t_test(base, ours)
                tests[metric] = {
                    "mean_diff": result.mean_diff,
                    "t_statistic": result.t_statistic,
                    "p_value": result.p_value,
                    "n": result.n,
                    "degenerate": result.degenerate,
                }
        summary["t_tests_vs_baseline"] = tests
    return summary


def summary_to_json(summary: dict) -> str:
    return json.dumps(summary, sort_keys=True, indent=2) + "\n"
