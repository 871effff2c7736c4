"""Run manifest persistence.

One directory per run:

    runs/<run_id>/manifest.json
    runs/<run_id>/images/<hash16>.png

Runs are written to a temp directory first and moved into place atomically,
so API readers never observe a half-written run. Manifest JSON is written
canonically (sorted keys); the only volatile fields are `created_at` and
`stage_timings`, which byte-level reproducibility checks must exclude.
"""

from __future__ import annotations

import json
import os
import shutil
import uuid
from pathlib import Path
from typing import Optional

from .raster import Raster, content_hash, encode_png

VOLATILE_KEYS = ("created_at", "stage_timings")


class ManifestError(Exception):
    pass


def canonical_json(value: dict) -> str:
    return json.dumps(value, sort_keys=True, indent=2) + "\n"


def image_name(raster: Raster) -> str:
    return content_hash(raster)[:16] + ".png"


def write_run(runs_dir, manifest: dict, images: dict) -> Path:
    """Persist a run atomically; `images` maps file name -> raster."""
    runs_dir = Path(runs_dir)
    runs_dir.mkdir(parents=True, exist_ok=True)
    run_id = manifest["run_id"]
    tmp = runs_dir / f".tmp-{run_id}-{uuid.uuid4().hex[:8]}"
    tmp.mkdir()
    try:
        image_dir = tmp / "images"
        image_dir.mkdir()
        for name, raster in images.items():
            (image_dir / name).write_bytes(encode_png(raster))
        (tmp / "manifest.json").write_text(canonical_json(manifest), encoding="utf-8")
        final = runs_dir / run_id
        if final.exists():
            stale = runs_dir / f".old-{run_id}-{uuid.uuid4().hex[:8]}"
            os.rename(final, stale)
            os.rename(tmp, final)
            shutil.rmtree(stale)
        else:
            os.rename(tmp, final)
        return final
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


def run_dir(runs_dir, run_id: str) -> Path:
    return Path(runs_dir) / run_id


def load_manifest(runs_dir, run_id: str) -> dict:
    path = run_dir(runs_dir, run_id) / "manifest.json"
    if not path.exists():
        raise ManifestError(f"no run {run_id!r} under {runs_dir}")
    return json.loads(path.read_text(encoding="utf-8"))


def list_runs(runs_dir) -> list:
    """Summaries of all persisted runs, newest run_id-sorted last."""
    runs_dir = Path(runs_dir)
    if not runs_dir.exists():
        return []
    summaries = []
    for entry in sorted(runs_dir.iterdir()):
        if entry.name.startswith(".") or not (entry / "manifest.json").exists():
            continue
        m = json.loads((entry / "manifest.json").read_text(encoding="utf-8"))
        summaries.append({
            "run_id": m.get("run_id", entry.name),
            "prompt": m.get("prompt", ""),
            "status": m.get("status", "unknown"),
            "created_at": m.get("created_at", ""),
            "candidate_count": len(m.get("candidates", [])),
            "selected_count": len(m.get("selected", [])),
            "human_selection": m.get("human_selection"),
        })
    return summaries


def image_path(runs_dir, name: str) -> Optional[Path]:
    """Locate an image by file name across all runs."""
    runs_dir = Path(runs_dir)
    if not runs_dir.exists() or "/" in name or "\\" in name or ".." in name:
        return None
    for entry in sorted(runs_dir.iterdir()):
        if entry.name.startswith("."):
            continue
        candidate = entry / "images" / name
        if candidate.exists():
            return candidate
    return None


def update_human_selection(runs_dir, run_id: str, candidate_ids: list) -> dict:
    """Record the human's final picks; must be a subset of pipeline selection."""
    manifest = load_manifest(runs_dir, run_id)
    allowed = set(manifest.get("selected", []))
    requested = list(dict.fromkeys(candidate_ids))  # dedupe, keep order
    outside = [c for c in requested if c not in allowed]
    if outside:
        raise ManifestError(
            f"candidates {outside} are not in the pipeline-selected set"
        )
    manifest["human_selection"] = requested
    path = run_dir(runs_dir, run_id) / "manifest.json"
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(canonical_json(manifest), encoding="utf-8")
    os.replace(tmp, path)
    return manifest


def check_integrity(manifest: dict, run_path: Optional[Path] = None) -> list:
    """Referential-integrity problems in a manifest (empty list = clean)."""
    problems = []
    variant_ids = {v["variant_id"] for v in manifest.get("plan", {}).get("variants", [])}
    candidate_ids = {c["candidate_id"] for c in manifest.get("candidates", [])}
    for c in manifest.get("candidates", []):
        if c["variant_id"] not in variant_ids:
            problems.append(f"candidate {c['candidate_id']} references unknown variant")
    for r in manifest.get("quality_reports", []):
        if r["candidate_id"] not in candidate_ids:
            problems.append(f"report references unknown candidate {r['candidate_id']}")
    for cid in manifest.get("selected", []):
        if cid not in candidate_ids:
            problems.append(f"selected id {cid} is not a candidate")
    for cid in manifest.get("human_selection") or []:
        if cid not in manifest.get("selected", []):
            problems.append(f"human selection {cid} outside selected set")
    if run_path is not None:
        names = [c.get("image") for c in manifest.get("candidates", [])]
        names += [v.get("composed_image") for v in
                  manifest.get("plan", {}).get("variants", [])]
        names += [v.get("mask_image") for v in
                  manifest.get("plan", {}).get("variants", [])]
        for name in names:
            if name and not (run_path / "images" / name).exists():
                problems.append(f"missing image file {name}")
    return problems
