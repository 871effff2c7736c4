"""HTTP API over persisted runs, plus static hosting for the review UI."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import manifest as manifest_io


class SelectionBody(BaseModel):
    candidate_ids: list


def create_app(runs_dir, frontend_dir: Optional[Path] = None) -> FastAPI:
    runs_dir = Path(runs_dir)
    app = FastAPI(title="marketing-image pipeline", docs_url=None, redoc_url=None)

    @app.get("/api/runs")
    def list_runs():
        return manifest_io.list_runs(runs_dir)

    @app.get("/api/runs/{run_id}")
    def get_run(run_id: str):
        try:
            return manifest_io.load_manifest(runs_dir, run_id)
        except manifest_io.ManifestError as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.get("/api/runs/{run_id}/candidates")
    def get_candidates(run_id: str):
        try:
            m = manifest_io.load_manifest(runs_dir, run_id)
        except manifest_io.ManifestError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        reports = {r["candidate_id"]: r for r in m.get("quality_reports", [])}
        variants = {v["variant_id"]: v for v in m.get("plan", {}).get("variants", [])}
        selected = set(m.get("selected", []))
        cards = []
        for c in m.get("candidates", []):
            report = reports.get(c["candidate_id"], {})
            variant = variants.get(c["variant_id"], {})
            cards.append({
                "candidate_id": c["candidate_id"],
                "variant_id": c["variant_id"],
                "seed": c["seed"],
                "attempt": c["attempt"],
                "image_url": f"/api/images/{c['image']}",
                "rubric": report.get("rubric"),
                "gate": report.get("gate"),
                "matched_pattern": report.get("matched_pattern"),
                "aesthetic": report.get("aesthetic"),
                "clip_score": report.get("clip_score"),
                "combined": report.get("combined"),
                "flags": report.get("flags", []),
                "pipeline_selected": c["candidate_id"] in selected,
                "position_slot": variant.get("position_slot"),
                "rotation_deg": variant.get("rotation_deg"),
                "scale": variant.get("scale"),
            })
        return {
            "run_id": run_id,
            "status": m.get("status"),
            "selected": m.get("selected", []),
            "human_selection": m.get("human_selection"),
            "candidates": cards,
        }

    @app.get("/api/images/{name}")
    def get_image(name: str):
        if not name.endswith(".png"):
            raise HTTPException(status_code=404, detail="unknown image")
        path = manifest_io.image_path(runs_dir, name)
        if path is None:
            raise HTTPException(status_code=404, detail="unknown image")
        return FileResponse(path, media_type="image/png")

    @app.post("/api/runs/{run_id}/selection")
    def post_selection(run_id: str, body: SelectionBody):
        ids = [str(c) for c in body.candidate_ids]
        try:
            updated = manifest_io.update_human_selection(runs_dir, run_id, ids)
        except manifest_io.ManifestError as exc:
            status = 404 if "no run" in str(exc) else 400
            raise HTTPException(status_code=status, detail=str(exc))
        return {"run_id": run_id, "human_selection": updated["human_selection"]}

    if frontend_dir is not None and Path(frontend_dir).exists():
        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="ui")

    return app


def serve(runs_dir, host: str = "127.0.0.1", port: int = 8000,
          frontend_dir: Optional[Path] = None) -> None:
    import uvicorn

    app = create_app(runs_dir, frontend_dir=frontend_dir)
    uvicorn.run(app, host=host, port=port)
