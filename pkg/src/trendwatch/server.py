"""Read-only HTTP API over run artifacts, plus two mutating endpoints.

GET endpoints serve the latest snapshot and the per-slice reports exactly
as written by the pipeline; nothing is recomputed. POST /zeroshot queues a
topic into the pipeline inbox (it becomes active on the next processed
slice); POST /analyze proxies the LLM interpretation flow.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException
from fastapi.responses import RedirectResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .engine import TrendEngine
from .errors import DataError, UpstreamError
from .interpret import LlmClient, LlmConfig, analyze_signal, build_dossier, summarize_evolution
from .pipeline import RunPaths, append_inbox, load_snapshot, read_inbox
from .zeroshot import ZeroShotMonitor

log = logging.getLogger(__name__)


class ZeroShotRequest(BaseModel):
    name: str = Field(min_length=1)
    description: str = Field(min_length=1)
    beta: float = 0.45


class SnapshotRepo:
    """Loads the newest snapshot on demand so a concurrently advancing
    pipeline becomes visible without restarting the server."""

    def __init__(self, paths: RunPaths):
        self.paths = paths
        self._cached_index: int | None = None
        self._cached: dict[str, Any] | None = None

    def latest(self) -> dict[str, Any]:
        index = self.paths.latest_snapshot_index()
        if index is None:
            raise HTTPException(status_code=404, detail="no snapshots available")
        if index != self._cached_index or self._cached is None:
            self._cached = load_snapshot(self.paths.snapshot_file(index))
            self._cached_index = index
        return self._cached

    def report(self, slice_index: int) -> dict[str, Any]:
        path = self.paths.report_file(slice_index)
        if not path.exists():
            raise HTTPException(status_code=404, detail=f"no report for slice {slice_index}")
        return json.loads(path.read_text(encoding="utf-8"))

    def all_reports(self) -> list[dict[str, Any]]:
        return [
            json.loads(p.read_text(encoding="utf-8"))
            for p in sorted(self.paths.reports.glob("slice_*.json"))
        ]


def create_app(
    out_dir: str | Path,
    llm: LlmConfig | None = None,
    static_dir: str | Path | None = None,
) -> FastAPI:
    paths = RunPaths(Path(out_dir))
    repo = SnapshotRepo(paths)
    app = FastAPI(title="trendwatch", version="0.1.0")

    @app.get("/slices")
    def get_slices() -> list[dict[str, Any]]:
        return [
            {
                "slice_index": r["slice_index"],
                "start": r["start"],
                "end": r["end"],
                "n_units": r["n_units"],
                "topics_extracted": r["topics_extracted"],
            }
            for r in repo.all_reports()
        ]

    @app.get("/signals")
    def get_signals(slice: int) -> dict[str, Any]:
        report = repo.report(slice)
        return {
            "slice_index": report["slice_index"],
            "start": report["start"],
            "end": report["end"],
            "thresholds": report["thresholds"],
            "signals": report["labels"] + report.get("zeroshot", []),
        }

    @app.get("/thresholds")
    def get_thresholds(slice: int) -> dict[str, Any]:
        report = repo.report(slice)
        return {"slice_index": report["slice_index"], **report["thresholds"]}

    @app.get("/topics/{topic_id}")
    def get_topic(topic_id: int) -> dict[str, Any]:
        snapshot = repo.latest()
        state = snapshot["engine"]
        entry = next((t for t in state["topics"] if t["topic_id"] == topic_id), None)
        if entry is None:
            raise HTTPException(status_code=404, detail=f"unknown topic {topic_id}")
        current = state["current_slice"]
        series = [
            {"slice_index": s, "value": entry["values"].get(str(s))}
            for s in range(entry["first_seen"], current + 1)
        ]
        return {
            "topic_id": topic_id,
            "first_seen": entry["first_seen"],
            "last_updated": entry["last_updated"],
            "archived_at": entry["archived_at"],
            "series": series,
            "words": entry["word_history"][-1][1] if entry["word_history"] else [],
            "doc_counts": {
                s: len(ids) for s, ids in entry["parent_doc_ids_by_slice"].items()
            },
        }

    @app.post("/zeroshot")
    def post_zeroshot(request: ZeroShotRequest) -> dict[str, Any]:
        snapshot = repo.latest()
        existing = {z["name"] for z in snapshot["zeroshot"]}
        queued = {e["name"] for e in read_inbox(paths)}
        if request.name in existing or request.name in queued:
            raise HTTPException(status_code=409, detail=f"zero-shot topic {request.name!r} exists")
        if not 0.0 < request.beta < 1.0:
            raise HTTPException(status_code=422, detail="beta must be in (0, 1)")
        append_inbox(
            paths,
            {"name": request.name, "description": request.description, "beta": request.beta},
        )
        return {"status": "queued", "name": request.name, "effective": "next slice"}

    @app.post("/analyze/{topic_id}")
    def post_analyze(topic_id: int) -> dict[str, Any]:
        if llm is None:
            raise HTTPException(
                status_code=501,
                detail="no LLM endpoint configured; set [llm] endpoint or TRENDWATCH_LLM_ENDPOINT",
            )
        snapshot = repo.latest()
        from .pipeline import slice_periods_from_snapshots

        engine = TrendEngine.from_state_dict(snapshot["engine"], params=_params_stub())
        try:
            dossier = build_dossier(
                engine, topic_id, slice_periods=slice_periods_from_snapshots(paths)
            )
        except DataError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        client = LlmClient(llm)
        try:
            summary = summarize_evolution(dossier, client)
            analysis = analyze_signal(summary.markdown, client, topic_id=topic_id)
        except UpstreamError as exc:
            raise HTTPException(status_code=502, detail=str(exc)) from exc
        return {
            "topic_id": topic_id,
            "summary": summary.markdown,
            "analysis": analysis.markdown,
            "warnings": summary.warnings + analysis.warnings,
        }

    if static_dir is not None and Path(static_dir).exists():
        app.mount("/ui", StaticFiles(directory=str(static_dir), html=True), name="ui")

        @app.get("/", include_in_schema=False)
        def root() -> RedirectResponse:
            return RedirectResponse(url="/ui/")

    return app


def _params_stub():
    # classification params are irrelevant for read-only dossier assembly
    from .engine import EngineParams

    return EngineParams()
