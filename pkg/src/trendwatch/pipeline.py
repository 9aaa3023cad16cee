"""End-to-end batch pipeline: corpus -> embeddings -> topics -> trends.

Each slice is processed in order; after every slice the full engine and
monitor state is written as a versioned snapshot and the slice report as a
JSON file. A rerun with the same config and inputs produces byte-identical
outputs, and a killed run resumes from the last snapshot with identical
results. Zero-shot topics can be added between slices through an inbox
file written by the HTTP API (or by hand); they take effect on the next
processed slice.
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .config import RunConfig
from .corpus import Granularity, ingest, parse_timestamp, preprocess, slice_units
from .embeddings import make_provider
from .engine import TrendEngine
from .errors import ConfigError, DataError
from .extraction import extract
from .zeroshot import ZeroShotMonitor

log = logging.getLogger(__name__)

SNAPSHOT_VERSION = 1
INBOX_FILE = "zeroshot_inbox.json"


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


@dataclass
class RunPaths:
    out_dir: Path

    @property
    def snapshots(self) -> Path:
        return self.out_dir / "snapshots"

    @property
    def reports(self) -> Path:
        return self.out_dir / "reports"

    @property
    def figures(self) -> Path:
        return self.out_dir / "figures"

    @property
    def labels_csv(self) -> Path:
        return self.out_dir / "labels.csv"

    @property
    def inbox(self) -> Path:
        return self.out_dir / INBOX_FILE

    def snapshot_file(self, slice_index: int) -> Path:
        return self.snapshots / f"slice_{slice_index:05d}.json"

    def report_file(self, slice_index: int) -> Path:
        return self.reports / f"slice_{slice_index:05d}.json"

    def latest_snapshot_index(self) -> int | None:
        if not self.snapshots.exists():
            return None
        indexes = sorted(
            int(p.stem.split("_")[1]) for p in self.snapshots.glob("slice_*.json")
        )
        return indexes[-1] if indexes else None


@dataclass
class RunResult:
    paths: RunPaths
    processed_slices: list[int]
    total_slices: int
    reports: list[dict[str, Any]]


def load_snapshot(path: Path) -> dict[str, Any]:
    try:
        with path.open("r", encoding="utf-8") as fh:
            snap = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read snapshot {path}: {exc}") from exc
    if snap.get("version") != SNAPSHOT_VERSION:
        raise DataError(f"snapshot {path} has unsupported version {snap.get('version')}")
    return snap


def read_inbox(paths: RunPaths) -> list[dict[str, Any]]:
    if not paths.inbox.exists():
        return []
    try:
        entries = json.loads(paths.inbox.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"corrupt zero-shot inbox: {exc}") from exc
    return entries if isinstance(entries, list) else []


def clear_inbox(paths: RunPaths) -> None:
    if paths.inbox.exists():
        paths.inbox.unlink()


def append_inbox(paths: RunPaths, entry: dict[str, Any]) -> None:
    entries = read_inbox(paths)
    entries.append(entry)
    _write_atomic(paths.inbox, canonical_json(entries))


def run_pipeline(cfg: RunConfig, up_to_slice: int | None = None) -> RunResult:
    """Run (or resume) the pipeline over the configured corpus.

    up_to_slice processes slices only up to that index (inclusive), which
    supports incremental batch operation and crash-recovery testing.
    """
    paths = RunPaths(cfg.out_dir)
    paths.out_dir.mkdir(parents=True, exist_ok=True)
    paths.snapshots.mkdir(exist_ok=True)
    paths.reports.mkdir(exist_ok=True)

    try:
        with cfg.corpus_input.open("r", encoding="utf-8") as fh:
            ingested = ingest(fh)
    except OSError as exc:
        raise DataError(f"cannot read corpus {cfg.corpus_input}: {exc}") from exc
    if ingested.skipped:
        log.info("ingest skipped %d records", ingested.skipped)
    units = []
    for doc in ingested.documents:
        units.extend(preprocess(doc, cfg.max_unit_chars))
    if not units and paths.latest_snapshot_index() is None:
        log.info("empty corpus: nothing to process")
        return RunResult(paths=paths, processed_slices=[], total_slices=0, reports=[])
    slices = slice_units(
        units,
        Granularity(days=cfg.granularity_days),
        parse_timestamp(cfg.corpus_start),
        parse_timestamp(cfg.corpus_end),
    )

    provider = make_provider(cfg.embedding)
    fingerprint = cfg.fingerprint()

    latest = paths.latest_snapshot_index()
    if latest is not None:
        snap = load_snapshot(paths.snapshot_file(latest))
        if snap["config_fingerprint"] != fingerprint:
            raise ConfigError(
                "existing snapshots were produced by a different configuration; "
                "use a fresh out_dir or restore the original config"
            )
        engine = TrendEngine.from_state_dict(snap["engine"], cfg.engine)
        monitor = ZeroShotMonitor.from_state_dict(snap["zeroshot"], cfg.engine)
        start_index = latest + 1
        log.info("resuming from snapshot at slice %d", latest)
    else:
        engine = TrendEngine(cfg.engine)
        monitor = ZeroShotMonitor(cfg.engine)
        for zs in cfg.zeroshot:
            (embedding,) = provider.embed_batch([zs.description], ids=[f"zeroshot:{zs.name}"])
            monitor.add_topic(zs.name, zs.description, embedding, beta=zs.beta, added_at=0)
        start_index = 0

    processed: list[int] = []
    reports: list[dict[str, Any]] = []
    stop = len(slices) - 1 if up_to_slice is None else min(up_to_slice, len(slices) - 1)

    for doc_slice in slices[start_index : stop + 1]:
        s = doc_slice.slice_index
        # hot-added zero-shot topics take effect starting with this slice
        for entry in read_inbox(paths):
            if any(t.name == entry["name"] for t in monitor.topics):
                log.warning("skipping duplicate zero-shot topic %r from inbox", entry["name"])
                continue
            (embedding,) = provider.embed_batch(
                [entry["description"]], ids=[f"zeroshot:{entry['name']}"]
            )
            monitor.add_topic(
                entry["name"],
                entry["description"],
                embedding,
                beta=float(entry.get("beta", 0.45)),
                added_at=s,
            )
        clear_inbox(paths)

        unit_ids = [u.unit_id for u in doc_slice.units]
        vectors = provider.embed_batch([u.text for u in doc_slice.units], ids=unit_ids)
        embeddings = dict(zip(unit_ids, vectors))

        topics = extract(doc_slice, embeddings, cfg.extraction)
        report = engine.step(doc_slice, topics, embeddings)
        monitor.match_slice(doc_slice, embeddings, s)
        thresholds = report["thresholds"]
        zs_thresholds = (
            (thresholds["p10"], thresholds["p50"])
            if thresholds["p10"] is not None
            else None
        )
        report["zeroshot"] = monitor.classify(s, zs_thresholds)

        _write_atomic(paths.report_file(s), canonical_json(report))
        snapshot = {
            "version": SNAPSHOT_VERSION,
            "slice_index": s,
            "config_fingerprint": fingerprint,
            "period": {"start": doc_slice.start.isoformat(), "end": doc_slice.end.isoformat()},
            "engine": engine.to_state_dict(),
            "zeroshot": monitor.to_state_dict(),
        }
        _write_atomic(paths.snapshot_file(s), canonical_json(snapshot))
        processed.append(s)
        reports.append(report)
        log.info(
            "slice %d: %d units, %d topics, %d total topics",
            s, len(doc_slice.units), len(topics), len(engine.topics),
        )

    all_reports = load_reports(paths)
    if all_reports:
        from .report import render_run_outputs  # deferred: pulls in matplotlib

        paths.figures.mkdir(exist_ok=True)
        final_snap = load_snapshot(paths.snapshot_file(paths.latest_snapshot_index()))
        render_run_outputs(all_reports, final_snap, paths)
    return RunResult(
        paths=paths,
        processed_slices=processed,
        total_slices=len(slices),
        reports=reports,
    )


def load_reports(paths: RunPaths) -> list[dict[str, Any]]:
    if not paths.reports.exists():
        return []
    files = sorted(paths.reports.glob("slice_*.json"))
    return [json.loads(p.read_text(encoding="utf-8")) for p in files]


def slice_periods_from_snapshots(paths: RunPaths) -> dict[int, tuple[str, str]]:
    periods: dict[int, tuple[str, str]] = {}
    if not paths.snapshots.exists():
        return periods
    for p in sorted(paths.snapshots.glob("slice_*.json")):
        snap = json.loads(p.read_text(encoding="utf-8"))
        periods[snap["slice_index"]] = (snap["period"]["start"], snap["period"]["end"])
    return periods
