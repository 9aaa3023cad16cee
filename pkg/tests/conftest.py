"""Shared fixtures: a small deterministic end-to-end run used by the
pipeline, server and report tests."""
import hashlib
import json
from pathlib import Path

import pytest

from trendwatch.bench import Scenario, generate
from trendwatch.config import parse_config
from trendwatch.pipeline import run_pipeline

SMALL_SCENARIO = {
    "seed": 23,
    "dim": 8,
    "slices": 8,
    "granularity_days": 1,
    "start": "2024-05-01",
    "background_noise_per_slice": 0,
    "planted": [
        {"key": "stable-a", "schedule": [6] * 8, "spread": 0.0,
         "keywords": ["harbor", "ferry", "dock"]},
        {"key": "stable-b", "schedule": [4] * 8, "spread": 0.0,
         "keywords": ["violin", "concert", "stage"]},
        {"key": "stable-c", "schedule": [3] * 8, "spread": 0.0,
         "keywords": ["bakery", "sourdough", "oven"]},
        {"key": "flash", "schedule": [5, 6, 0, 0, 0, 0, 0, 0], "spread": 0.0,
         "keywords": ["meteor", "sighting", "night"]},
    ],
    "zeroshot": [
        {"name": "probe-monitor", "description": "harbor ferry traffic reports",
         "beta": 0.45, "center_of": "stable-a"},
    ],
}


def small_run_config(base_dir: Path, out_name: str = "run"):
    scenario = Scenario.from_dict(SMALL_SCENARIO)
    stream = generate(scenario, base_dir / "data")
    raw = {
        "run": {"out_dir": out_name},
        "corpus": {
            "input": str(stream.corpus_path),
            "granularity_days": 1,
            "start": "2024-05-01",
            "end": "2024-05-09",
        },
        "embeddings": {
            "provider": "precomputed-file",
            "location": str(stream.embeddings_path),
            "expected_dim": 8,
        },
        # aggressive decay so the flash topic hits the archive floor in-run
        "engine": {"decay_lambda": 0.5, "window": 4},
        "zeroshot": [
            {"name": "probe-monitor", "description": "harbor ferry traffic reports",
             "beta": 0.45},
        ],
    }
    return parse_config(raw, base_dir=base_dir), stream


def run_digest(out_dir: Path) -> str:
    h = hashlib.sha256()
    for path in sorted(out_dir.glob("reports/*.json")) + sorted(out_dir.glob("snapshots/*.json")):
        h.update(path.name.encode())
        h.update(path.read_bytes())
    return h.hexdigest()


@pytest.fixture(scope="session")
def small_run(tmp_path_factory):
    """One completed pipeline run over the small synthetic corpus."""
    base = tmp_path_factory.mktemp("small_run")
    cfg, stream = small_run_config(base)
    result = run_pipeline(cfg)
    return {"cfg": cfg, "result": result, "base": base, "stream": stream}


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, when that module ran."""
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria:")
        for line in sorted(RESULTS):
            terminalreporter.write_line("  " + line)
