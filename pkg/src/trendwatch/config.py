"""Run configuration: a single TOML file, schema-validated on load.

Unknown keys are rejected outright so typos fail fast instead of silently
running with defaults.
"""
from __future__ import annotations

import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .embeddings import ENV_SERVICE_URL, EmbeddingProviderConfig
from .engine import EngineParams
from .errors import ConfigError
from .extraction import ExtractionParams
from .interpret import LlmConfig

ENV_LLM_ENDPOINT = "TRENDWATCH_LLM_ENDPOINT"
ENV_LLM_API_KEY = "TRENDWATCH_LLM_API_KEY"

_SCHEMA: dict[str, set[str]] = {
    "run": {"out_dir"},
    "corpus": {"input", "granularity_days", "start", "end", "max_unit_chars"},
    "embeddings": {"provider", "location", "expected_dim", "normalize"},
    "extraction": {
        "reduced_dim", "n_neighbors", "min_cluster_size", "min_samples", "top_n_words", "seed",
    },
    "engine": {
        "merge_threshold", "decay_lambda", "window", "slope_min_points", "decay_mode",
        "excerpts_per_slice", "excerpt_max_chars",
    },
    "zeroshot": {"name", "description", "beta"},
    "llm": {"endpoint", "model", "temperature", "max_tokens", "timeout"},
}


@dataclass
class ZeroShotConfig:
    name: str
    description: str
    beta: float = 0.45


@dataclass
class RunConfig:
    out_dir: Path
    corpus_input: Path
    corpus_start: str
    corpus_end: str
    granularity_days: int = 1
    max_unit_chars: int = 2000
    embedding: EmbeddingProviderConfig | None = None
    extraction: ExtractionParams = field(default_factory=ExtractionParams)
    engine: EngineParams = field(default_factory=EngineParams)
    zeroshot: list[ZeroShotConfig] = field(default_factory=list)
    llm: LlmConfig | None = None

    def fingerprint(self) -> str:
        """Stable hash of the parameters that shape pipeline output.

        Input paths are deliberately excluded so a run can be reproduced
        byte-for-byte from a different directory layout; swapping the data
        behind the same paths is on the operator.
        """
        payload = {
            "corpus": [self.corpus_start, self.corpus_end,
                       self.granularity_days, self.max_unit_chars],
            "embedding": [self.embedding.kind,
                          self.embedding.expected_dim, self.embedding.normalize],
            "extraction": [self.extraction.reduced_dim, self.extraction.min_cluster_size,
                           self.extraction.min_samples, self.extraction.top_n_words,
                           self.extraction.seed],
            "engine": [self.engine.merge_threshold, self.engine.decay_lambda,
                       self.engine.window, self.engine.granularity_days,
                       self.engine.slope_min_points, self.engine.decay_mode],
            "zeroshot": [[z.name, z.description, z.beta] for z in self.zeroshot],
        }
        blob = json.dumps(payload, sort_keys=True)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _check_keys(section: str, obj: dict[str, Any]) -> None:
    allowed = _SCHEMA[section]
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"[{section}] has unknown keys: {sorted(unknown)}")


def _require(obj: dict[str, Any], section: str, key: str) -> Any:
    if key not in obj:
        raise ConfigError(f"[{section}] is missing required key {key!r}")
    return obj[key]


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with path.open("rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    return parse_config(raw, base_dir=path.parent)


def parse_config(raw: dict[str, Any], base_dir: Path | None = None) -> RunConfig:
    base = base_dir or Path.cwd()
    top_unknown = set(raw) - set(_SCHEMA)
    if top_unknown:
        raise ConfigError(f"unknown config sections: {sorted(top_unknown)}")

    run = raw.get("run", {})
    _check_keys("run", run)
    out_dir = base / _require(run, "run", "out_dir")

    corpus = raw.get("corpus", {})
    _check_keys("corpus", corpus)
    corpus_input = base / _require(corpus, "corpus", "input")
    start = str(_require(corpus, "corpus", "start"))
    end = str(_require(corpus, "corpus", "end"))
    granularity = int(corpus.get("granularity_days", 1))
    if granularity < 1:
        raise ConfigError("granularity_days must be >= 1")
    max_unit_chars = int(corpus.get("max_unit_chars", 2000))

    emb = raw.get("embeddings", {})
    _check_keys("embeddings", emb)
    provider = emb.get("provider", "precomputed-file")
    location = emb.get("location") or os.environ.get(ENV_SERVICE_URL, "")
    if not location:
        raise ConfigError(
            f"[embeddings] needs location (or {ENV_SERVICE_URL} for the http provider)"
        )
    if provider == "precomputed-file":
        location = str(base / location)
    embedding = EmbeddingProviderConfig(
        kind=provider,
        location=location,
        expected_dim=int(_require(emb, "embeddings", "expected_dim")),
        normalize=bool(emb.get("normalize", True)),
    )

    ext = raw.get("extraction", {})
    _check_keys("extraction", ext)
    try:
        extraction = ExtractionParams(
            reduced_dim=int(ext.get("reduced_dim", 5)),
            n_neighbors=int(ext.get("n_neighbors", 15)),
            min_cluster_size=int(ext.get("min_cluster_size", 2)),
            min_samples=int(ext.get("min_samples", 1)),
            top_n_words=int(ext.get("top_n_words", 10)),
            seed=int(ext.get("seed", 0)),
        )
    except ValueError as exc:
        raise ConfigError(f"[extraction] {exc}") from exc

    eng = raw.get("engine", {})
    _check_keys("engine", eng)
    merge_threshold = float(eng.get("merge_threshold", 0.7))
    if not 0.0 < merge_threshold <= 1.0:
        raise ConfigError("merge_threshold must be in (0, 1]")
    try:
        engine = EngineParams(
            merge_threshold=merge_threshold,
            decay_lambda=float(eng.get("decay_lambda", 0.01)),
            window=int(eng.get("window", 5)),
            granularity_days=granularity,
            slope_min_points=int(eng.get("slope_min_points", 3)),
            decay_mode=str(eng.get("decay_mode", "growing")),
            excerpts_per_slice=int(eng.get("excerpts_per_slice", 3)),
            excerpt_max_chars=int(eng.get("excerpt_max_chars", 300)),
        )
    except ValueError as exc:
        raise ConfigError(f"[engine] {exc}") from exc

    zeroshot: list[ZeroShotConfig] = []
    for entry in raw.get("zeroshot", []):
        _check_keys("zeroshot", entry)
        beta = float(entry.get("beta", 0.45))
        if not 0.0 < beta < 1.0:
            raise ConfigError(f"zeroshot beta must be in (0, 1), got {beta}")
        zeroshot.append(
            ZeroShotConfig(
                name=str(_require(entry, "zeroshot", "name")),
                description=str(_require(entry, "zeroshot", "description")),
                beta=beta,
            )
        )
    names = [z.name for z in zeroshot]
    if len(names) != len(set(names)):
        raise ConfigError("duplicate zeroshot topic names in config")

    llm_cfg: LlmConfig | None = None
    llm = raw.get("llm", {})
    if llm:
        _check_keys("llm", llm)
    endpoint = llm.get("endpoint") or os.environ.get(ENV_LLM_ENDPOINT, "")
    if endpoint:
        llm_cfg = LlmConfig(
            endpoint=endpoint,
            model=str(llm.get("model", "default")),
            temperature=float(llm.get("temperature", 0.1)),
            max_tokens=int(llm.get("max_tokens", 1024)),
            timeout=float(llm.get("timeout", 60.0)),
            api_key=os.environ.get(ENV_LLM_API_KEY),
        )

    return RunConfig(
        out_dir=out_dir,
        corpus_input=corpus_input,
        corpus_start=start,
        corpus_end=end,
        granularity_days=granularity,
        max_unit_chars=max_unit_chars,
        embedding=embedding,
        extraction=extraction,
        engine=engine,
        zeroshot=zeroshot,
        llm=llm_cfg,
    )
