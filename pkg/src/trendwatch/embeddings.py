"""Dense vector providers behind a pluggable boundary, plus cosine similarity.

Two providers are supported: a precomputed JSONL store keyed by unit id
(reproducible runs, tests, benchmarks) and a remote HTTP service speaking
a minimal JSON contract. No neural model ever runs in-process.

Vectors are handled as float64 numpy arrays throughout, regardless of what
the provider emits, to keep centroid and percentile math drift-free.
"""
from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import requests

from .errors import ConfigError, DataError, UpstreamError

log = logging.getLogger(__name__)

ENV_SERVICE_URL = "TRENDWATCH_EMBEDDING_URL"


@dataclass(frozen=True)
class EmbeddingProviderConfig:
    kind: str  # "precomputed-file" | "http-service"
    location: str
    expected_dim: int
    normalize: bool = True
    max_retries: int = 3
    backoff_seconds: float = 0.2
    max_in_flight: int = 4  # concurrent callers share this request budget

    def __post_init__(self) -> None:
        if self.expected_dim <= 0:
            raise ConfigError(f"expected_dim must be positive, got {self.expected_dim}")
        if self.kind not in ("precomputed-file", "http-service"):
            raise ConfigError(f"unknown embedding provider kind {self.kind!r}")


def l2_normalize(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise DataError("cannot normalize a zero vector")
    return vec / norm


def _scaled_norm(v: np.ndarray) -> float:
    """2-norm computed on a max-rescaled copy so tiny components do not
    underflow when squared."""
    peak = float(np.max(np.abs(v)))
    if peak == 0.0:
        return 0.0
    scaled = v / peak
    return peak * float(np.sqrt(np.dot(scaled, scaled)))


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity clamped to [-1, 1] against float rounding."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DataError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = _scaled_norm(a)
    nb = _scaled_norm(b)
    if na == 0.0 or nb == 0.0:
        raise DataError("cosine similarity undefined for a zero vector")
    if np.array_equal(a, b):
        return 1.0  # rounding in norm*norm would otherwise give 1 - ulp
    value = float(np.dot(a / na, b / nb))
    return max(-1.0, min(1.0, value))


class PrecomputedStore:
    """Read-only vector store loaded from JSONL lines {"id":..., "vector":[...]}."""

    def __init__(self, cfg: EmbeddingProviderConfig):
        self.cfg = cfg
        self._vectors: dict[str, np.ndarray] = {}
        path = Path(cfg.location)
        if not path.exists():
            raise ConfigError(f"precomputed embedding file not found: {path}")
        with path.open("r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                    key = str(obj["id"])
                    vec = np.asarray(obj["vector"], dtype=np.float64)
                except Exception as exc:
                    raise DataError(f"bad embedding record at line {lineno}: {exc}") from exc
                if vec.ndim != 1 or vec.shape[0] != cfg.expected_dim:
                    raise ConfigError(
                        f"embedding for {key!r} has dim {vec.shape}, expected {cfg.expected_dim}"
                    )
                if not np.all(np.isfinite(vec)):
                    raise DataError(f"non-finite embedding for {key!r}")
                self._vectors[key] = l2_normalize(vec) if cfg.normalize else vec

    def __len__(self) -> int:
        return len(self._vectors)

    def embed_batch(self, texts: list[str], ids: list[str] | None = None) -> list[np.ndarray]:
        if ids is None:
            raise DataError("precomputed provider requires unit ids for lookup")
        missing = [key for key in ids if key not in self._vectors]
        if missing:
            raise DataError(f"missing precomputed embeddings for ids: {sorted(missing)}")
        return [self._vectors[key] for key in ids]


class HttpEmbeddingClient:
    """Client for a remote embedding service: POST /embed {"texts": [...]}.

    Transport failures are retried with exponential backoff up to
    cfg.max_retries; a dimension mismatch is a configuration error and
    is never retried.
    """

    def __init__(self, cfg: EmbeddingProviderConfig, session: requests.Session | None = None):
        self.cfg = cfg
        self.session = session or requests.Session()
        self.url = cfg.location.rstrip("/") + "/embed"
        self._in_flight = threading.BoundedSemaphore(max(1, cfg.max_in_flight))

    def embed_batch(self, texts: list[str], ids: list[str] | None = None) -> list[np.ndarray]:
        payload = {"texts": list(texts)}
        last_exc: Exception | None = None
        for attempt in range(self.cfg.max_retries + 1):
            try:
                with self._in_flight:
                    resp = self.session.post(self.url, json=payload, timeout=60)
                if resp.status_code >= 500:
                    raise requests.RequestException(f"server error {resp.status_code}")
                resp.raise_for_status()
                vectors = resp.json()["vectors"]
                break
            except (requests.RequestException, KeyError, ValueError) as exc:
                last_exc = exc
                if attempt < self.cfg.max_retries:
                    delay = self.cfg.backoff_seconds * (2 ** attempt)
                    log.warning("embedding request failed (%s); retrying in %.2fs", exc, delay)
                    time.sleep(delay)
        else:
            raise UpstreamError(f"embedding service unreachable after retries: {last_exc}")

        if len(vectors) != len(texts):
            raise UpstreamError(
                f"embedding service returned {len(vectors)} vectors for {len(texts)} texts"
            )
        out: list[np.ndarray] = []
        for vec in vectors:
            arr = np.asarray(vec, dtype=np.float64)
            if arr.ndim != 1 or arr.shape[0] != self.cfg.expected_dim:
                raise ConfigError(
                    f"embedding service returned dim {arr.shape}, expected {self.cfg.expected_dim}"
                )
            out.append(l2_normalize(arr) if self.cfg.normalize else arr)
        return out


def make_provider(cfg: EmbeddingProviderConfig):
    if cfg.kind == "precomputed-file":
        return PrecomputedStore(cfg)
    return HttpEmbeddingClient(cfg)


def embed_batch(
    texts: list[str],
    cfg: EmbeddingProviderConfig,
    ids: list[str] | None = None,
) -> list[np.ndarray]:
    """One-shot convenience wrapper: build the provider and embed a batch."""
    return make_provider(cfg).embed_batch(texts, ids=ids)
