"""LLM-backed narrative reports for a topic's evolution.

Two-stage flow: first a per-period evolution summary rendered from a topic
dossier, then an in-depth signal analysis of that summary. The prompt
templates are stored as package assets and rendered by pure placeholder
substitution, so rendered prompts differ from the stored templates only
inside the placeholder spans.

This module never mutates engine state; a dead endpoint fails the request
and nothing else.
"""
from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass, field
from importlib import resources
from typing import Any

import requests

from .engine import TrendEngine
from .errors import ConfigError, DataError, UpstreamError

log = logging.getLogger(__name__)

EVOLUTION_TEMPLATE = "evolution_summary.txt"
ANALYSIS_TEMPLATE = "signal_analysis.txt"

REQUIRED_HEADERS = ("## ", "### Date:", "### Key Developments", "### Analysis")
WHATS_NEW_HEADER = "### What's New"


def load_template(name: str) -> str:
    return (resources.files("trendwatch") / "templates" / name).read_text(encoding="utf-8")


@dataclass
class DossierRecord:
    slice_index: int
    period_start: str
    period_end: str
    top_words: list[str]
    doc_count: int
    excerpts: list[str]


@dataclass
class TopicDossier:
    topic_id: int
    records: list[DossierRecord]


@dataclass
class LlmConfig:
    endpoint: str
    model: str
    temperature: float = 0.1
    max_tokens: int = 1024
    timeout: float = 60.0
    max_retries: int = 1
    backoff_seconds: float = 0.2
    api_key: str | None = None
    max_in_flight: int = 2  # concurrent per-topic requests share this budget

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 2.0:
            raise ConfigError(f"temperature must be in [0, 2], got {self.temperature}")


def build_dossier(
    engine: TrendEngine,
    topic_id: int,
    max_excerpts_per_slice: int = 3,
    slice_periods: dict[int, tuple[str, str]] | None = None,
) -> TopicDossier:
    """Assemble the chronological evidence for one topic.

    One record per slice in which the topic received documents. Excerpts
    were ranked by similarity to the topic anchor when they were captured;
    here we only trim the list.
    """
    topic = next((t for t in engine.topics if t.topic_id == topic_id), None)
    if topic is None:
        raise DataError(f"unknown topic id {topic_id}")
    slice_periods = slice_periods or {}
    records = []
    for slice_index in sorted(topic.parent_doc_ids_by_slice):
        start, end = slice_periods.get(slice_index, (f"slice {slice_index}", f"slice {slice_index + 1}"))
        excerpts = [
            e["text"] for e in topic.excerpts.get(slice_index, [])[: max(0, max_excerpts_per_slice)]
        ]
        records.append(
            DossierRecord(
                slice_index=slice_index,
                period_start=start,
                period_end=end,
                top_words=[w for w, _ in topic.latest_words(slice_index)],
                doc_count=len(topic.parent_doc_ids_by_slice[slice_index]),
                excerpts=excerpts,
            )
        )
    return TopicDossier(topic_id=topic_id, records=records)


def format_content_summary(dossier: TopicDossier) -> str:
    """Deterministic plain-text digest used as the first prompt's input."""
    blocks: list[str] = []
    for rec in dossier.records:
        lines = [
            f"Timestamp: {rec.period_start} to {rec.period_end}",
            f"Documents: {rec.doc_count}",
            f"Top terms: {', '.join(rec.top_words) if rec.top_words else '(none)'}",
        ]
        if rec.excerpts:
            lines.append("Excerpts:")
            lines.extend(f"- {text}" for text in rec.excerpts)
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)


def render_evolution_prompt(dossier: TopicDossier) -> str:
    template = load_template(EVOLUTION_TEMPLATE)
    return template.replace("{topic_number}", str(dossier.topic_id)).replace(
        "{content_summary}", format_content_summary(dossier)
    )


def render_analysis_prompt(summary: str) -> str:
    template = load_template(ANALYSIS_TEMPLATE)
    return template.replace("{summary_from_first_prompt}", summary)


class LlmClient:
    """Minimal chat-completion client with bounded retries and a response
    cache keyed by the caller (topic id, last slice)."""

    def __init__(self, cfg: LlmConfig, session: requests.Session | None = None):
        self.cfg = cfg
        self.session = session or requests.Session()
        self._cache: dict[tuple[Any, ...], str] = {}
        self._in_flight = threading.BoundedSemaphore(max(1, cfg.max_in_flight))

    def chat(self, prompt: str, cache_key: tuple[Any, ...] | None = None) -> str:
        if cache_key is not None and cache_key in self._cache:
            return self._cache[cache_key]
        payload = {
            "model": self.cfg.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_tokens,
        }
        headers = {}
        if self.cfg.api_key:
            headers["Authorization"] = f"Bearer {self.cfg.api_key}"
        last_exc: Exception | None = None
        for attempt in range(self.cfg.max_retries + 1):
            try:
                with self._in_flight:
                    resp = self.session.post(
                        self.cfg.endpoint, json=payload, headers=headers, timeout=self.cfg.timeout
                    )
                if resp.status_code >= 500:
                    raise requests.RequestException(f"server error {resp.status_code}")
                resp.raise_for_status()
                content = resp.json()["choices"][0]["message"]["content"]
                break
            except (requests.RequestException, KeyError, ValueError, IndexError) as exc:
                last_exc = exc
                if attempt < self.cfg.max_retries:
                    time.sleep(self.cfg.backoff_seconds * (2 ** attempt))
        else:
            raise UpstreamError(f"LLM endpoint failed after retries: {last_exc}")
        if cache_key is not None:
            self._cache[cache_key] = content
        return content


@dataclass
class InterpretationResult:
    markdown: str
    warnings: list[str] = field(default_factory=list)


def _validate_summary(markdown: str, multi_period: bool) -> list[str]:
    missing = [h for h in REQUIRED_HEADERS if h not in markdown]
    if multi_period and WHATS_NEW_HEADER not in markdown:
        missing.append(WHATS_NEW_HEADER)
    return missing


def summarize_evolution(
    dossier: TopicDossier, client: LlmClient
) -> InterpretationResult:
    """First stage: render the evolution prompt and validate the response
    structure; one retry on a malformed response, then a warning."""
    prompt = render_evolution_prompt(dossier)
    multi = len(dossier.records) > 1
    cache_key = ("evolution", dossier.topic_id, dossier.records[-1].slice_index if dossier.records else -1)
    markdown = client.chat(prompt, cache_key=cache_key)
    missing = _validate_summary(markdown, multi)
    warnings: list[str] = []
    if missing:
        log.warning("summary missing headers %s; retrying once", missing)
        markdown = client.chat(prompt)
        missing = _validate_summary(markdown, multi)
        if missing:
            warnings.append(f"template violation: missing headers {missing}")
    return InterpretationResult(markdown=markdown, warnings=warnings)


def analyze_signal(summary: str, client: LlmClient, topic_id: int | None = None) -> InterpretationResult:
    """Second stage: in-depth analysis of the evolution summary."""
    prompt = render_analysis_prompt(summary)
    markdown = client.chat(prompt, cache_key=("analysis", topic_id, hash(summary)))
    return InterpretationResult(markdown=markdown)
