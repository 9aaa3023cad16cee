"""Expert-defined topic monitoring by direct document matching.

Each monitored topic is a short textual description embedded once. Every
incoming unit whose embedding reaches the topic's (deliberately low)
similarity threshold is captured; popularity then follows the same
increment/decay/classification rules as automatic topics, except that
zero-shot series never enter the percentile pool, so operator-defined
probes cannot shift the global thresholds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .corpus import DocumentSlice
from .embeddings import cosine
from .engine import EPSILON_FLOOR, NOISE, STRONG, WEAK, EngineParams, ols_slope

DEFAULT_BETA = 0.45


@dataclass
class ZeroShotTopic:
    name: str
    description: str
    embedding: np.ndarray
    beta: float = DEFAULT_BETA
    added_at: int = 0
    last_updated: int | None = None
    values: dict[int, float] = field(default_factory=dict)
    captured: dict[int, list[str]] = field(default_factory=dict)  # slice -> parent doc ids
    captured_units: dict[int, list[str]] = field(default_factory=dict)
    archived_at: int | None = None

    @property
    def archived(self) -> bool:
        return self.archived_at is not None


class ZeroShotMonitor:
    def __init__(self, params: EngineParams):
        self.params = params
        self.topics: list[ZeroShotTopic] = []

    def add_topic(
        self,
        name: str,
        description: str,
        embedding: np.ndarray,
        beta: float = DEFAULT_BETA,
        added_at: int = 0,
    ) -> ZeroShotTopic:
        if not 0 < beta < 1:
            raise ValueError(f"beta must be in (0, 1), got {beta}")
        if any(t.name == name for t in self.topics):
            raise ValueError(f"zero-shot topic {name!r} already exists")
        topic = ZeroShotTopic(
            name=name,
            description=description,
            embedding=np.asarray(embedding, dtype=np.float64),
            beta=beta,
            added_at=added_at,
        )
        self.topics.append(topic)
        return topic

    def match_slice(
        self,
        doc_slice: DocumentSlice,
        embeddings: dict[str, np.ndarray],
        slice_index: int,
    ) -> dict[str, list[str]]:
        """Capture units per topic and update each topic's popularity.

        A unit may be captured by several topics at once; each topic counts
        distinct parent documents. Topics with no captures decay exactly
        like silent automatic topics.
        """
        captured_by_topic: dict[str, list[str]] = {}
        for topic in self.topics:
            parents: set[str] = set()
            unit_ids: list[str] = []
            for unit in doc_slice.units:
                vec = embeddings.get(unit.unit_id)
                if vec is None:
                    continue
                if cosine(topic.embedding, vec) >= topic.beta:
                    parents.add(unit.parent_id)
                    unit_ids.append(unit.unit_id)
            captured_by_topic[topic.name] = sorted(parents)
            if parents:
                topic.captured[slice_index] = sorted(parents)
                topic.captured_units[slice_index] = unit_ids
                self._apply_update(topic, slice_index, len(parents))
            else:
                self._apply_decay(topic, slice_index)
        return captured_by_topic

    def _apply_update(self, topic: ZeroShotTopic, slice_index: int, count: int) -> None:
        if topic.last_updated is None or topic.archived:
            topic.archived_at = None
            base = 0.0
        else:
            base = topic.values.get(slice_index - 1, 0.0)
        topic.values[slice_index] = base + float(count)
        topic.last_updated = slice_index

    def _apply_decay(self, topic: ZeroShotTopic, slice_index: int) -> None:
        if topic.last_updated is None or topic.archived:
            return
        previous = topic.values.get(slice_index - 1)
        if previous is None:
            return
        if self.params.decay_mode == "constant":
            dt = float(self.params.granularity_days)
        else:
            dt = float((slice_index - topic.last_updated) * self.params.granularity_days)
        value = previous * math.exp(-self.params.decay_lambda * dt * dt)
        if value < EPSILON_FLOOR:
            topic.archived_at = slice_index
        else:
            topic.values[slice_index] = value

    def classify(
        self, slice_index: int, thresholds: tuple[float, float] | None
    ) -> list[dict[str, Any]]:
        """Label each zero-shot topic with the engine's thresholds for the slice."""
        labels: list[dict[str, Any]] = []
        for topic in self.topics:
            if topic.archived:
                continue
            p = topic.values.get(slice_index)
            if p is None:
                continue
            xs: list[float] = []
            ys: list[float] = []
            for j in range(slice_index - self.params.window + 1, slice_index + 1):
                value = topic.values.get(j)
                if value is not None:
                    xs.append(float(j))
                    ys.append(value)
            slope = ols_slope(xs, ys) if len(xs) >= self.params.slope_min_points else None
            if thresholds is None:
                label = NOISE
                p10 = p50 = 0.0
            else:
                p10, p50 = thresholds
                if p < p10:
                    label = NOISE
                elif p <= p50:
                    label = WEAK if (slope is not None and slope > 0) else NOISE
                else:
                    label = STRONG
            labels.append(
                {
                    "name": topic.name,
                    "kind": "zeroshot",
                    "label": label,
                    "popularity": p,
                    "p10": p10,
                    "p50": p50,
                    "slope": slope,
                    "captured_docs": len(topic.captured.get(slice_index, [])),
                }
            )
        return labels

    # -- persistence -----------------------------------------------------------

    def to_state_dict(self) -> list[dict[str, Any]]:
        return [
            {
                "name": t.name,
                "description": t.description,
                "embedding": [float(v) for v in t.embedding],
                "beta": t.beta,
                "added_at": t.added_at,
                "last_updated": t.last_updated,
                "archived_at": t.archived_at,
                "values": {str(s): v for s, v in sorted(t.values.items())},
                "captured": {str(s): ids for s, ids in sorted(t.captured.items())},
                "captured_units": {str(s): ids for s, ids in sorted(t.captured_units.items())},
            }
            for t in self.topics
        ]

    @classmethod
    def from_state_dict(cls, state: list[dict[str, Any]], params: EngineParams) -> "ZeroShotMonitor":
        monitor = cls(params)
        for entry in state:
            topic = ZeroShotTopic(
                name=entry["name"],
                description=entry["description"],
                embedding=np.array(entry["embedding"], dtype=np.float64),
                beta=float(entry["beta"]),
                added_at=int(entry["added_at"]),
                last_updated=entry.get("last_updated"),
                archived_at=entry.get("archived_at"),
                values={int(s): float(v) for s, v in entry["values"].items()},
                captured={int(s): list(v) for s, v in entry["captured"].items()},
                captured_units={int(s): list(v) for s, v in entry.get("captured_units", {}).items()},
            )
            monitor.topics.append(topic)
        return monitor
