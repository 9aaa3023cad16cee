"""Cumulative topic set, popularity dynamics and signal classification.

This is the heart of the system. Per slice, in order:

1. merge: each incoming topic either attaches to the most similar existing
   topic (cosine against frozen first-occurrence anchors, threshold alpha)
   or founds a new one; popularity increments by the incoming topic's
   source-document count.
2. decay: topics that received no update are damped by exp(-lambda * dt^2)
   where dt is the days since their last update, so consecutive silent
   slices compound with a growing exponent.
3. thresholds: the 10th and 50th percentiles of all popularity values
   pooled over a rolling window of W slices.
4. classify: below P10 -> noise; between P10 and P50 (inclusive) -> weak
   when the windowed regression slope is positive, else noise; above
   P50 -> strong.

The engine is a single-writer state machine; step() calls must be strictly
ordered. State is plain data and snapshots round-trip through JSON exactly.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .corpus import DocumentSlice
from .embeddings import cosine
from .errors import DataError
from .extraction import SliceTopic

log = logging.getLogger(__name__)

NOISE = "noise"
WEAK = "weak"
STRONG = "strong"

# Popularity below this is treated as gone: the topic is archived, stops
# receiving series values and is no longer classified. Bounds memory; the
# anchor stays matchable so a later merge can revive the topic.
EPSILON_FLOOR = 1e-6


@dataclass(frozen=True)
class EngineParams:
    merge_threshold: float = 0.7
    decay_lambda: float = 0.01
    window: int = 5
    granularity_days: int = 1
    slope_min_points: int = 3
    # "growing": dt spans the full gap since the last update (compounding);
    # "constant": dt is one granularity step regardless of silence length.
    decay_mode: str = "growing"
    excerpts_per_slice: int = 3
    excerpt_max_chars: int = 300

    def __post_init__(self) -> None:
        if self.decay_lambda <= 0:
            raise ValueError("decay_lambda must be positive")
        if self.window < 2:
            raise ValueError("window must be >= 2")
        if self.decay_mode not in ("growing", "constant"):
            raise ValueError(f"unknown decay_mode {self.decay_mode!r}")


@dataclass
class GlobalTopic:
    """One entry of the cumulative topic set."""

    topic_id: int
    anchor: np.ndarray  # frozen at first occurrence; never mutated
    first_seen: int
    last_updated: int
    word_history: list[tuple[int, list[tuple[str, float]]]] = field(default_factory=list)
    parent_doc_ids_by_slice: dict[int, list[str]] = field(default_factory=dict)
    values: dict[int, float] = field(default_factory=dict)  # slice -> popularity
    archived_at: int | None = None
    excerpts: dict[int, list[dict[str, Any]]] = field(default_factory=dict)

    def latest_words(self, up_to: int) -> list[tuple[str, float]]:
        words: list[tuple[str, float]] = []
        for slice_index, entry in self.word_history:
            if slice_index > up_to:
                break
            words = entry
        return words

    @property
    def archived(self) -> bool:
        return self.archived_at is not None


@dataclass
class MergeEvent:
    incoming_local_id: int
    action: str  # "merged" | "created"
    topic_id: int
    similarity: float
    doc_count: int


@dataclass
class SignalLabel:
    topic_id: int
    slice_index: int
    label: str
    popularity: float
    p10: float
    p50: float
    slope: float | None


def percentile_thresholds(values: list[float]) -> tuple[float, float]:
    """P10 and P50 as order statistics: sorted[floor(q * n)], 0-based, clamped."""
    if not values:
        raise ValueError("empty pool")
    ordered = sorted(values)
    n = len(ordered)
    i10 = min(int(math.floor(0.1 * n)), n - 1)
    i50 = min(int(math.floor(0.5 * n)), n - 1)
    return ordered[i10], ordered[i50]


def ols_slope(xs: list[float], ys: list[float]) -> float:
    """Least-squares slope; exact for perfectly linear integer-grid input."""
    n = len(xs)
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    num = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    den = sum((x - mean_x) ** 2 for x in xs)
    if den == 0.0:
        return 0.0
    return num / den


class TrendEngine:
    """Single-writer engine maintaining the cumulative topic set."""

    def __init__(self, params: EngineParams):
        self.params = params
        self.topics: list[GlobalTopic] = []
        self.current_slice: int = -1

    # -- merge ---------------------------------------------------------------

    def merge_slice(
        self, slice_topics: list[SliceTopic], slice_index: int
    ) -> list[MergeEvent]:
        """Attach or create a global topic for every incoming slice topic.

        Incoming topics are processed in local-id order and compare against
        every anchor, including topics created earlier in this same slice,
        so duplicates within a slice accumulate onto one topic. Argmax ties
        break toward the lowest topic id.
        """
        events: list[MergeEvent] = []
        for incoming in sorted(slice_topics, key=lambda t: t.cluster.local_id):
            centroid = incoming.cluster.centroid
            best_sim = -math.inf
            best_topic: GlobalTopic | None = None
            for topic in self.topics:
                if topic.anchor.shape != centroid.shape:
                    raise DataError(
                        f"anchor dim {topic.anchor.shape} != centroid dim {centroid.shape}"
                    )
                sim = cosine(topic.anchor, centroid)
                if sim > best_sim:
                    best_sim = sim
                    best_topic = topic
            count = incoming.doc_count
            if best_topic is not None and best_sim >= self.params.merge_threshold:
                self._apply_update(best_topic, incoming, slice_index, count)
                events.append(
                    MergeEvent(incoming.cluster.local_id, "merged", best_topic.topic_id, best_sim, count)
                )
            else:
                topic = self._create_topic(incoming, slice_index, count)
                events.append(
                    MergeEvent(incoming.cluster.local_id, "created", topic.topic_id, best_sim, count)
                )
        return events

    def _create_topic(self, incoming: SliceTopic, slice_index: int, count: int) -> GlobalTopic:
        anchor = np.array(incoming.cluster.centroid, dtype=np.float64, copy=True)
        anchor.setflags(write=False)
        topic = GlobalTopic(
            topic_id=len(self.topics),
            anchor=anchor,
            first_seen=slice_index,
            last_updated=slice_index,
        )
        topic.values[slice_index] = float(count)
        topic.word_history.append((slice_index, list(incoming.words)))
        topic.parent_doc_ids_by_slice[slice_index] = sorted(incoming.parent_doc_ids)
        self.topics.append(topic)
        return topic

    def _apply_update(
        self, topic: GlobalTopic, incoming: SliceTopic, slice_index: int, count: int
    ) -> None:
        if topic.archived:
            # revival: the decayed remnant was below the floor, restart from 0
            topic.archived_at = None
            base = topic.values.get(slice_index, 0.0)
        elif slice_index in topic.values:
            base = topic.values[slice_index]  # second merge within this slice
        else:
            base = topic.values.get(slice_index - 1, 0.0)
        topic.values[slice_index] = base + float(count)
        topic.last_updated = slice_index
        topic.word_history.append((slice_index, list(incoming.words)))
        merged_parents = set(topic.parent_doc_ids_by_slice.get(slice_index, []))
        merged_parents.update(incoming.parent_doc_ids)
        topic.parent_doc_ids_by_slice[slice_index] = sorted(merged_parents)

    # -- decay ---------------------------------------------------------------

    def decay_factor(self, gap_slices: int) -> float:
        if self.params.decay_mode == "constant":
            dt = float(self.params.granularity_days)
        else:
            dt = float(gap_slices * self.params.granularity_days)
        return math.exp(-self.params.decay_lambda * dt * dt)

    def apply_decay(self, slice_index: int) -> None:
        """Damp every topic that was not updated in this slice.

        dt is measured from the last update, so each further silent slice
        multiplies by a factor with a larger exponent. Topics falling below
        EPSILON_FLOOR are archived: no value is recorded and they drop out
        of classification until a merge revives them.
        """
        for topic in self.topics:
            if topic.archived or topic.last_updated == slice_index:
                continue
            previous = topic.values.get(slice_index - 1)
            if previous is None:
                continue
            gap = slice_index - topic.last_updated
            value = previous * self.decay_factor(gap)
            if value < EPSILON_FLOOR:
                topic.archived_at = slice_index
            else:
                topic.values[slice_index] = value

    # -- thresholds and classification ----------------------------------------

    def window_range(self, slice_index: int) -> range:
        return range(slice_index - self.params.window + 1, slice_index + 1)

    def pooled_values(self, slice_index: int) -> list[float]:
        pool: list[float] = []
        window = self.window_range(slice_index)
        for topic in self.topics:
            for j in window:
                value = topic.values.get(j)
                if value is not None:
                    pool.append(value)
        return pool

    def compute_thresholds(self, slice_index: int) -> tuple[float, float] | None:
        pool = self.pooled_values(slice_index)
        if not pool:
            return None
        return percentile_thresholds(pool)

    def topic_slope(self, topic: GlobalTopic, slice_index: int) -> float | None:
        xs: list[float] = []
        ys: list[float] = []
        for j in self.window_range(slice_index):
            value = topic.values.get(j)
            if value is not None:
                xs.append(float(j))
                ys.append(value)
        if len(xs) < self.params.slope_min_points:
            return None
        return ols_slope(xs, ys)

    def classify(
        self, slice_index: int, thresholds: tuple[float, float] | None
    ) -> list[SignalLabel]:
        labels: list[SignalLabel] = []
        for topic in self.topics:
            if topic.archived:
                continue
            p = topic.values.get(slice_index)
            if p is None:
                continue
            slope = self.topic_slope(topic, slice_index)
            if thresholds is None:
                # empty pool fallback: nothing to compare against
                labels.append(SignalLabel(topic.topic_id, slice_index, NOISE, p, 0.0, 0.0, slope))
                continue
            p10, p50 = thresholds
            if p < p10:
                label = NOISE
            elif p <= p50:
                label = WEAK if (slope is not None and slope > 0) else NOISE
            else:
                label = STRONG
            labels.append(SignalLabel(topic.topic_id, slice_index, label, p, p10, p50, slope))
        return labels

    # -- excerpts ---------------------------------------------------------------

    def _capture_excerpts(
        self,
        events: list[MergeEvent],
        slice_topics: list[SliceTopic],
        doc_slice: DocumentSlice,
        embeddings: dict[str, np.ndarray],
        slice_index: int,
    ) -> None:
        """Keep the most anchor-similar unit texts for updated topics, for
        later report generation. Ties break by parent then unit id."""
        if self.params.excerpts_per_slice <= 0:
            return
        units_by_id = {u.unit_id: u for u in doc_slice.units}
        by_local = {t.cluster.local_id: t for t in slice_topics}
        for event in events:
            incoming = by_local[event.incoming_local_id]
            topic = self.topics[event.topic_id]
            ranked = []
            for unit_id in incoming.cluster.member_unit_ids:
                unit = units_by_id.get(unit_id)
                vec = embeddings.get(unit_id)
                if unit is None or vec is None:
                    continue
                sim = cosine(topic.anchor, vec)
                ranked.append((-sim, unit.parent_id, unit_id, unit.text))
            ranked.sort()
            existing = topic.excerpts.setdefault(slice_index, [])
            for neg_sim, parent_id, unit_id, text in ranked:
                if len(existing) >= self.params.excerpts_per_slice:
                    break
                existing.append(
                    {
                        "unit_id": unit_id,
                        "parent_id": parent_id,
                        "similarity": -neg_sim,
                        "text": text[: self.params.excerpt_max_chars],
                    }
                )

    # -- the outer loop ----------------------------------------------------------

    def step(
        self,
        doc_slice: DocumentSlice,
        slice_topics: list[SliceTopic],
        embeddings: dict[str, np.ndarray] | None = None,
    ) -> dict[str, Any]:
        """Process one slice: merge, decay, thresholds, classify.

        Returns the slice report as a JSON-ready dict. Slices must arrive
        in strictly increasing order with no gaps.
        """
        slice_index = doc_slice.slice_index
        if slice_index != self.current_slice + 1:
            raise DataError(
                f"out-of-order slice {slice_index}; expected {self.current_slice + 1}"
            )
        events = self.merge_slice(slice_topics, slice_index)
        if embeddings is not None:
            self._capture_excerpts(events, slice_topics, doc_slice, embeddings, slice_index)
        self.apply_decay(slice_index)
        thresholds = self.compute_thresholds(slice_index)
        if thresholds is None:
            log.warning("slice %d: empty popularity pool, falling back to all-noise", slice_index)
        labels = self.classify(slice_index, thresholds)
        self.current_slice = slice_index

        report = {
            "version": 1,
            "slice_index": slice_index,
            "start": doc_slice.start.isoformat(),
            "end": doc_slice.end.isoformat(),
            "n_units": len(doc_slice.units),
            "topics_extracted": len(slice_topics),
            "merge_events": [
                {
                    "incoming_local_id": e.incoming_local_id,
                    "action": e.action,
                    "topic_id": e.topic_id,
                    "similarity": e.similarity,
                    "doc_count": e.doc_count,
                }
                for e in events
            ],
            "thresholds": {
                "p10": thresholds[0] if thresholds else None,
                "p50": thresholds[1] if thresholds else None,
                "pool_size": len(self.pooled_values(slice_index)),
            },
            "labels": [
                {
                    "topic_id": lab.topic_id,
                    "kind": "automatic",
                    "label": lab.label,
                    "popularity": lab.popularity,
                    "p10": lab.p10,
                    "p50": lab.p50,
                    "slope": lab.slope,
                    "top_words": [w for w, _ in self.topics[lab.topic_id].latest_words(slice_index)],
                }
                for lab in labels
            ],
            "archived": sorted(
                t.topic_id for t in self.topics if t.archived_at == slice_index
            ),
        }
        return report

    # -- persistence ----------------------------------------------------------

    def to_state_dict(self) -> dict[str, Any]:
        return {
            "current_slice": self.current_slice,
            "topics": [
                {
                    "topic_id": t.topic_id,
                    "anchor": [float(v) for v in t.anchor],
                    "first_seen": t.first_seen,
                    "last_updated": t.last_updated,
                    "archived_at": t.archived_at,
                    "word_history": [
                        [s, [[w, float(sc)] for w, sc in words]] for s, words in t.word_history
                    ],
                    "parent_doc_ids_by_slice": {
                        str(s): ids for s, ids in sorted(t.parent_doc_ids_by_slice.items())
                    },
                    "values": {str(s): v for s, v in sorted(t.values.items())},
                    "excerpts": {str(s): ex for s, ex in sorted(t.excerpts.items())},
                }
                for t in self.topics
            ],
        }

    @classmethod
    def from_state_dict(cls, state: dict[str, Any], params: EngineParams) -> "TrendEngine":
        engine = cls(params)
        engine.current_slice = int(state["current_slice"])
        for entry in state["topics"]:
            anchor = np.array(entry["anchor"], dtype=np.float64)
            anchor.setflags(write=False)
            topic = GlobalTopic(
                topic_id=int(entry["topic_id"]),
                anchor=anchor,
                first_seen=int(entry["first_seen"]),
                last_updated=int(entry["last_updated"]),
                archived_at=entry.get("archived_at"),
                word_history=[
                    (int(s), [(w, float(sc)) for w, sc in words])
                    for s, words in entry["word_history"]
                ],
                parent_doc_ids_by_slice={
                    int(s): list(ids) for s, ids in entry["parent_doc_ids_by_slice"].items()
                },
                values={int(s): float(v) for s, v in entry["values"].items()},
                excerpts={int(s): list(ex) for s, ex in entry.get("excerpts", {}).items()},
            )
            engine.topics.append(topic)
        return engine
