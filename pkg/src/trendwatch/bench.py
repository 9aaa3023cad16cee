"""Synthetic embedding streams with planted trajectories, plus scoring.

Real-corpus evaluations of weak-signal detection have no reusable ground
truth, so the benchmark plants topics with known document schedules in a
synthetic embedding space: each planted document's vector is its topic
center plus isotropic gaussian noise, re-normalized. Texts carry planted
keyword vocabularies (plus enough latin filler to clear the corpus filter)
so keyword labeling is checkable end to end. Everything derives from one
seeded generator and replays bit-exactly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError

# keeps every synthetic unit above the corpus latin-character floor
FILLER = (
    "this synthetic passage exists to provide enough latin characters "
    "so the preprocessing filter keeps the unit in the benchmark corpus"
)


@dataclass
class PlantedTopic:
    key: str
    schedule: list[int]
    spread: float = 0.0
    keywords: list[str] = field(default_factory=list)
    intended: list[str | None] = field(default_factory=list)
    # either a fresh orthogonal direction or a controlled cosine to another center
    cosine_to: tuple[str, float] | None = None


@dataclass
class ZeroShotSpec:
    name: str
    description: str
    beta: float = 0.45
    center_of: str | None = None


@dataclass
class Scenario:
    seed: int
    dim: int
    slices: int
    granularity_days: int = 1
    start: str = "2024-01-01"
    background_noise_per_slice: int = 0
    planted: list[PlantedTopic] = field(default_factory=list)
    zeroshot: list[ZeroShotSpec] = field(default_factory=list)
    # projection must be able to hold the planted centers: k centers span
    # k-1 dims after centering, so scenarios planting more than 6 need
    # a larger value than the production default of 5
    reduced_dim: int | None = None

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> "Scenario":
        known = {
            "seed", "dim", "slices", "granularity_days", "start",
            "background_noise_per_slice", "planted", "zeroshot", "reduced_dim",
        }
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
        planted = []
        for p in obj.get("planted", []):
            cosine_to = None
            if "cosine_to" in p:
                cosine_to = (p["cosine_to"]["ref"], float(p["cosine_to"]["value"]))
            planted.append(
                PlantedTopic(
                    key=p["key"],
                    schedule=[int(x) for x in p["schedule"]],
                    spread=float(p.get("spread", 0.0)),
                    keywords=list(p.get("keywords", [])),
                    intended=list(p.get("intended", [])) or [None] * len(p["schedule"]),
                    cosine_to=cosine_to,
                )
            )
        zeroshot = [
            ZeroShotSpec(
                name=z["name"],
                description=z["description"],
                beta=float(z.get("beta", 0.45)),
                center_of=z.get("center_of"),
            )
            for z in obj.get("zeroshot", [])
        ]
        scenario = cls(
            seed=int(obj["seed"]),
            dim=int(obj["dim"]),
            slices=int(obj["slices"]),
            granularity_days=int(obj.get("granularity_days", 1)),
            start=str(obj.get("start", "2024-01-01")),
            background_noise_per_slice=int(obj.get("background_noise_per_slice", 0)),
            planted=planted,
            zeroshot=zeroshot,
            reduced_dim=int(obj["reduced_dim"]) if "reduced_dim" in obj else None,
        )
        for topic in scenario.planted:
            if len(topic.schedule) != scenario.slices:
                raise ConfigError(
                    f"topic {topic.key!r}: schedule length {len(topic.schedule)} != slices {scenario.slices}"
                )
            if len(topic.intended) != scenario.slices:
                raise ConfigError(f"topic {topic.key!r}: intended length mismatch")
            if topic.spread < 0:
                raise ConfigError(f"topic {topic.key!r}: spread must be >= 0")
        return scenario

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        with Path(path).open("r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _make_centers(scenario: Scenario, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Mutually orthogonal unit centers; controlled-cosine topics are built
    from their reference center and one extra orthogonal direction."""
    free = [t for t in scenario.planted if t.cosine_to is None]
    tied = [t for t in scenario.planted if t.cosine_to is not None]
    n_directions = len(free) + len(tied)
    if n_directions > scenario.dim:
        raise ConfigError("more planted topics than embedding dimensions")
    basis, _ = np.linalg.qr(rng.normal(size=(scenario.dim, n_directions)))
    centers: dict[str, np.ndarray] = {}
    for i, topic in enumerate(free):
        centers[topic.key] = basis[:, i].copy()
    for j, topic in enumerate(tied):
        ref_key, c = topic.cosine_to
        if ref_key not in centers:
            raise ConfigError(f"topic {topic.key!r} references unknown center {ref_key!r}")
        ortho = basis[:, len(free) + j]
        vec = c * centers[ref_key] + np.sqrt(max(0.0, 1.0 - c * c)) * ortho
        centers[topic.key] = vec / np.linalg.norm(vec)
    return centers


def _doc_text(keywords: list[str], rng: np.random.Generator) -> str:
    if keywords:
        picks = [keywords[int(rng.integers(0, len(keywords)))] for _ in range(6)]
        return " ".join(picks) + ". " + FILLER
    return FILLER


@dataclass
class GeneratedStream:
    corpus_path: Path
    embeddings_path: Path
    truth_path: Path
    n_documents: int


def generate(scenario: Scenario, out_dir: str | Path) -> GeneratedStream:
    """Write corpus.jsonl, embeddings.jsonl and truth.json for a scenario."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(scenario.seed)
    centers = _make_centers(scenario, rng)
    start = datetime.fromisoformat(scenario.start).replace(tzinfo=timezone.utc)
    step = timedelta(days=scenario.granularity_days)

    corpus_path = out / "corpus.jsonl"
    embeddings_path = out / "embeddings.jsonl"
    truth_path = out / "truth.json"
    doc_ids_by_topic: dict[str, dict[int, list[str]]] = {t.key: {} for t in scenario.planted}
    n_documents = 0

    noise_vocab = [f"filler{i}" for i in range(40)]

    with corpus_path.open("w", encoding="utf-8") as corpus_fh, embeddings_path.open(
        "w", encoding="utf-8"
    ) as emb_fh:
        for s in range(scenario.slices):
            slice_start = start + s * step
            counter = 0
            for topic in scenario.planted:
                slice_docs: list[str] = []
                for i in range(topic.schedule[s]):
                    doc_id = f"{topic.key}-s{s:03d}-{i:03d}"
                    vec = centers[topic.key]
                    if topic.spread > 0:
                        vec = vec + topic.spread * rng.normal(size=scenario.dim)
                    vec = vec / np.linalg.norm(vec)
                    ts = slice_start + timedelta(seconds=counter)
                    counter += 1
                    record = {
                        "id": doc_id,
                        "timestamp": ts.isoformat(),
                        "text": _doc_text(topic.keywords, rng),
                        "source": "synthetic",
                    }
                    corpus_fh.write(json.dumps(record) + "\n")
                    emb_fh.write(
                        json.dumps({"id": f"{doc_id}:0", "vector": [float(v) for v in vec]}) + "\n"
                    )
                    slice_docs.append(doc_id)
                    n_documents += 1
                if slice_docs:
                    doc_ids_by_topic[topic.key][s] = slice_docs
            for i in range(scenario.background_noise_per_slice):
                doc_id = f"noise-s{s:03d}-{i:03d}"
                vec = rng.normal(size=scenario.dim)
                vec = vec / np.linalg.norm(vec)
                ts = slice_start + timedelta(seconds=counter)
                counter += 1
                record = {
                    "id": doc_id,
                    "timestamp": ts.isoformat(),
                    "text": _doc_text(noise_vocab, rng),
                    "source": "synthetic-noise",
                }
                corpus_fh.write(json.dumps(record) + "\n")
                emb_fh.write(
                    json.dumps({"id": f"{doc_id}:0", "vector": [float(v) for v in vec]}) + "\n"
                )
                n_documents += 1
        for spec in scenario.zeroshot:
            if spec.center_of is not None:
                vec = centers[spec.center_of]
            else:
                vec = rng.normal(size=scenario.dim)
                vec = vec / np.linalg.norm(vec)
            emb_fh.write(
                json.dumps(
                    {"id": f"zeroshot:{spec.name}", "vector": [float(v) for v in vec]}
                )
                + "\n"
            )

    truth = {
        "version": 1,
        "slices": scenario.slices,
        "topics": {
            t.key: {
                "schedule": t.schedule,
                "intended": t.intended,
                "doc_ids_by_slice": {str(s): ids for s, ids in doc_ids_by_topic[t.key].items()},
            }
            for t in scenario.planted
        },
    }
    with truth_path.open("w", encoding="utf-8") as fh:
        json.dump(truth, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return GeneratedStream(corpus_path, embeddings_path, truth_path, n_documents)


def pipeline_config(scenario: Scenario, stream: GeneratedStream, out_base: Path):
    """RunConfig that replays a generated stream through the pipeline."""
    from datetime import timedelta

    from .config import parse_config
    from .corpus import parse_timestamp

    end = parse_timestamp(scenario.start) + timedelta(
        days=scenario.granularity_days * scenario.slices
    )
    raw: dict[str, Any] = {
        "run": {"out_dir": "run"},
        "corpus": {
            # absolute: parse_config anchors relative paths at out_base
            "input": str(stream.corpus_path.resolve()),
            "granularity_days": scenario.granularity_days,
            "start": scenario.start,
            "end": end.isoformat(),
        },
        "embeddings": {
            "provider": "precomputed-file",
            "location": str(stream.embeddings_path.resolve()),
            "expected_dim": scenario.dim,
        },
        "zeroshot": [
            {"name": z.name, "description": z.description, "beta": z.beta}
            for z in scenario.zeroshot
        ],
    }
    if scenario.reduced_dim is not None:
        raw["extraction"] = {"reduced_dim": scenario.reduced_dim}
    return parse_config(raw, base_dir=Path(out_base))


# -- scoring ---------------------------------------------------------------


def _match_topics(truth: dict[str, Any], engine_state: dict[str, Any]) -> dict[str, int | None]:
    """Planted key -> engine topic id, by total parent-document overlap."""
    mapping: dict[str, int | None] = {}
    for key, info in truth["topics"].items():
        planted_docs = {s: set(ids) for s, ids in info["doc_ids_by_slice"].items()}
        best_id: int | None = None
        best_overlap = 0
        for topic in engine_state["topics"]:
            overlap = 0
            for s, ids in topic["parent_doc_ids_by_slice"].items():
                overlap += len(planted_docs.get(s, set()) & set(ids))
            if overlap > best_overlap:
                best_overlap = overlap
                best_id = topic["topic_id"]
        mapping[key] = best_id
    return mapping


def score(
    truth: dict[str, Any],
    engine_state: dict[str, Any],
    reports: list[dict[str, Any]],
) -> dict[str, Any]:
    """Compare engine labels against planted intent.

    Per planted topic: the engine label sequence of its best-matching
    global topic, the first weak and strong slices, and the detection lead
    (slices between the first weak and the first strong label). Aggregates:
    per-class label accuracy over slices with declared intent, and the
    false-weak rate among weak labels on planted topics.
    """
    mapping = _match_topics(truth, engine_state)
    labels_by_slice: dict[int, dict[int, str]] = {}
    for report in reports:
        labels_by_slice[report["slice_index"]] = {
            lab["topic_id"]: lab["label"] for lab in report["labels"]
        }

    per_topic: dict[str, Any] = {}
    class_hits = {"noise": 0, "weak": 0, "strong": 0}
    class_totals = {"noise": 0, "weak": 0, "strong": 0}
    weak_labels = 0
    false_weak = 0

    for key, info in truth["topics"].items():
        topic_id = mapping[key]
        sequence: list[str | None] = []
        for s in range(truth["slices"]):
            label = labels_by_slice.get(s, {}).get(topic_id) if topic_id is not None else None
            sequence.append(label)
        first_weak = next((s for s, l in enumerate(sequence) if l == "weak"), None)
        first_strong = next((s for s, l in enumerate(sequence) if l == "strong"), None)
        lead = (
            first_strong - first_weak
            if first_weak is not None and first_strong is not None
            else None
        )
        for s, intended in enumerate(info["intended"]):
            label = sequence[s]
            if intended is not None and label is not None:
                class_totals[intended] += 1
                if label == intended:
                    class_hits[intended] += 1
            if label == "weak" and intended is not None:
                weak_labels += 1
                if intended != "weak":
                    false_weak += 1
        per_topic[key] = {
            "matched_topic_id": topic_id,
            "label_sequence": sequence,
            "first_weak": first_weak,
            "first_strong": first_strong,
            "detection_lead": lead,
        }

    accuracy = {
        cls: (class_hits[cls] / class_totals[cls]) if class_totals[cls] else None
        for cls in class_totals
    }
    return {
        "version": 1,
        "per_topic": per_topic,
        "label_accuracy": accuracy,
        "false_weak_rate": (false_weak / weak_labels) if weak_labels else 0.0,
    }
