"""Per-slice topic extraction: reduce -> density-cluster -> label.

Cluster centroids are computed in the FULL embedding space and then
L2-normalized, never in the reduced space: reduced projections are fitted
per slice and are not comparable across slices, while the merge step must
compare topics produced by different slices.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import DocumentSlice
from .density import hdbscan_labels
from .embeddings import l2_normalize
from .keywords import ctfidf_scores, top_terms
from .reduction import pca_reduce


@dataclass(frozen=True)
class ExtractionParams:
    reduced_dim: int = 5
    n_neighbors: int = 15  # reserved for manifold reducers; unused by PCA
    min_cluster_size: int = 2
    min_samples: int = 1
    top_n_words: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.reduced_dim < 2:
            raise ValueError("reduced_dim must be >= 2")
        if self.min_cluster_size < 2:
            raise ValueError("min_cluster_size must be >= 2")


@dataclass
class Cluster:
    local_id: int
    member_unit_ids: list[str]
    centroid: np.ndarray  # unit-norm, full embedding dimension


@dataclass
class SliceTopic:
    cluster: Cluster
    words: list[tuple[str, float]]
    parent_doc_ids: set[str] = field(default_factory=set)

    @property
    def doc_count(self) -> int:
        return len(self.parent_doc_ids)


def extract(
    doc_slice: DocumentSlice,
    embeddings: dict[str, np.ndarray],
    params: ExtractionParams,
) -> list[SliceTopic]:
    """Extract labeled topics from one document slice.

    Slices with fewer units than min_cluster_size yield no topics. Outlier
    units belong to no topic and contribute to no popularity count.
    """
    units = doc_slice.units
    if len(units) < max(2, params.min_cluster_size):
        return []
    missing = [u.unit_id for u in units if u.unit_id not in embeddings]
    if missing:
        raise KeyError(f"missing embeddings for units: {missing[:5]}")

    matrix = np.stack([np.asarray(embeddings[u.unit_id], dtype=np.float64) for u in units])
    reduced = pca_reduce(matrix, params.reduced_dim)
    labels = hdbscan_labels(
        reduced, min_cluster_size=params.min_cluster_size, min_samples=params.min_samples
    )

    members: dict[int, list[int]] = {}
    for idx, label in enumerate(labels):
        if label >= 0:
            members.setdefault(int(label), []).append(idx)

    cluster_texts = {
        cid: [units[i].text for i in idxs] for cid, idxs in sorted(members.items())
    }
    scores = ctfidf_scores(cluster_texts)

    topics: list[SliceTopic] = []
    for cid, idxs in sorted(members.items()):
        centroid = l2_normalize(matrix[idxs].mean(axis=0))
        cluster = Cluster(
            local_id=cid,
            member_unit_ids=[units[i].unit_id for i in idxs],
            centroid=centroid,
        )
        words = top_terms(scores.get(cid, {}), params.top_n_words)
        parents = {units[i].parent_id for i in idxs}
        topics.append(SliceTopic(cluster=cluster, words=words, parent_doc_ids=parents))
    return topics
