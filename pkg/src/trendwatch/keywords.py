"""Class-based TF-IDF keyword scoring for cluster labeling.

Terms are lowercased unigrams and bigrams with stopwords removed. For a
term w and cluster c:

    score(w, c) = tf(w, c) * log(1 + A / f_w)

where tf(w, c) counts occurrences of w in the cluster's concatenated
texts, f_w is the number of clusters in the slice whose texts contain w,
and A is the average term count per cluster. Within a single cluster the
idf factor therefore depends only on how widely a term is shared across
clusters, so ratios between same-cluster terms reduce to tf ratios when
their spread is equal.
"""
from __future__ import annotations

import math
import re
from collections import Counter

from .stopwords import STOPWORDS

_TOKEN_RE = re.compile(r"[a-z0-9]{2,}")


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens of length >= 2, stopwords removed."""
    return [t for t in _TOKEN_RE.findall(text.lower()) if t not in STOPWORDS]


def terms_of(text: str) -> list[str]:
    """Unigrams plus adjacent bigrams over the filtered token stream."""
    tokens = tokenize(text)
    bigrams = [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]
    return tokens + bigrams


def ctfidf_scores(cluster_texts: dict[int, list[str]]) -> dict[int, dict[str, float]]:
    """Score every term of every cluster; clusters keyed by local id."""
    term_counts: dict[int, Counter] = {}
    for cid, texts in cluster_texts.items():
        counts: Counter = Counter()
        for text in texts:
            counts.update(terms_of(text))
        term_counts[cid] = counts

    n_clusters = len(term_counts)
    if n_clusters == 0:
        return {}
    total_terms = sum(sum(c.values()) for c in term_counts.values())
    avg_terms = total_terms / n_clusters

    cluster_frequency: Counter = Counter()
    for counts in term_counts.values():
        cluster_frequency.update(counts.keys())

    scores: dict[int, dict[str, float]] = {}
    for cid, counts in term_counts.items():
        scores[cid] = {
            term: tf * math.log(1.0 + avg_terms / cluster_frequency[term])
            for term, tf in counts.items()
        }
    return scores


def top_terms(scores: dict[str, float], top_n: int) -> list[tuple[str, float]]:
    """Highest-scoring terms; ties broken lexicographically."""
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:top_n]
