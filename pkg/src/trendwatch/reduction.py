"""Deterministic dimensionality reduction for per-slice embedding batches.

Exact PCA via SVD of the centered batch. Unlike stochastic manifold methods
this is reproducible bit-for-bit given identical input, which the trend
machinery requires: reruns of a stream must yield identical topics.
"""
from __future__ import annotations

import numpy as np


def pca_reduce(vectors: np.ndarray, r: int) -> np.ndarray:
    """Project a batch onto its top-r principal components.

    Sign convention: each component's largest-magnitude loading is forced
    positive, so the projection does not depend on SVD sign ambiguity.
    The effective dimension is min(r, n_samples, n_features); a batch of
    fewer than 2 vectors is degenerate and rejected.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected a 2-d batch, got shape {x.shape}")
    n, h = x.shape
    if n < 2:
        raise ValueError("need at least 2 vectors to reduce")
    r_eff = min(r, n, h)
    centered = x - x.mean(axis=0)
    # full_matrices=False keeps V at min(n, h) rows
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:r_eff]
    for i in range(r_eff):
        row = components[i]
        pivot = int(np.argmax(np.abs(row)))
        if row[pivot] < 0:
            components[i] = -row
    return centered @ components.T
