"""Density-based clustering (HDBSCAN) implemented from first principles.

Pipeline: pairwise distances -> core distances -> mutual reachability ->
minimum spanning tree (Prim) -> single-linkage dendrogram -> condensed tree
under a minimum cluster size -> stability-based flat extraction
(excess of mass).

Deviations from the reference library worth knowing about:
- the root of the condensed tree is a selectable candidate, so a slice whose
  points form a single dense blob yields one cluster instead of all-noise;
- every point attached below a selected cluster belongs to it (membership is
  not re-thresholded by lambda);
- zero distances map to a large finite lambda instead of infinity so
  stability arithmetic stays NaN-free when points coincide.

Everything is deterministic: ties in the MST and edge ordering resolve by
lowest index.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

# Lambda assigned to zero-distance merges; also caps 1/d for denormal d.
ZERO_DISTANCE_LAMBDA = 1e12


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    x = np.asarray(points, dtype=np.float64)
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    dist = np.sqrt(d2)
    np.fill_diagonal(dist, 0.0)
    return dist


def core_distances(dist: np.ndarray, min_samples: int) -> np.ndarray:
    """Distance to the min_samples-th nearest other point."""
    n = dist.shape[0]
    if min_samples >= n:
        raise ValueError(f"min_samples={min_samples} requires more than {min_samples} points")
    # row-wise k-th order statistic; the 0th is the self distance (0)
    return np.partition(dist, min_samples, axis=1)[:, min_samples]


def mutual_reachability(dist: np.ndarray, core: np.ndarray) -> np.ndarray:
    mr = np.maximum(dist, core[:, None])
    np.maximum(mr, core[None, :], out=mr)
    np.fill_diagonal(mr, 0.0)
    return mr


def _prim_mst(weights: np.ndarray) -> list[tuple[int, int, float]]:
    """Minimum spanning tree of a dense weighted graph; O(n^2)."""
    n = weights.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    best = weights[0].copy()
    best_src = np.zeros(n, dtype=np.int64)
    in_tree[0] = True
    best[0] = np.inf
    edges: list[tuple[int, int, float]] = []
    for _ in range(n - 1):
        masked = np.where(in_tree, np.inf, best)
        nxt = int(np.argmin(masked))
        edges.append((int(best_src[nxt]), nxt, float(best[nxt])))
        in_tree[nxt] = True
        best[nxt] = np.inf
        improved = (weights[nxt] < best) & ~in_tree
        best[improved] = weights[nxt][improved]
        best_src[improved] = nxt
    return edges


def _single_linkage(edges: list[tuple[int, int, float]], n: int) -> list[tuple[int, int, float]]:
    """Build dendrogram merges from MST edges sorted ascending.

    Returns merges as (left_node, right_node, distance); merge k creates
    dendrogram node n + k, so children always carry smaller ids than their
    parent.
    """
    order = sorted(range(len(edges)), key=lambda i: (edges[i][2], edges[i][0], edges[i][1]))
    parent = list(range(2 * n - 1))

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    merges: list[tuple[int, int, float]] = []
    next_node = n
    for i in order:
        a, b, w = edges[i]
        ra, rb = find(a), find(b)
        merges.append((ra, rb, w))
        parent[ra] = next_node
        parent[rb] = next_node
        next_node += 1
    return merges


def _lambda_of(distance: float) -> float:
    if distance <= 0.0:
        return ZERO_DISTANCE_LAMBDA
    return min(1.0 / distance, ZERO_DISTANCE_LAMBDA)


@dataclass
class CondensedTree:
    """Edge list of the condensed hierarchy.

    Children with id < n_points are points; larger ids are clusters. The
    root cluster has id n_points.
    """

    n_points: int
    edges: list[tuple[int, int, float, int]]  # (parent, child, lambda, size)

    def cluster_ids(self) -> list[int]:
        ids = {self.n_points}
        for _, child, _, _ in self.edges:
            if child >= self.n_points:
                ids.add(child)
        return sorted(ids)


def condense_dendrogram(
    merges: list[tuple[int, int, float]], n: int, min_cluster_size: int
) -> CondensedTree:
    """Collapse the dendrogram: splits that shed fewer than min_cluster_size
    points are not splits, just points falling out of the surviving cluster."""
    n_nodes = n + len(merges)
    root = n_nodes - 1
    children: dict[int, tuple[int, int, float]] = {}
    sizes = np.ones(n_nodes, dtype=np.int64)
    for k, (left, right, dist) in enumerate(merges):
        node = n + k
        children[node] = (left, right, _lambda_of(dist))
        sizes[node] = sizes[left] + sizes[right]

    def leaves_of(node: int) -> list[int]:
        out: list[int] = []
        stack = [node]
        while stack:
            x = stack.pop()
            if x < n:
                out.append(x)
            else:
                l, r, _ = children[x]
                stack.append(l)
                stack.append(r)
        return sorted(out)

    def mark_ignored(node: int, ignore: np.ndarray) -> None:
        stack = [node]
        while stack:
            x = stack.pop()
            if x >= n:
                ignore[x] = True
                l, r, _ = children[x]
                stack.append(l)
                stack.append(r)

    edges: list[tuple[int, int, float, int]] = []
    relabel: dict[int, int] = {root: n}
    next_cluster = n + 1
    ignore = np.zeros(n_nodes, dtype=bool)

    for node in range(root, n - 1, -1):
        if ignore[node]:
            continue
        cluster = relabel[node]
        left, right, lam = children[node]
        left_big = sizes[left] >= min_cluster_size
        right_big = sizes[right] >= min_cluster_size
        if left_big and right_big:
            for child in (left, right):
                relabel[child] = next_cluster
                edges.append((cluster, next_cluster, lam, int(sizes[child])))
                next_cluster += 1
        elif not left_big and not right_big:
            for side in (left, right):
                for leaf in leaves_of(side):
                    edges.append((cluster, leaf, lam, 1))
                mark_ignored(side, ignore)
        else:
            keep, shed = (left, right) if left_big else (right, left)
            relabel[keep] = cluster
            for leaf in leaves_of(shed):
                edges.append((cluster, leaf, lam, 1))
            mark_ignored(shed, ignore)

    return CondensedTree(n_points=n, edges=edges)


def cluster_stabilities(tree: CondensedTree) -> dict[int, float]:
    """stability(C) = sum over departures from C of (lambda_leave - lambda_birth)."""
    n = tree.n_points
    birth: dict[int, float] = {n: 0.0}
    for _, child, lam, _ in tree.edges:
        if child >= n:
            birth[child] = lam
    stability = {c: 0.0 for c in birth}
    for parent, _, lam, size in tree.edges:
        stability[parent] += (lam - birth[parent]) * size
    return stability


def select_clusters_eom(tree: CondensedTree) -> list[int]:
    """Excess-of-mass selection over the condensed tree, root included.

    Bottom-up: a cluster survives when its own stability meets or exceeds
    the combined stability of its selected descendants.
    """
    stability = cluster_stabilities(tree)
    n = tree.n_points
    child_clusters: dict[int, list[int]] = defaultdict(list)
    for parent, child, _, _ in tree.edges:
        if child >= n:
            child_clusters[parent].append(child)

    ids = sorted(stability)
    selected = {c: True for c in ids}
    subtree_stability: dict[int, float] = {}
    for c in reversed(ids):
        kids = child_clusters.get(c, [])
        child_sum = sum(subtree_stability[k] for k in kids)
        if kids and child_sum > stability[c]:
            selected[c] = False
            subtree_stability[c] = child_sum
        else:
            subtree_stability[c] = stability[c]
            stack = list(kids)
            while stack:
                d = stack.pop()
                selected[d] = False
                stack.extend(child_clusters.get(d, []))
    return [c for c in ids if selected[c]]


def _flat_labels(tree: CondensedTree, selected_ids: list[int]) -> np.ndarray:
    n = tree.n_points
    point_owner: dict[int, int] = {}
    parent_of: dict[int, int] = {}
    for parent, child, _, _ in tree.edges:
        if child < n:
            point_owner[child] = parent
        else:
            parent_of[child] = parent
    selected = set(selected_ids)
    raw = np.full(n, -1, dtype=np.int64)
    for point in range(n):
        c: int | None = point_owner.get(point)
        while c is not None:
            if c in selected:
                raw[point] = c
                break
            c = parent_of.get(c)
    # stable local ids: order selected clusters by their smallest member
    first_member: dict[int, int] = {}
    for point in range(n):
        c = int(raw[point])
        if c != -1 and c not in first_member:
            first_member[c] = point
    ordering = sorted(first_member, key=lambda c: first_member[c])
    remap = {c: i for i, c in enumerate(ordering)}
    labels = np.full(n, -1, dtype=np.int64)
    for point in range(n):
        if raw[point] != -1:
            labels[point] = remap[int(raw[point])]
    return labels


def hdbscan_labels(
    points: np.ndarray, min_cluster_size: int = 2, min_samples: int = 1
) -> np.ndarray:
    """Flat cluster labels for a point batch; -1 marks outliers."""
    x = np.asarray(points, dtype=np.float64)
    n = x.shape[0]
    if min_cluster_size < 2:
        raise ValueError("min_cluster_size must be >= 2")
    if n < min_cluster_size:
        raise ValueError(f"need at least {min_cluster_size} points, got {n}")
    dist = pairwise_distances(x)
    core = core_distances(dist, min_samples)
    mr = mutual_reachability(dist, core)
    mst = _prim_mst(mr)
    merges = _single_linkage(mst, n)
    tree = condense_dendrogram(merges, n, min_cluster_size)
    selected = select_clusters_eom(tree)
    return _flat_labels(tree, selected)
