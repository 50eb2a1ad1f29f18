"""Agglomerative hierarchical clustering over a distance matrix."""
from dataclasses import dataclass
from itertools import combinations
from typing import List, NamedTuple

import numpy as np

from .distance import DistanceMatrix, ensure_root
from .errors import BadK

LINKAGES = ("single", "complete", "average")


class Merge(NamedTuple):
    node_a: int
    node_b: int
    height: float
    new_node: int


@dataclass
class Dendrogram:
    """Merge tree. Leaves are nodes ``0..N-1``; merge ``s`` creates node ``N + s``."""

    merges: List[Merge]
    leaf_labels: List[str]
    linkage: str = "average"

    @property
    def n_leaves(self) -> int:
        return len(self.leaf_labels)


def _lance_williams(linkage, d_ac, d_bc, n_a, n_b):
    if linkage == "single":
        return min(d_ac, d_bc)
    if linkage == "complete":
        return max(d_ac, d_bc)
    return (n_a * d_ac + n_b * d_bc) / (n_a + n_b)


def agglomerate(d, linkage: str = "average") -> Dendrogram:
    """Lance-Williams agglomeration; ties go to the smallest ``(node_a, node_b)``."""
    if linkage not in LINKAGES:
        raise ValueError(f"unknown linkage {linkage!r}; choose from {LINKAGES}")
    if isinstance(d, DistanceMatrix):
        labels = list(d.labels)
        values = ensure_root(d).values
    else:
        values = np.asarray(d, dtype=float)
        labels = [str(i) for i in range(values.shape[0])]
    n = values.shape[0]
    if n < 2:
        raise ValueError("need at least two items to cluster")
    if values.shape != (n, n) or not np.allclose(values, values.T, atol=1e-10):
        raise ValueError("distance matrix must be square and symmetric")

    dist = np.full((2 * n - 1, 2 * n - 1), np.inf)
    dist[:n, :n] = values
    size = [1] * n + [0] * (n - 1)
    active = list(range(n))
    merges = []
    for step in range(n - 1):
        best = None
        for a, b in combinations(active, 2):
            if best is None or dist[a, b] < best[0]:
                best = (dist[a, b], a, b)
        h, a, b = best
        new = n + step
        for c in active:
            if c != a and c != b:
                dist[new, c] = dist[c, new] = _lance_williams(linkage, dist[a, c], dist[b, c], size[a], size[b])
        size[new] = size[a] + size[b]
        active.remove(a)
        active.remove(b)
        active.append(new)
        merges.append(Merge(a, b, float(h), new))
    return Dendrogram(merges, labels, linkage)


def cut(dend: Dendrogram, k: int) -> np.ndarray:
    """Flat clustering into `k` groups, numbered by first leaf index."""
    n = dend.n_leaves
    if not 1 <= k <= n:
        raise BadK(f"k must be between 1 and {n}, got {k}")
    parent = list(range(2 * n - 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for merge in dend.merges[: n - k]:
        parent[find(merge.node_a)] = merge.new_node
        parent[find(merge.node_b)] = merge.new_node
    ids = {}
    out = np.empty(n, dtype=int)
    for leaf in range(n):
        root = find(leaf)
        out[leaf] = ids.setdefault(root, len(ids))
    return out


def rand_index(a, b) -> float:
    """Fraction of item pairs on which two partitions agree."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("partitions must label the same items")
    n = a.size
    if n < 2:
        return 1.0
    iu = np.triu_indices(n, 1)
    same_a = (a[:, None] == a[None, :])[iu]
    same_b = (b[:, None] == b[None, :])[iu]
    return float(np.mean(same_a == same_b))
