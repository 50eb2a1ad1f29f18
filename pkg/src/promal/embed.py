"""Multidimensional scaling of distance matrices.

Classical (Torgerson) scaling provides the starting configuration; metric
SMACOF with unit weights then minimises raw stress through Guttman
transforms. Stress-1 here is ``sqrt(Σ (δ - d)² / Σ δ²)`` over ``i < j``.
"""
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .distance import DistanceMatrix, ensure_root
from .errors import NonConvergenceWarning, NonEuclideanWarning, NotEnoughDimensions, ZeroDenominator

STRESS_THRESHOLD = 0.05


@dataclass
class Embedding:
    labels: List[str]
    coords: np.ndarray
    stress1: float
    engine: str
    iterations: int = 0
    converged: bool = True
    history: List[float] = field(default_factory=list)

    @property
    def dims(self) -> int:
        return self.coords.shape[1]


def _dissimilarities(d: Union[DistanceMatrix, np.ndarray]) -> np.ndarray:
    if isinstance(d, DistanceMatrix):
        return ensure_root(d).values
    return np.asarray(d, dtype=float)


def _check_dims(n, k):
    if k < 1:
        raise NotEnoughDimensions(f"need at least one dimension, got {k}")
    if k > n - 1:
        raise NotEnoughDimensions(f"{n} items embed in at most {n - 1} dimensions, asked for {k}")


def stress1(d, coords) -> float:
    delta = squareform(_dissimilarities(d), checks=False)
    coords = np.asarray(coords, dtype=float)
    if coords.shape[0] * (coords.shape[0] - 1) // 2 != delta.size:
        raise ValueError("coordinates and distance matrix disagree on the number of items")
    denom = float(np.sum(delta**2))
    if denom == 0:
        raise ZeroDenominator("all dissimilarities are zero")
    fitted = pdist(coords)
    return float(np.sqrt(np.sum((delta - fitted) ** 2) / denom))


def classical_mds(d, k: int) -> Embedding:
    delta = _dissimilarities(d)
    n = delta.shape[0]
    _check_dims(n, k)
    j = np.eye(n) - 1.0 / n
    b = -0.5 * j @ (delta**2) @ j
    b = (b + b.T) / 2
    w, v = np.linalg.eigh(b)
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    neg = w[w < 0]
    total = np.sum(np.abs(w))
    if total > 0 and np.sum(np.abs(neg)) / total > 1e-10:
        warnings.warn(
            f"non-Euclidean distances: negative eigenvalue mass fraction "
            f"{np.sum(np.abs(neg)) / total:.3g} clamped to zero",
            NonEuclideanWarning,
            stacklevel=2,
        )
    coords = v[:, :k] * np.sqrt(np.maximum(w[:k], 0.0))
    labels = list(d.labels) if isinstance(d, DistanceMatrix) else [str(i) for i in range(n)]
    return Embedding(labels, coords, stress1(delta, coords), "classical")


def _guttman(delta, x):
    n = x.shape[0]
    dist = squareform(pdist(x))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(dist > 0, delta / dist, 0.0)
    b = -ratio
    np.fill_diagonal(b, 0.0)
    np.fill_diagonal(b, -b.sum(axis=1))
    return b @ x / n


def smacof(
    d,
    k: int,
    init: Optional[Union[Embedding, np.ndarray, str]] = "classical",
    max_iter: int = 500,
    tol: float = 1e-9,
    seed: Optional[int] = None,
) -> Embedding:
    """Metric SMACOF. `init` is ``"classical"``, ``"random"``, an Embedding or an array."""
    delta = _dissimilarities(d)
    n = delta.shape[0]
    _check_dims(n, k)
    labels = list(d.labels) if isinstance(d, DistanceMatrix) else [str(i) for i in range(n)]
    if isinstance(init, Embedding):
        x = init.coords.copy()
    elif isinstance(init, np.ndarray):
        x = np.asarray(init, dtype=float).copy()
    elif init == "random":
        x = np.random.default_rng(seed).standard_normal((n, k))
    elif init in (None, "classical"):
        x = classical_mds(delta, k).coords
    else:
        raise ValueError(f"unknown init {init!r}")
    if x.shape != (n, k):
        raise ValueError(f"initial configuration must be {n}x{k}, got {x.shape}")

    s = stress1(delta, x)
    history = [s]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        x = _guttman(delta, x)
        s_new = stress1(delta, x)
        history.append(s_new)
        change = (s - s_new) / max(s, 1e-300)
        s = s_new
        if s < 1e-15 or change < tol:
            converged = True
            break
    if not converged:
        warnings.warn(f"SMACOF stopped after {max_iter} iterations", NonConvergenceWarning, stacklevel=2)
    return Embedding(labels, x, s, "smacof", it, converged, history)


def stress_scan(d, k_max: int, max_iter: int = 500, tol: float = 1e-9) -> List[Tuple[int, float]]:
    """Stress-1 of SMACOF solutions for ``k = 1..k_max``.

    Each k starts from classical scaling. When that lands above the previous
    dimension's stress, the previous solution padded with a near-zero column
    is tried as well and the better fit kept.
    """
    delta = _dissimilarities(d)
    _check_dims(delta.shape[0], k_max)
    rows = []
    prev = None
    for k in range(1, k_max + 1):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NonEuclideanWarning)
            emb = smacof(delta, k, "classical", max_iter, tol)
        if prev is not None and emb.stress1 > prev.stress1 + 1e-10:
            # an exactly zero column stays zero under the Guttman transform
            spread = float(np.std(prev.coords)) or 1.0
            nudge = 1e-4 * spread * np.random.default_rng(k).standard_normal((prev.coords.shape[0], 1))
            padded = np.hstack([prev.coords, nudge])
            alt = smacof(delta, k, padded, max_iter, tol)
            if alt.stress1 < emb.stress1:
                emb = alt
        rows.append((k, emb.stress1))
        prev = emb
    return rows


def first_below(scan, threshold: float = STRESS_THRESHOLD) -> Optional[int]:
    for k, s in scan:
        if s < threshold:
            return k
    return None
