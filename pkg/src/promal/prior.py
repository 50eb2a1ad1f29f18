"""Location matrices for the von Mises-Fisher rotation prior."""
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import DuplicatePointsWarning
from .matcore import as_mat


@dataclass(frozen=True)
class PriorSpec:
    """Which location matrix to use and how strongly to weight it.

    ``kind`` is one of ``"identity"``, ``"similarity_gaussian"`` or
    ``"user_supplied"``. ``bandwidth=None`` means "median pairwise distance"
    for the Gaussian kernel. ``k = 0`` switches the prior off.
    """

    kind: str = "identity"
    k: float = 0.0
    bandwidth: Optional[float] = None
    matrix: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in ("identity", "similarity_gaussian", "user_supplied"):
            raise ValueError(f"unknown prior kind {self.kind!r}")
        if not self.k >= 0:
            raise ValueError(f"k must be >= 0, got {self.k}")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        if self.kind == "user_supplied":
            if self.matrix is None:
                raise ValueError("user_supplied prior needs a matrix")
            f = as_mat(self.matrix, "location matrix")
            if f.shape[0] != f.shape[1]:
                raise ValueError(f"location matrix must be square, got {f.shape}")


def identity_prior(m: int) -> np.ndarray:
    if m < 1:
        raise ValueError("m must be >= 1")
    return np.eye(m)


def median_bandwidth(coords) -> float:
    pts = as_mat(coords, "coords")
    if pts.shape[0] < 2:
        return 1.0
    d = pdist(pts)
    d = d[d > 0]
    return float(np.median(d)) if d.size else 1.0


def build_location_matrix(coords, bandwidth: Optional[float] = None) -> np.ndarray:
    """Gaussian similarity of Euclidean distances between column coordinates.

    ``F[l, k] = exp(-|p_l - p_k|² / (2 h²))``: symmetric, unit diagonal, and
    larger for nearby columns.
    """
    pts = as_mat(coords, "coords")
    h = median_bandwidth(pts) if bandwidth is None else float(bandwidth)
    if not h > 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    sq = squareform(pdist(pts, "sqeuclidean")) if pts.shape[0] > 1 else np.zeros((1, 1))
    off = sq[np.triu_indices(pts.shape[0], 1)]
    if np.any(off == 0):
        warnings.warn(
            "coincident coordinate rows; location matrix may be rank deficient",
            DuplicatePointsWarning,
            stacklevel=2,
        )
    return np.exp(-sq / (2.0 * h * h))


def resolve_location(spec: PriorSpec, m: int, coords=None) -> np.ndarray:
    """Materialise the ``m x m`` location matrix described by `spec`."""
    if spec.kind == "identity":
        return identity_prior(m)
    if spec.kind == "user_supplied":
        f = as_mat(spec.matrix, "location matrix")
        if f.shape != (m, m):
            raise ValueError(f"location matrix must be {m}x{m}, got {f.shape}")
        return f
    if coords is None:
        raise ValueError("similarity_gaussian prior needs column coordinates")
    coords = as_mat(coords, "coords")
    if coords.shape[0] != m:
        raise ValueError(f"coords has {coords.shape[0]} rows, matrices have {m} columns")
    return build_location_matrix(coords, spec.bandwidth)
