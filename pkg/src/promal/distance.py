"""Residual, rotational and raw distances between matrices."""
import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from .errors import DimensionMismatch
from .matcore import column_center, frobenius_sq

log = logging.getLogger(__name__)

KINDS = ("residual", "rotational", "raw")
FORMS = ("squared", "root")
NOISE_FLOOR = 1e-10


@dataclass
class DistanceMatrix:
    labels: List[str]
    kind: str
    form: str
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        n = len(self.labels)
        if self.values.shape != (n, n):
            raise DimensionMismatch(f"{n} labels but values have shape {self.values.shape}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown distance kind {self.kind!r}")
        if self.form not in FORMS:
            raise ValueError(f"unknown distance form {self.form!r}")

    @property
    def n(self) -> int:
        return len(self.labels)

    def root(self) -> "DistanceMatrix":
        """Root-form copy (a metric); a no-op when already root."""
        if self.form == "root":
            return self
        return DistanceMatrix(self.labels, self.kind, "root", np.sqrt(np.maximum(self.values, 0.0)))

    def upper(self) -> np.ndarray:
        return self.values[np.triu_indices(self.n, 1)]


def _same_shape(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    return a, b


def residual_distance(xa, xb) -> float:
    """Squared Frobenius distance between two aligned matrices."""
    xa, xb = _same_shape(xa, xb)
    return frobenius_sq(xa - xb)


def rotational_distance(ra, rb) -> float:
    """``|R_a - R_b|²`` evaluated as ``2m - 2 tr(R_aᵀ R_b)``."""
    ra, rb = _same_shape(ra, rb)
    if ra.shape[0] != ra.shape[1]:
        raise DimensionMismatch(f"rotations must be square, got {ra.shape}")
    m = ra.shape[0]
    d = 2.0 * m - 2.0 * float(np.sum(ra * rb))
    if -NOISE_FLOOR < d < 0.0:
        d = 0.0
    return d


def raw_distance(xa, xb) -> float:
    xa, xb = _same_shape(xa, xb)
    return frobenius_sq(xa - xb)


def _pairwise(items, fn):
    n = len(items)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = fn(items[i], items[j])
    return out


def distance_matrix(source, kind: str = "residual", form: str = "squared", center: bool = True) -> DistanceMatrix:
    """N x N distance matrix from an alignment result or a raw matrix set.

    ``kind="raw"`` takes the unaligned matrices (``source.matrices``),
    column-centered unless ``center=False``; the other kinds need an
    alignment result.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown distance kind {kind!r}")
    if form not in FORMS:
        raise ValueError(f"unknown distance form {form!r}")
    labels = list(source.labels)
    if kind == "raw":
        mats = getattr(source, "matrices", None)
        if mats is None:
            raise ValueError("raw distances need the unaligned matrices (a MatrixSet)")
        if center:
            mats = [column_center(x)[0] for x in mats]
        values = _pairwise(mats, raw_distance)
    else:
        if not hasattr(source, "rotations"):
            raise ValueError(f"{kind} distances need an AlignmentResult")
        if kind == "residual":
            values = _pairwise(source.aligned, residual_distance)
        else:
            values = _pairwise(source.rotations, rotational_distance)
    dm = DistanceMatrix(labels, kind, "squared", values)
    return dm.root() if form == "root" else dm


def pearson_upper(a: DistanceMatrix, b: DistanceMatrix) -> float:
    """Pearson correlation of the off-diagonal entries of two matrices."""
    if a.labels != b.labels:
        raise ValueError("distance matrices have different labels")
    if a.n < 3:
        raise ValueError("need at least 3 items to correlate distances")
    x, y = a.upper(), b.upper()
    if np.std(x) == 0 or np.std(y) == 0:
        return float("nan")
    return float(np.corrcoef(x, y)[0, 1])


def ensure_root(d: DistanceMatrix) -> DistanceMatrix:
    """Convert squared input to root form, logging the conversion."""
    if d.form == "squared":
        log.info("converting squared %s distances to root form", d.kind)
        return d.root()
    return d
