"""Synthetic matrix sets drawn from the perturbation model.

Each matrix is ``X_i = α_i (M + E_i) R_iᵀ + 1 t_i`` with a shared Gaussian
``M``, i.i.d. Gaussian noise ``E_i`` and per-matrix similarity parameters.
"""
from dataclasses import asdict, dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.linalg import expm

from .io import MatrixSet
from .matcore import random_orthogonal

GENERATOR = "numpy.random.Generator(PCG64) via numpy.random.default_rng(seed)"
SCHEMES = ("identity", "random", "grouped")


@dataclass(frozen=True)
class SimSpec:
    n: int
    m: int
    N: int
    noise_sd: float = 0.0
    rotation_scheme: str = "random"
    groups: Optional[Tuple[int, ...]] = None
    within_group_jitter: float = 0.05
    scales: str = "all_one"  # or "random_range"
    scale_range: Tuple[float, float] = (0.5, 2.0)
    translations: str = "zero"  # or "random_sd"
    translation_sd: float = 1.0
    coords_dim: int = 3  # 0 disables column coordinates
    seed: int = 0

    def __post_init__(self):
        if min(self.n, self.m, self.N) < 1:
            raise ValueError("n, m and N must all be >= 1")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")
        if self.rotation_scheme not in SCHEMES:
            raise ValueError(f"unknown rotation scheme {self.rotation_scheme!r}")
        if self.rotation_scheme == "grouped":
            if not self.groups or sum(self.groups) != self.N or min(self.groups) < 1:
                raise ValueError(f"group sizes {self.groups} must be positive and sum to N={self.N}")
        if self.scales not in ("all_one", "random_range"):
            raise ValueError(f"unknown scales option {self.scales!r}")
        lo, hi = self.scale_range
        if self.scales == "random_range" and not 0 < lo <= hi:
            raise ValueError("scale_range must satisfy 0 < lo <= hi")
        if self.translations not in ("zero", "random_sd"):
            raise ValueError(f"unknown translations option {self.translations!r}")
        if self.coords_dim < 0:
            raise ValueError("coords_dim must be >= 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["groups"] = list(self.groups) if self.groups else None
        d["scale_range"] = list(self.scale_range)
        return d


@dataclass
class Truth:
    M: np.ndarray
    rotations: List[np.ndarray]
    scales: np.ndarray
    translations: np.ndarray
    groups: np.ndarray


def jittered(base: np.ndarray, jitter: float, rng: np.random.Generator) -> np.ndarray:
    """``base @ expm(A)`` for a random skew-symmetric ``A`` of scale `jitter`."""
    m = base.shape[0]
    g = rng.standard_normal((m, m))
    a = jitter * (g - g.T) / np.sqrt(2.0)
    return base @ expm(a)


def _rotations(spec: SimSpec, rng):
    if spec.rotation_scheme == "identity":
        return [np.eye(spec.m) for _ in range(spec.N)], np.zeros(spec.N, dtype=int)
    if spec.rotation_scheme == "random":
        return [random_orthogonal(spec.m, rng) for _ in range(spec.N)], np.zeros(spec.N, dtype=int)
    rotations, groups = [], []
    for g, size in enumerate(spec.groups):
        base = random_orthogonal(spec.m, rng)
        for _ in range(size):
            rotations.append(jittered(base, spec.within_group_jitter, rng))
            groups.append(g)
    return rotations, np.array(groups)


def generate(spec: SimSpec) -> Tuple[MatrixSet, Truth]:
    rng = np.random.default_rng(spec.seed)
    M = rng.standard_normal((spec.n, spec.m))
    coords = rng.uniform(size=(spec.m, spec.coords_dim)) if spec.coords_dim else None
    rotations, groups = _rotations(spec, rng)
    if spec.scales == "random_range":
        scales = rng.uniform(spec.scale_range[0], spec.scale_range[1], size=spec.N)
    else:
        scales = np.ones(spec.N)
    if spec.translations == "random_sd":
        shifts = spec.translation_sd * rng.standard_normal((spec.N, spec.m))
    else:
        shifts = np.zeros((spec.N, spec.m))
    matrices = []
    for i in range(spec.N):
        e = spec.noise_sd * rng.standard_normal((spec.n, spec.m)) if spec.noise_sd > 0 else 0.0
        matrices.append(scales[i] * (M + e) @ rotations[i].T + shifts[i])
    labels = [f"s{i + 1:02d}" for i in range(spec.N)]
    return MatrixSet(labels, matrices, coords), Truth(M, rotations, scales, shifts, groups)
