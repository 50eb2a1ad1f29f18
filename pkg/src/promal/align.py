"""Procrustes solvers: OPP, GPA, ProMises MAP and the efficient reduction.

All group solvers share one alternating loop. Each iteration rotates every
centered matrix onto the current reference through the SVD of the
regularised cross-product ``XᵀΣn⁻¹MΣm⁻¹ + kF``, sets the scalings from the
singular values, and then replaces the reference by the mean of the aligned
matrices. With ``k = 0`` and identity covariances this is exactly GPA.

The loop minimises

    J = Σ_i |Σn^{-1/2} (α_i X_i R_i - M) Σm^{-1/2}|²  -  2k Σ_i α_i tr(F_iᵀ R_i)

and ``objective_history`` records J after every reference update. For
``k = 0`` and identity covariances J is the plain GPA residual sum.
"""
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Union

import numpy as np

from .errors import (
    DegenerateScaling,
    DimensionMismatch,
    NonConvergenceWarning,
    NotSPD,
    SingularCovariance,
)
from .matcore import as_mat, column_center, frobenius_sq, polar_factor, thin_svd
from .prior import PriorSpec, resolve_location

METHODS = ("opp", "gpa", "promises", "efficient_promises")
NON_UNIQUE_RTOL = 1e-10
MIN_SCALE = 1e-8
MAX_CONDITION = 1e12


@dataclass
class AlignConfig:
    method: str = "gpa"
    scaling: bool = True
    centering: bool = True
    max_iter: int = 100
    tol: float = 1e-8
    prior: PriorSpec = field(default_factory=PriorSpec)
    sigma_n: Optional[np.ndarray] = None
    sigma_m: Optional[np.ndarray] = None
    # "mean", "first", or a fixed reference matrix
    reference: Union[str, np.ndarray] = "mean"
    rotation_only: bool = False
    n_jobs: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if isinstance(self.reference, str) and self.reference not in ("mean", "first"):
            raise ValueError(f"unknown reference {self.reference!r}")
        if self.n_jobs < 1:
            raise ValueError("n_jobs must be >= 1")

    def echo(self) -> dict:
        """JSON-friendly summary of the configuration."""
        ref = self.reference if isinstance(self.reference, str) else "fixed"
        return {
            "method": self.method,
            "scaling": self.scaling,
            "centering": self.centering,
            "max_iter": self.max_iter,
            "tol": self.tol,
            "prior_kind": self.prior.kind,
            "k": self.prior.k,
            "bandwidth": self.prior.bandwidth,
            "sigma_n": self.sigma_n is not None,
            "sigma_m": self.sigma_m is not None,
            "reference": ref,
            "rotation_only": self.rotation_only,
        }


@dataclass
class AlignmentResult:
    labels: List[str]
    rotations: List[np.ndarray]
    scales: np.ndarray
    translations: np.ndarray
    aligned: List[np.ndarray]
    reference: np.ndarray
    objective_history: List[float]
    projections: Optional[List[np.ndarray]] = None
    method: str = "gpa"
    converged: bool = True
    non_unique: bool = False
    initial_objective: float = float("nan")
    final_change: float = 0.0

    @property
    def n_iter(self) -> int:
        return len(self.objective_history)

    @property
    def residual(self) -> float:
        """Unpenalised ``Σ_i |X̂_i - M|²``."""
        return float(sum(frobenius_sq(a - self.reference) for a in self.aligned))


class OppFit(NamedTuple):
    rotation: np.ndarray
    scale: float
    translation: np.ndarray
    residual: float
    non_unique: bool


class _Weights:
    """Inverse row/column covariances; ``None`` stands for the identity."""

    def __init__(self, sigma_n=None, sigma_m=None):
        self.n_inv, self.n_isqrt = _spd_inverse(sigma_n, "sigma_n")
        self.m_inv, self.m_isqrt = _spd_inverse(sigma_m, "sigma_m")

    @property
    def identity(self):
        return self.n_inv is None and self.m_inv is None

    def cross(self, x, target):
        t = target if self.n_inv is None else self.n_inv @ target
        if self.m_inv is not None:
            t = t @ self.m_inv
        return x.T @ t

    def whiten(self, a):
        """``Σn^{-1/2} a Σm^{-1/2}``."""
        if self.n_isqrt is not None:
            a = self.n_isqrt @ a
        if self.m_isqrt is not None:
            a = a @ self.m_isqrt
        return a

    def scale_denominator(self, x, r):
        # |Σm^{-1/2} Rᵀ Xᵀ Σn^{-1/2}|², as written for the perturbation model
        a = r.T @ x.T
        if self.m_isqrt is not None:
            a = self.m_isqrt @ a
        if self.n_isqrt is not None:
            a = a @ self.n_isqrt
        return frobenius_sq(a)


def _spd_inverse(sigma, name):
    if sigma is None:
        return None, None
    s = as_mat(sigma, name)
    if s.shape[0] != s.shape[1]:
        raise NotSPD(f"{name} must be square, got {s.shape}")
    if np.max(np.abs(s - s.T)) > 1e-10:
        raise NotSPD(f"{name} is not symmetric")
    w, v = np.linalg.eigh(s)
    if w[0] <= 0:
        raise NotSPD(f"{name} has non-positive eigenvalue {w[0]:.3g}")
    if w[-1] / w[0] > MAX_CONDITION:
        raise SingularCovariance(f"{name} condition number {w[-1] / w[0]:.3g} exceeds 1e12")
    inv = (v / w) @ v.T
    isqrt = (v / np.sqrt(w)) @ v.T
    return inv, isqrt


def _unpack(xs):
    """Accept a MatrixSet-like object or a plain sequence of arrays."""
    if hasattr(xs, "matrices"):
        mats = [as_mat(x, lab) for lab, x in zip(xs.labels, xs.matrices)]
        labels = list(xs.labels)
        coords = getattr(xs, "coords", None)
    else:
        mats = [as_mat(x, f"matrix {i}") for i, x in enumerate(xs)]
        labels = [str(i) for i in range(len(mats))]
        coords = None
    if not mats:
        raise ValueError("need at least one matrix")
    shape = mats[0].shape
    for lab, x in zip(labels, mats):
        if x.shape != shape:
            raise DimensionMismatch(f"matrix {lab!r} has shape {x.shape}, expected {shape}")
    return labels, mats, coords


def _fit_one(x, target, weights, kf, rotation_only):
    c = weights.cross(x, target)
    if kf is not None:
        c = c + kf
    r, s = polar_factor(c, rotation_only)
    top = abs(s[0]) if s.size else 0.0
    non_unique = top == 0.0 or abs(s[-1]) < NON_UNIQUE_RTOL * top
    return r, float(np.sum(s)), weights.scale_denominator(x, r), non_unique


def solve_opp(x, target, cfg: Optional[AlignConfig] = None) -> OppFit:
    """Align `x` onto a fixed `target`: closed-form rotation, scale, shift.

    ``R = U Vᵀ`` from the SVD of ``X_cᵀ T_c`` (covariance-weighted and
    prior-regularised when `cfg` asks for it) and ``α = tr(D) / |Rᵀ X_cᵀ|²``.
    """
    cfg = cfg or AlignConfig(method="opp")
    x = as_mat(x, "x")
    target = as_mat(target, "target")
    if x.shape != target.shape:
        raise DimensionMismatch(f"x is {x.shape} but target is {target.shape}")
    if cfg.centering:
        xc, t = column_center(x)
        tc, _ = column_center(target)
    else:
        xc, t, tc = x, np.zeros(x.shape[1]), target
    weights = _Weights(cfg.sigma_n, cfg.sigma_m)
    kf = None
    if cfg.prior.k > 0:
        kf = cfg.prior.k * resolve_location(cfg.prior, x.shape[1])
    r, num, den, non_unique = _fit_one(xc, tc, weights, kf, cfg.rotation_only)
    alpha = num / den if (cfg.scaling and den > 0) else 1.0
    resid = frobenius_sq(weights.whiten(alpha * xc @ r - tc))
    return OppFit(r, float(alpha), t, resid, non_unique)


def _objective(aligned, reference, weights, kfs, scales, rotations):
    j = sum(frobenius_sq(weights.whiten(a - reference)) for a in aligned)
    if kfs is not None:
        j -= 2.0 * sum(a * np.sum(kf * r) for a, kf, r in zip(scales, kfs, rotations))
    return float(j)


def _scales(nums, dens, scaling, normalise):
    nums = np.asarray(nums)
    dens = np.asarray(dens)
    if not scaling:
        return np.ones(len(nums))
    safe = np.where(dens > 0, dens, 1.0)
    raw = np.where(dens > 0, nums / safe, 1.0)
    if normalise:
        # keep Σ α_i² |X_i|² fixed; otherwise a moving mean reference lets
        # every scale shrink toward zero
        size = float(np.sum(raw * raw * dens))
        if size <= 0:
            raise DegenerateScaling("all cross-products vanished; scalings undefined")
        raw = raw * np.sqrt(np.sum(dens) / size)
    if np.all(np.abs(raw) < MIN_SCALE):
        raise DegenerateScaling(f"all scalings below {MIN_SCALE:g}")
    return raw


def _procrustes_loop(xcs, cfg, kfs, weights, reference0, update):
    n_mat = len(xcs)
    rotations = [np.eye(x.shape[1]) for x in xcs]
    scales = np.ones(n_mat)
    reference = reference0
    prev = _objective(xcs, reference, weights, kfs, scales, rotations)
    initial = prev
    history = []
    converged = False
    change = float("inf")
    non_unique = False
    kf_list = kfs if kfs is not None else [None] * n_mat

    pool = ThreadPoolExecutor(cfg.n_jobs) if cfg.n_jobs > 1 and n_mat > 1 else None
    try:
        for _ in range(cfg.max_iter):
            ref = reference

            def fit(i):
                return _fit_one(xcs[i], ref, weights, kf_list[i], cfg.rotation_only)

            fits = list(pool.map(fit, range(n_mat))) if pool else [fit(i) for i in range(n_mat)]
            rotations = [f[0] for f in fits]
            non_unique = any(f[3] for f in fits)
            scales = _scales([f[1] for f in fits], [f[2] for f in fits], cfg.scaling, update)
            aligned = [a * x @ r for a, x, r in zip(scales, xcs, rotations)]
            if update:
                reference = np.mean(aligned, axis=0)
            obj = _objective(aligned, reference, weights, kfs, scales, rotations)
            history.append(obj)
            change = abs(obj - prev) / max(1.0, abs(prev))
            prev = obj
            if change < cfg.tol or not update:
                converged = True
                break
    finally:
        if pool:
            pool.shutdown()

    if not converged:
        warnings.warn(
            f"no convergence after {cfg.max_iter} iterations "
            f"(relative change {change:.3g}, tol {cfg.tol:g})",
            NonConvergenceWarning,
            stacklevel=3,
        )
    return dict(
        rotations=rotations,
        scales=np.asarray(scales, dtype=float),
        aligned=aligned,
        reference=reference,
        objective_history=history,
        converged=converged,
        non_unique=non_unique,
        initial_objective=initial,
        final_change=float(change),
    )


def _center_all(mats, centering):
    if centering:
        pairs = [column_center(x) for x in mats]
        return [p[0] for p in pairs], np.array([p[1] for p in pairs])
    return list(mats), np.zeros((len(mats), mats[0].shape[1]))


def _initial_reference(xcs, cfg, shape):
    if isinstance(cfg.reference, str):
        if cfg.reference == "mean":
            return np.mean(xcs, axis=0), True
        return xcs[0].copy(), False
    ref = as_mat(cfg.reference, "reference")
    if ref.shape != shape:
        raise DimensionMismatch(f"reference is {ref.shape}, matrices are {shape}")
    return ref, False


def solve_gpa(xs, cfg: Optional[AlignConfig] = None) -> AlignmentResult:
    """Generalized Procrustes analysis against an iteratively updated mean."""
    cfg = cfg or AlignConfig()
    gpa_cfg = AlignConfig(
        method="gpa",
        scaling=cfg.scaling,
        centering=cfg.centering,
        max_iter=cfg.max_iter,
        tol=cfg.tol,
        reference=cfg.reference,
        rotation_only=cfg.rotation_only,
        n_jobs=cfg.n_jobs,
    )
    res = solve_promises(xs, gpa_cfg)
    res.method = "gpa"
    return res


def solve_promises(xs, cfg: Optional[AlignConfig] = None, coords=None) -> AlignmentResult:
    """MAP alignment under the perturbation model with a von Mises-Fisher prior.

    `coords` (or ``xs.coords``) feeds the similarity-kernel location matrix
    when ``cfg.prior.kind == "similarity_gaussian"``.
    """
    cfg = cfg or AlignConfig(method="promises")
    labels, mats, set_coords = _unpack(xs)
    coords = set_coords if coords is None else coords
    shape = mats[0].shape
    weights = _Weights(cfg.sigma_n, cfg.sigma_m)
    if cfg.sigma_n is not None and weights.n_inv.shape[0] != shape[0]:
        raise DimensionMismatch(f"sigma_n must be {shape[0]}x{shape[0]}")
    if cfg.sigma_m is not None and weights.m_inv.shape[0] != shape[1]:
        raise DimensionMismatch(f"sigma_m must be {shape[1]}x{shape[1]}")
    xcs, translations = _center_all(mats, cfg.centering)
    kfs = None
    if cfg.prior.k > 0:
        kf = cfg.prior.k * resolve_location(cfg.prior, shape[1], coords)
        kfs = [kf] * len(xcs)
    reference0, update = _initial_reference(xcs, cfg, shape)
    out = _procrustes_loop(xcs, cfg, kfs, weights, reference0, update)
    return AlignmentResult(labels=labels, translations=translations, method=cfg.method, **out)


def solve_efficient_promises(xs, cfg: Optional[AlignConfig] = None, coords=None) -> AlignmentResult:
    """ProMises on the ``n x n`` projections ``X_i Q_i``.

    ``Q_i`` is the ``m x n`` right singular factor of the (centered) ``X_i``.
    The location matrix is carried into each reduced space as ``Q_iᵀ F Q_i``.
    Returned rotations, aligned matrices and reference are ``n x n``.
    """
    cfg = cfg or AlignConfig(method="efficient_promises")
    labels, mats, set_coords = _unpack(xs)
    coords = set_coords if coords is None else coords
    n, m = mats[0].shape
    if m < n:
        raise DimensionMismatch(f"efficient route needs m >= n, got {n}x{m}")
    if cfg.sigma_m is not None:
        raise ValueError("sigma_m is not supported on the efficient route")
    if not isinstance(cfg.reference, str):
        raise ValueError("the efficient route supports reference='mean' or 'first' only")
    weights = _Weights(cfg.sigma_n, None)
    if cfg.sigma_n is not None and weights.n_inv.shape[0] != n:
        raise DimensionMismatch(f"sigma_n must be {n}x{n}")
    xcs, translations = _center_all(mats, cfg.centering)
    projections = [thin_svd(x).vt.T for x in xcs]
    reduced = [x @ q for x, q in zip(xcs, projections)]
    kfs = None
    if cfg.prior.k > 0:
        f = resolve_location(cfg.prior, m, coords)
        kfs = [cfg.prior.k * (q.T @ f @ q) for q in projections]
    reference0, update = _initial_reference(reduced, cfg, (n, n))
    out = _procrustes_loop(reduced, cfg, kfs, weights, reference0, update)
    return AlignmentResult(
        labels=labels,
        translations=translations,
        projections=projections,
        method="efficient_promises",
        **out,
    )


def _opp_result(xs, cfg) -> AlignmentResult:
    labels, mats, coords = _unpack(xs)
    if len(mats) != 2:
        raise ValueError(f"method 'opp' aligns exactly 2 matrices, got {len(mats)}")
    fit = solve_opp(mats[0], mats[1], cfg)
    xcs, translations = _center_all(mats, cfg.centering)
    m = mats[0].shape[1]
    aligned = [fit.scale * xcs[0] @ fit.rotation, xcs[1]]
    return AlignmentResult(
        labels=labels,
        rotations=[fit.rotation, np.eye(m)],
        scales=np.array([fit.scale, 1.0]),
        translations=translations,
        aligned=aligned,
        reference=xcs[1],
        objective_history=[fit.residual],
        method="opp",
        non_unique=fit.non_unique,
        initial_objective=frobenius_sq(xcs[0] - xcs[1]),
    )


def align(xs, cfg: AlignConfig, coords=None) -> AlignmentResult:
    """Dispatch to the solver named by ``cfg.method``."""
    if cfg.method == "opp":
        return _opp_result(xs, cfg)
    if cfg.method == "gpa":
        return solve_gpa(xs, cfg)
    if cfg.method == "promises":
        return solve_promises(xs, cfg, coords)
    return solve_efficient_promises(xs, cfg, coords)

