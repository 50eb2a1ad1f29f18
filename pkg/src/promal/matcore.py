"""Dense matrix primitives shared by the solvers.

Matrices are plain 2-D ``numpy.ndarray`` objects of dtype float64. The
helpers here validate them at the boundary and wrap the decompositions the
solvers rely on.
"""
from typing import NamedTuple, Tuple

import numpy as np

from .errors import ConvergenceFailure, NonFiniteValues, NotOrthogonal

ORTHO_TOL = 1e-8


class SvdResult(NamedTuple):
    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray


def as_mat(a, name="matrix") -> np.ndarray:
    """Return `a` as a finite 2-D float64 array, raising on anything else."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValues(f"{name} contains NaN or Inf")
    return arr


def orthogonality_error(r: np.ndarray) -> float:
    """Max absolute entry of ``RᵀR - I``."""
    r = np.asarray(r, dtype=float)
    return float(np.max(np.abs(r.T @ r - np.eye(r.shape[1]))))


def check_orthogonal(r, tol: float = ORTHO_TOL) -> np.ndarray:
    """Validate that `r` is a square orthogonal matrix and return it."""
    r = as_mat(r, "rotation")
    if r.shape[0] != r.shape[1]:
        raise NotOrthogonal(f"rotation must be square, got {r.shape}")
    err = orthogonality_error(r)
    if err > tol:
        raise NotOrthogonal(f"max |RᵀR - I| = {err:.3g} exceeds {tol:g}")
    return r


def frobenius_sq(a) -> float:
    a = np.asarray(a, dtype=float)
    return float(np.sum(a * a))


def svd(a) -> SvdResult:
    """Economy SVD with singular values in descending order.

    For an ``n x m`` input ``u`` is ``n x r`` and ``vt`` is ``r x m`` with
    ``r = min(n, m)``.
    """
    a = np.asarray(a, dtype=float)
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        # gesdd occasionally fails where the slower gesvd succeeds
        try:
            import scipy.linalg

            u, s, vt = scipy.linalg.svd(a, full_matrices=False, lapack_driver="gesvd")
        except (np.linalg.LinAlgError, ValueError):
            raise ConvergenceFailure(str(exc)) from exc
    return SvdResult(u, s, vt)


def thin_svd(a) -> SvdResult:
    """Thin SVD of a wide ``n x m`` matrix (``m >= n``).

    ``vt.T`` is the ``m x n`` semi-orthogonal factor used to project the
    matrix into ``n x n`` form.
    """
    a = np.asarray(a, dtype=float)
    n, m = a.shape
    if m < n:
        raise ValueError(f"thin_svd expects m >= n, got {n}x{m}")
    return svd(a)


def column_center(a) -> Tuple[np.ndarray, np.ndarray]:
    """Subtract column means; returns ``(centered, means)``."""
    a = np.asarray(a, dtype=float)
    means = a.mean(axis=0)
    return a - means, means


def polar_factor(c: np.ndarray, rotation_only: bool = False):
    """Orthogonal factor ``U Vᵀ`` of `c` plus its singular values.

    With ``rotation_only`` the last singular pair is flipped when needed so
    the result lies in SO(m).
    """
    u, s, vt = svd(c)
    r = u @ vt
    if rotation_only and np.linalg.det(r) < 0:
        u = u.copy()
        u[:, -1] = -u[:, -1]
        s = s.copy()
        s[-1] = -s[-1]
        r = u @ vt
    return r, s


def random_orthogonal(m: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed draw from O(m), reflections included."""
    z = rng.standard_normal((m, m))
    q, r = np.linalg.qr(z)
    return q * np.sign(np.where(np.diag(r) == 0, 1.0, np.diag(r)))
