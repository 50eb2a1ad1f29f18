import warnings

import numpy as np
import pytest
from scipy.spatial.distance import pdist, squareform

from promal.align import solve_opp
from promal.distance import DistanceMatrix
from promal.embed import classical_mds, first_below, smacof, stress1, stress_scan
from promal.errors import NonEuclideanWarning, NotEnoughDimensions, ZeroDenominator


def _dm(points, form="root"):
    d = squareform(pdist(points))
    labels = [f"p{i}" for i in range(len(points))]
    if form == "squared":
        d = d**2
    return DistanceMatrix(labels, "raw", form, d)


def _noisy_dm(rng, n=10):
    # symmetric positive dissimilarities that are not exactly Euclidean
    d = squareform(pdist(rng.standard_normal((n, 3)))) * rng.uniform(0.7, 1.3, size=(n, n))
    d = (d + d.T) / 2
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix([str(i) for i in range(n)], "raw", "root", d)


def test_equilateral_triangle():
    d = np.ones((3, 3)) - np.eye(3)
    emb = classical_mds(DistanceMatrix(list("abc"), "raw", "root", d), 2)
    np.testing.assert_allclose(squareform(pdist(emb.coords)), d, atol=1e-8)


def test_planted_2d_recovery(rng):
    pts = rng.standard_normal((12, 2))
    emb = classical_mds(_dm(pts), 2)
    np.testing.assert_allclose(pdist(emb.coords), pdist(pts), atol=1e-6)
    fit = solve_opp(emb.coords, pts, _no_scaling())
    assert np.sqrt(fit.residual) < 1e-6


def _no_scaling():
    from promal.align import AlignConfig

    return AlignConfig(method="opp", scaling=False)


def test_collinear_k1():
    pts = np.array([[0.0], [1.0], [3.0], [7.0]])
    emb = classical_mds(_dm(pts), 1)
    np.testing.assert_allclose(pdist(emb.coords), pdist(pts), atol=1e-10)


def test_squared_input_converted(rng):
    pts = rng.standard_normal((6, 2))
    a = classical_mds(_dm(pts, "squared"), 2)
    assert a.stress1 < 1e-8


def test_too_many_dims():
    with pytest.raises(NotEnoughDimensions):
        classical_mds(_dm(np.eye(3)), 3)
    with pytest.raises(NotEnoughDimensions):
        smacof(_dm(np.eye(3)), 0)


def test_non_euclidean_warning(rng):
    with pytest.warns(NonEuclideanWarning):
        classical_mds(_noisy_dm(rng), 2)


def test_stress1_examples():
    pts = np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 4.0]])
    dm = _dm(pts)
    assert stress1(dm, pts) == 0.0
    assert stress1(dm, np.zeros((3, 2))) == pytest.approx(1.0)
    # pairs (01, 02, 12): fitted 3, 0, 3 against 3, 4, 5 -> sqrt((0 + 16 + 4) / (9 + 16 + 25))
    coords = np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 0.0]])
    assert stress1(dm, coords) == pytest.approx(np.sqrt(20.0 / 50.0), abs=1e-12)
    with pytest.raises(ZeroDenominator):
        stress1(DistanceMatrix(list("ab"), "raw", "root", np.zeros((2, 2))), np.zeros((2, 1)))


def test_smacof_exact_fit(rng):
    emb = smacof(_dm(rng.standard_normal((9, 3))), 3)
    assert emb.stress1 < 1e-8


def test_smacof_monotone(rng):
    for seed in range(20):
        r = np.random.default_rng(seed)
        for init in ("classical", "random"):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                emb = smacof(_noisy_dm(r), 2, init=init, seed=seed)
            assert np.all(np.diff(emb.history) <= 1e-12)


def test_smacof_full_dimension(rng):
    pts = rng.standard_normal((7, 5))
    emb = smacof(_dm(pts), 6)
    assert emb.stress1 < 1e-6


def test_smacof_bad_init(rng):
    with pytest.raises(ValueError):
        smacof(_dm(rng.standard_normal((5, 2))), 2, init=np.zeros((4, 2)))


def test_stress_scan_planted_2d(rng):
    scan = stress_scan(_dm(rng.standard_normal((10, 2))), 5)
    assert [k for k, _ in scan] == [1, 2, 3, 4, 5]
    assert scan[1][1] < 1e-6
    assert all(s < 1e-6 for _, s in scan[1:])
    assert first_below(scan) == 2


def test_stress_scan_non_increasing(rng):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        scan = stress_scan(_noisy_dm(rng, 12), 8)
    s = [v for _, v in scan]
    assert np.all(np.diff(s) <= 1e-6)
    assert first_below([(1, 0.2), (2, 0.06)]) is None
