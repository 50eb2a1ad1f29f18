import numpy as np
import pytest

from promal.matcore import random_orthogonal


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


def rand_orth(m, rng):
    return random_orthogonal(m, rng)


def rand_orth_batch(count, m, rng):
    """Stack of Haar-distributed orthogonal matrices."""
    z = rng.standard_normal((count, m, m))
    q, r = np.linalg.qr(z)
    signs = np.sign(np.diagonal(r, axis1=1, axis2=2))
    signs[signs == 0] = 1.0
    return q * signs[:, None, :]
