import numpy as np
import pytest

from mvcbound import Dataset, Posterior, VoteMatrix


def random_vote_matrix(rng, m=None, n=None, binary=None):
    m = m or int(rng.integers(1, 40))
    n = n or int(rng.integers(1, 8))
    if binary is None:
        binary = bool(rng.integers(2))
    B = np.sign(rng.standard_normal((m, n))) if binary else rng.uniform(-1, 1, (m, n))
    y = np.where(rng.random(m) < 0.5, -1, 1)
    return VoteMatrix.from_base(B, y)


def random_posterior(rng, n, sparse=False):
    w = rng.exponential(size=2 * n)
    if sparse:
        w[rng.random(2 * n) < 0.5] = 0.0
        if not w.any():
            w[0] = 1.0
    return Posterior(w / w.sum())


def two_gaussians(m, rng, mean=(2.0, 0.5)):
    y = np.where(rng.random(m) < 0.5, -1, 1)
    X = rng.standard_normal((m, len(mean))) + np.outer(y, mean)
    return Dataset(X, y, "gaussians")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
