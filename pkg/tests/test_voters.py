import math

import numpy as np
import pytest

from mvcbound import Dataset, KernelSpec, build_kernel_voters, build_stumps, tanh_normalize, vote_matrix
from mvcbound.voters import ExplicitVoters, StumpDescriptor, attribute_stats, voters_from_dict


def test_stump_thresholds_on_unit_range():
    d = Dataset(np.linspace(0, 1, 7)[:, None], [1, -1, 1, -1, 1, -1, 1])
    v = build_stumps(d, 10)
    assert v.n == 10 and len(v) == 20
    np.testing.assert_allclose([s.threshold for s in v.stumps], np.arange(1, 11) / 11)
    assert all(s.polarity == 1 for s in v.stumps)


def test_stump_count_two_attributes(rng):
    d = Dataset(rng.standard_normal((30, 2)), np.where(rng.random(30) < 0.5, -1, 1))
    v = build_stumps(d, 10)
    assert v.n == 20 and vote_matrix(v, d).F.shape == (30, 40)


def test_constant_attribute_warns():
    d = Dataset(np.ones((4, 1)), [1, -1, 1, -1])
    with pytest.warns(UserWarning, match="constant"):
        v = build_stumps(d, 10)
    assert v.n == 1 and v.stumps[0].threshold == 1.0


def test_stump_sign_rule():
    s = StumpDescriptor(0, 0.5)
    np.testing.assert_array_equal(s(np.array([[0.7], [0.5], [0.1]])), [1, -1, -1])
    d = Dataset([[0.7]], [1])
    F = build_stumps(Dataset([[0.0], [1.0]], [1, -1]), 1).vote_matrix(d)
    assert F.F.tolist() == [[1.0, -1.0]]


def test_kernel_voters_shape_and_values(rng):
    X = rng.standard_normal((3, 2))
    d = Dataset(X, [1, -1, 1])
    v = build_kernel_voters(d, {"type": "rbf", "gamma": 1.0})
    F = v.vote_matrix(d)
    assert len(v) == 8 and v.compression_size == 1
    np.testing.assert_array_equal(F.F[:, 0], 1.0)
    np.testing.assert_allclose(np.diag(F.F[:, 1:4]), 1.0)
    np.testing.assert_array_equal(F.F[:, 4:], -F.F[:, :4])


def test_linear_kernel_range(rng):
    X = rng.standard_normal((20, 3))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    F = build_kernel_voters(Dataset(X, np.ones(20)), KernelSpec("linear")).vote_matrix(Dataset(X, np.ones(20)))
    assert np.all(np.abs(F.F) <= 1)
    with pytest.raises(ValueError, match="outside"):
        build_kernel_voters(Dataset(3 * X, np.ones(20)), KernelSpec("linear"))


def test_disjoint_anchors_have_no_compression(rng):
    d = Dataset(rng.standard_normal((5, 2)), np.ones(5))
    a = Dataset(rng.standard_normal((4, 2)), np.ones(4))
    v = build_kernel_voters(d, KernelSpec("rbf", 0.5), anchors=a)
    assert v.compression_size == 0 and v.n == 5


def test_dimension_mismatch(rng):
    v = build_stumps(Dataset(rng.standard_normal((5, 2)), np.ones(5)), 2)
    with pytest.raises(ValueError):
        v.vote_matrix(Dataset(rng.standard_normal((5, 3)), np.ones(5)))


def test_explicit_voters():
    v = ExplicitVoters([lambda X: np.tanh(X[:, 0]), lambda X: -np.ones(len(X))])
    F = v.vote_matrix(Dataset([[0.0], [2.0]], [1, -1]))
    np.testing.assert_allclose(F.F[1], [math.tanh(2), -1, -math.tanh(2), 1])


def test_tanh_normalize():
    d = Dataset(np.array([[0.0, 5.0], [2.0, 5.0], [4.0, 5.0]]), [1, -1, 1])
    mean, std = attribute_stats(d)
    z = tanh_normalize(d, (mean, std))
    assert z.X[1, 0] == 0.0
    assert np.all(z.X[:, 1] == 0)
    one_sd = Dataset([[mean[0] + std[0], 5.0]], [1])
    assert tanh_normalize(one_sd, (mean, std)).X[0, 0] == pytest.approx(0.7616, abs=1e-4)
    again = tanh_normalize(z, attribute_stats(z))
    assert np.all(np.abs(again.X) < 1)


def test_serialization_roundtrip(rng):
    d = Dataset(rng.standard_normal((6, 2)), np.ones(6))
    for v in (build_stumps(d, 3), build_kernel_voters(d, KernelSpec("rbf", 2.0))):
        w = voters_from_dict(v.to_dict())
        np.testing.assert_array_equal(w.vote_matrix(d).F, v.vote_matrix(d).F)
