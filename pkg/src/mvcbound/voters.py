"""Self-complemented voter sets: decision stumps, kernel voters and explicit callables.

Every set stores ``n`` base voters; voter ``j + n`` is the negation of voter
``j``. The vote matrix is built from base outputs only, so complement columns
are exact negations by construction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .types import Dataset, VoteMatrix


def _features(data) -> np.ndarray:
    return data.X if isinstance(data, Dataset) else np.atleast_2d(np.asarray(data, dtype=float))


@dataclass(frozen=True)
class StumpDescriptor:
    attribute: int
    threshold: float
    polarity: int = 1

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        # strict inequality: equality gives -polarity
        return np.where(X[:, self.attribute] > self.threshold, self.polarity, -self.polarity).astype(float)


@dataclass(frozen=True)
class KernelSpec:
    type: str = "rbf"
    gamma: float = 1.0

    def __post_init__(self):
        if self.type not in ("rbf", "linear"):
            raise ValueError(f"unknown kernel {self.type!r}")
        if self.type == "rbf" and self.gamma <= 0:
            raise ValueError("rbf gamma must be positive")

    def __call__(self, A, B) -> np.ndarray:
        A, B = np.atleast_2d(A), np.atleast_2d(B)
        if self.type == "linear":
            return A @ B.T
        sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2 * A @ B.T
        return np.exp(-self.gamma * np.maximum(sq, 0.0))

    def to_dict(self):
        return {"type": self.type, "gamma": self.gamma}


class _VoterSet:
    kind: str
    compression_size: int = 0

    @property
    def n(self) -> int:
        raise NotImplementedError

    def base_outputs(self, data) -> np.ndarray:
        raise NotImplementedError

    def outputs(self, data) -> np.ndarray:
        """Outputs of all ``2n`` voters, shape (m, 2n)."""
        B = self.base_outputs(data)
        return np.hstack([B, -B])

    def vote_matrix(self, dataset: Dataset) -> VoteMatrix:
        return VoteMatrix.from_base(self.base_outputs(dataset), dataset.y)

    def __len__(self) -> int:
        return 2 * self.n


class StumpVoters(_VoterSet):
    kind = "stumps"

    def __init__(self, stumps: Sequence[StumpDescriptor], n_features: int):
        if not stumps:
            raise ValueError("no stumps")
        self.stumps = tuple(stumps)
        self.n_features = n_features

    @property
    def n(self) -> int:
        return len(self.stumps)

    def base_outputs(self, data) -> np.ndarray:
        X = _features(data)
        if X.shape[1] != self.n_features:
            raise ValueError(f"stumps built for {self.n_features} attributes, data has {X.shape[1]}")
        return np.column_stack([s(X) for s in self.stumps])

    def to_dict(self):
        return {"kind": self.kind, "n_features": self.n_features,
                "stumps": [[s.attribute, s.threshold, s.polarity] for s in self.stumps]}


def build_stumps(dataset: Dataset, per_attribute: int = 10) -> StumpVoters:
    """``per_attribute`` stumps per attribute, thresholds equally spaced inside its range."""
    if per_attribute < 1:
        raise ValueError("per_attribute must be >= 1")
    stumps = []
    for a in range(dataset.n_features):
        lo, hi = float(dataset.X[:, a].min()), float(dataset.X[:, a].max())
        if lo == hi:
            warnings.warn(f"attribute {a} is constant; using one midpoint stump", stacklevel=2)
            stumps.append(StumpDescriptor(a, lo))
            continue
        for k in range(1, per_attribute + 1):
            stumps.append(StumpDescriptor(a, lo + k * (hi - lo) / (per_attribute + 1)))
    return StumpVoters(stumps, dataset.n_features)


class KernelVoters(_VoterSet):
    """Bias voter plus one ``k(x_i, .)`` voter per anchor point.

    With anchors taken from the training sample each voter is rebuilt from one
    example, so the compression size is 1; a disjoint anchor set gives 0.
    """

    kind = "kernel"

    def __init__(self, anchors: np.ndarray, kernel: KernelSpec, compression_size: int = 1):
        self.anchors = np.array(anchors, dtype=float)
        self.anchors.setflags(write=False)
        self.kernel = kernel
        self.compression_size = compression_size

    @property
    def n(self) -> int:
        return self.anchors.shape[0] + 1

    def base_outputs(self, data) -> np.ndarray:
        X = _features(data)
        if X.shape[1] != self.anchors.shape[1]:
            raise ValueError(f"anchors have {self.anchors.shape[1]} features, data has {X.shape[1]}")
        K = self.kernel(X, self.anchors)
        bad = np.argwhere(np.abs(K) > 1.0 + 1e-12)
        if bad.size:
            i, j = bad[0]
            raise ValueError(f"kernel value {K[i, j]:.6g} outside [-1, 1] for example {i}, anchor {j}")
        # unit-norm inputs can overshoot 1 by an ulp
        K = np.clip(K, -1.0, 1.0)
        return np.hstack([np.ones((X.shape[0], 1)), K])

    def to_dict(self):
        return {"kind": self.kind, "kernel": self.kernel.to_dict(),
                "compression_size": self.compression_size, "anchors": self.anchors.tolist()}


def build_kernel_voters(train: Dataset, kernel: KernelSpec | dict, anchors: Dataset | None = None) -> KernelVoters:
    if isinstance(kernel, dict):
        kernel = KernelSpec(**kernel)
    if anchors is None:
        voters = KernelVoters(train.X, kernel, compression_size=1)
        # pairs among the training points are checked up front
        voters.base_outputs(train)
        return voters
    return KernelVoters(anchors.X, kernel, compression_size=0)


class ExplicitVoters(_VoterSet):
    """Arbitrary base voters given as callables mapping a feature matrix to outputs in [-1, 1]."""

    kind = "explicit"

    def __init__(self, funcs: Sequence[Callable], compression_size: int = 0):
        if not funcs:
            raise ValueError("no voters")
        self.funcs = tuple(funcs)
        self.compression_size = compression_size

    @property
    def n(self) -> int:
        return len(self.funcs)

    def base_outputs(self, data) -> np.ndarray:
        X = _features(data)
        B = np.column_stack([np.asarray(f(X), dtype=float).reshape(-1) for f in self.funcs])
        if np.any(np.abs(B) > 1):
            raise ValueError("explicit voter output outside [-1, 1]")
        return B

    def to_dict(self):
        return {"kind": self.kind, "n": self.n}


def voters_from_dict(d: dict):
    if d["kind"] == "stumps":
        return StumpVoters([StumpDescriptor(int(a), float(t), int(p)) for a, t, p in d["stumps"]],
                           int(d["n_features"]))
    if d["kind"] == "kernel":
        return KernelVoters(np.asarray(d["anchors"], dtype=float), KernelSpec(**d["kernel"]),
                            int(d["compression_size"]))
    raise ValueError(f"cannot rebuild voters of kind {d['kind']!r}")


def vote_matrix(voters, dataset: Dataset) -> VoteMatrix:
    return voters.vote_matrix(dataset)


def attribute_stats(train: Dataset) -> tuple[np.ndarray, np.ndarray]:
    return train.X.mean(axis=0), train.X.std(axis=0)


def tanh_normalize(dataset: Dataset, stats) -> Dataset:
    """``tanh((x - mean) / std)`` per attribute; a zero-spread attribute maps to 0."""
    mean, std = (np.asarray(s, dtype=float) for s in stats)
    safe = np.where(std > 0, std, 1.0)
    Z = np.where(std > 0, np.tanh((dataset.X - mean) / safe), 0.0)
    return Dataset(Z, dataset.y, dataset.name)
