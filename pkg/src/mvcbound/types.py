"""Core data types: datasets, vote matrices, posteriors and report records."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Iterator, Sequence

import numpy as np

WEIGHT_FLOOR = 1e-15
SUM_TOL = 1e-12


def complement_index(i: int, n: int) -> int:
    """Index of the complement of voter ``i`` in a set of ``2n`` voters.

    Indices are 1-based: voter ``i`` and voter ``i + n`` are negations of
    each other.
    """
    if n < 1:
        raise ValueError(f"half-size n must be positive, got {n}")
    if not 1 <= i <= 2 * n:
        raise ValueError(f"voter index {i} out of range 1..{2 * n}")
    return i + n if i <= n else i - n


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Example:
    features: tuple[float, ...]
    label: int

    def __post_init__(self):
        if self.label not in (-1, 1):
            raise ValueError(f"label must be -1 or +1, got {self.label}")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Labeled examples stored as a feature matrix ``X`` and labels ``y`` in {-1, +1}."""

    X: np.ndarray
    y: np.ndarray
    name: str = "dataset"

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise ValueError("features must be a 2-d array")
        if y.shape != (X.shape[0],):
            raise ValueError(f"{X.shape[0]} feature rows but {y.size} labels")
        if X.shape[0] == 0:
            raise ValueError("dataset is empty")
        if not np.all(np.isin(y, (-1, 1))):
            raise ValueError("labels must be -1 or +1")
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "y", _frozen(y.astype(int)))

    @classmethod
    def from_examples(cls, examples: Sequence[Example], name: str = "dataset") -> "Dataset":
        return cls(np.array([e.features for e in examples], dtype=float),
                   np.array([e.label for e in examples], dtype=int), name)

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.m

    def __iter__(self) -> Iterator[Example]:
        for x, y in zip(self.X, self.y):
            yield Example(tuple(float(v) for v in x), int(y))

    def subset(self, idx, name: str | None = None) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.X[idx], self.y[idx], name or self.name)


@dataclass(frozen=True, eq=False)
class VoteMatrix:
    """Outputs ``F[i, j] = f_j(x_i)`` of a self-complemented set of ``2n`` voters.

    Columns ``j`` and ``j + n`` (0-based) are exact negations.
    """

    F: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        F = np.array(self.F, dtype=float)
        y = np.array(self.y, dtype=int)
        if F.ndim != 2 or F.shape[1] % 2 or F.shape[1] == 0:
            raise ValueError("vote matrix needs shape (m, 2n) with n >= 1")
        if F.shape[0] != y.size:
            raise ValueError(f"{F.shape[0]} rows but {y.size} labels")
        if np.any(np.abs(F) > 1.0):
            raise ValueError("voter outputs must lie in [-1, 1]")
        n = F.shape[1] // 2
        if not np.array_equal(F[:, n:], -F[:, :n]):
            raise ValueError("columns j and j+n must be exact negations")
        object.__setattr__(self, "F", _frozen(F))
        object.__setattr__(self, "y", _frozen(y))

    @classmethod
    def from_base(cls, B: np.ndarray, y) -> "VoteMatrix":
        """Build from the outputs of the first ``n`` voters only."""
        B = np.asarray(B, dtype=float)
        return cls(np.hstack([B, -B]), y)

    @property
    def m(self) -> int:
        return self.F.shape[0]

    @property
    def n(self) -> int:
        return self.F.shape[1] // 2

    @property
    def base(self) -> np.ndarray:
        return self.F[:, : self.n]


@dataclass(frozen=True, eq=False)
class Posterior:
    """Distribution over ``2n`` voters; the prior is uniform unless stated otherwise."""

    q: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float).ravel()
        if q.size == 0 or q.size % 2:
            raise ValueError("a posterior needs an even, positive number of weights")
        if np.any(q < 0) or not np.all(np.isfinite(q)):
            raise ValueError("weights must be finite and non-negative")
        total = q.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {total!r}, not 1")
        q[q < WEIGHT_FLOOR] = 0.0
        q = q / math.fsum(q)
        object.__setattr__(self, "q", _frozen(q))

    @classmethod
    def uniform(cls, n: int) -> "Posterior":
        return cls(np.full(2 * n, 1.0 / (2 * n)))

    @classmethod
    def from_reduced(cls, q_half) -> "Posterior":
        """Quasi-uniform posterior from the weights of the first ``n`` voters."""
        q_half = np.asarray(q_half, dtype=float)
        n = q_half.size
        return cls(np.concatenate([q_half, 1.0 / n - q_half]))

    @property
    def n(self) -> int:
        return self.q.size // 2

    @property
    def pair_mass(self) -> np.ndarray:
        return self.q[: self.n] + self.q[self.n:]

    @property
    def is_quasi_uniform(self) -> bool:
        return bool(np.all(np.abs(self.pair_mass - 1.0 / self.n) <= SUM_TOL))

    @property
    def is_aligned(self) -> bool:
        # aligned on the uniform prior means quasi-uniform
        return self.is_quasi_uniform

    @property
    def vote_weights(self) -> np.ndarray:
        """Net weight ``q_i - q_{i+n}`` of each base voter in the aggregate vote."""
        return self.q[: self.n] - self.q[self.n:]


@dataclass(frozen=True)
class MarginSummary:
    mu1: float
    mu2: float
    variance: float
    gibbs_risk: float
    disagreement: float
    joint_error: float
    joint_success: float
    bayes_risk: float
    c_bound: float | None
    m: int

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class BoundReport:
    bound_id: str
    value: float
    inputs: dict[str, Any]
    diagnostics: dict[str, Any] = field(default_factory=dict)

    BOUND_IDS = ("B0", "B1", "B1s", "B2", "B2p", "B3", "B3p")

    def __post_init__(self):
        if self.bound_id not in self.BOUND_IDS:
            raise ValueError(f"unknown bound id {self.bound_id!r}")
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"bound value {self.value} outside [0, 1]")

    def to_dict(self) -> dict[str, Any]:
        return {"bound_id": self.bound_id, "inputs": self.inputs,
                "value": self.value, "diagnostics": self.diagnostics}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, default=_json_default)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")
