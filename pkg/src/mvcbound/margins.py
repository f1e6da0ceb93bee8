"""Margin statistics of a weighted majority vote and the C-bound."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .types import MarginSummary, Posterior, VoteMatrix


def _as_q(q) -> np.ndarray:
    if isinstance(q, Posterior):
        return q.q
    q = np.asarray(q, dtype=float)
    if np.any(q < 0) or abs(q.sum() - 1.0) > 1e-9:
        raise ValueError("posterior weights must be a distribution")
    return q


def margins(F: VoteMatrix, q) -> np.ndarray:
    """Per-example margin ``y_i * sum_j q_j F[i, j]``."""
    q = _as_q(q)
    if q.size != F.F.shape[1]:
        raise ValueError(f"{q.size} weights for {F.F.shape[1]} voters")
    return F.y * (F.F @ q)


def c_bound(mu1: float, mu2: float) -> float:
    """``1 - mu1^2 / mu2``; defined only for a positive first moment."""
    if mu1 <= 0:
        raise ValueError("Gibbs risk >= 1/2, C-bound undefined (mu1 <= 0)")
    if mu2 < mu1 * mu1 * (1 - 1e-12):
        raise ValueError(f"inconsistent moments: mu2={mu2} < mu1^2={mu1 * mu1}")
    return max(0.0, 1.0 - mu1 * mu1 / mu2)


def summarize(M) -> MarginSummary:
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        raise ValueError("no margins to summarize")
    m = M.size
    mu1 = math.fsum(M) / m
    mu2 = math.fsum(M * M) / m
    return MarginSummary(
        mu1=mu1,
        mu2=mu2,
        variance=max(0.0, mu2 - mu1 * mu1),
        gibbs_risk=(1 - mu1) / 2,
        disagreement=(1 - mu2) / 2,
        joint_error=(1 - 2 * mu1 + mu2) / 4,
        joint_success=(1 + 2 * mu1 + mu2) / 4,
        # a tie is an error
        bayes_risk=float(np.count_nonzero(M <= 0)) / m,
        c_bound=c_bound(mu1, mu2) if mu1 > 0 else None,
        m=m,
    )


def c_bound_forms(mu1: float, mu2: float) -> tuple[float, float, float]:
    """The three equivalent expressions: variance ratio, moment ratio, (r, d) form."""
    r, d = (1 - mu1) / 2, (1 - mu2) / 2
    return ((mu2 - mu1 * mu1) / mu2,
            1 - mu1 * mu1 / mu2,
            1 - (1 - 2 * r) ** 2 / (1 - 2 * d))


@dataclass(frozen=True)
class OptimalityFlags:
    moment_cond: bool
    gibbs_vs_d: bool
    cb_vs_2r: bool


def optimality_flags(mu1: float, mu2: float) -> OptimalityFlags:
    """When is the C-bound no worse than twice the Gibbs risk?"""
    if mu1 <= 0:
        raise ValueError("flags need mu1 > 0")
    r, d = (1 - mu1) / 2, (1 - mu2) / 2
    return OptimalityFlags(mu2 <= mu1, r <= d, c_bound(mu1, mu2) <= 2 * r)


def variance_upper_bound(q, F: VoteMatrix) -> float:
    """``sum_j q_j^2 + sum_{j != k} q_j q_k Cov(y f_j, y f_k)`` on the sample."""
    q = _as_q(q)
    Y = F.F * F.y[:, None]
    C = np.cov(Y, rowvar=False, bias=True)
    C = np.atleast_2d(C)
    off = q @ C @ q - q @ (np.diag(C) * q)
    return float(q @ q + off)


def independent_voters_cb_bound(n: int, d: float | None = None, r: float | None = None) -> float:
    """C-bound ceiling for ``n`` independent voters under a uniform posterior.

    Pass the disagreement ``d`` for ``1 / (n (1 - 2d))`` or the Gibbs risk
    ``r`` for ``1 / (n (1 - 2r)^2)``.
    """
    if (d is None) == (r is None):
        raise ValueError("give exactly one of d or r")
    if d is not None:
        if d >= 0.5:
            raise ValueError("disagreement must be below 1/2")
        return 1.0 / (n * (1 - 2 * d))
    if r >= 0.5:
        raise ValueError("Gibbs risk must be below 1/2")
    return 1.0 / (n * (1 - 2 * r) ** 2)
