"""MinCq, discrete AdaBoost over stumps, and posterior transformations."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .margins import margins
from .numerics import InfeasibleError, QpProblem, QpResult, solve_box_eq_qp
from .types import Dataset, Posterior, VoteMatrix, _json_default
from .voters import voters_from_dict


def _base(F) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(F, VoteMatrix):
        return F.base, F.y
    raise TypeError("expected a VoteMatrix")


def mincq_build(F: VoteMatrix, mu: float) -> QpProblem:
    """Quadratic program over the first ``n`` weights for margin ``mu``.

    ``M`` is the sample Gram matrix of the base voters, ``m`` their mean
    margins, ``a`` the column means of ``M``; the box is ``[0, 1/n]``.
    """
    B, y = _base(F)
    m_ex, n = B.shape
    M = B.T @ B / m_ex
    mvec = (y @ B) / m_ex
    a = M.sum(axis=0) / n
    rhs = mu / 2 + mvec.sum() / (2 * n)
    return QpProblem(M, a, mvec, rhs, 1.0 / n)


def max_realizable_margin(F: VoteMatrix) -> float:
    """Largest empirical first moment over quasi-uniform posteriors."""
    B, y = _base(F)
    return float(np.abs((y @ B) / B.shape[0]).sum() / B.shape[1])


@dataclass
class MinCqModel:
    voters: object
    q: np.ndarray
    mu: float
    objective: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.q.size

    @property
    def posterior(self) -> Posterior:
        return Posterior.from_reduced(self.q)

    @property
    def vote_weights(self) -> np.ndarray:
        return 2 * self.q - 1.0 / self.n

    def decision_function(self, X) -> np.ndarray:
        return self.voters.base_outputs(X) @ self.vote_weights

    def predict(self, X) -> np.ndarray:
        return np.sign(self.decision_function(X)).astype(int)

    def risk(self, data: Dataset) -> float:
        return float(np.mean(self.predict(data) != data.y))

    def to_dict(self):
        return {"voters": self.voters.to_dict(), "q": self.q.tolist(), "mu": self.mu,
                "objective": self.objective, "diagnostics": self.diagnostics}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, default=_json_default)

    @classmethod
    def from_dict(cls, d) -> "MinCqModel":
        return cls(voters_from_dict(d["voters"]), np.asarray(d["q"], dtype=float),
                   float(d["mu"]), float(d["objective"]), d.get("diagnostics", {}))


def mincq_train(voters, dataset: Dataset, mu: float, tol: float = 5e-7,
                max_iter: int = 50000) -> MinCqModel:
    """Quasi-uniform posterior with empirical margin ``mu`` and least second moment."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    F = voters.vote_matrix(dataset)
    p = mincq_build(F, mu)
    lo, hi = p.achievable()
    if not lo - 1e-12 <= p.rhs <= hi + 1e-12:
        raise InfeasibleError(
            f"mu={mu:g} not S-realizable: largest achievable margin is {max_realizable_margin(F):.6g}")
    res: QpResult = solve_box_eq_qp(p, tol=tol, max_iter=max_iter)
    diag = {"kkt_residual": res.kkt_residual, "iterations": res.iterations,
            "converged": res.converged, "polished": res.polished,
            "equality_residual": float(abs(p.m @ res.q - p.rhs))}
    # the QP objective is mu2 shifted by a constant
    return MinCqModel(voters, res.q, float(mu), res.objective, diag)


def mincq_predict(model: MinCqModel, x) -> int | np.ndarray:
    out = model.predict(np.atleast_2d(x))
    return int(out[0]) if np.ndim(x) == 1 else out


def quasi_uniformize(q) -> Posterior:
    """Quasi-uniform posterior with the same majority vote and empirical C-bound."""
    q = q.q if isinstance(q, Posterior) else np.asarray(q, dtype=float)
    n = q.size // 2
    w = q[:n] - q[n:]
    big = np.abs(w).max()
    if big == 0:
        raise ValueError("all margins vanish; no quasi-uniform counterpart")
    half = np.clip((1 + w / big) / (2 * n), 0.0, 1.0 / n)
    return Posterior.from_reduced(half)


def rescale_margin(q, mu_target: float, F: VoteMatrix) -> Posterior:
    """Shrink a quasi-uniform posterior towards uniform so its empirical margin is ``mu_target``."""
    q = q if isinstance(q, Posterior) else Posterior(q)
    if not q.is_quasi_uniform:
        raise ValueError("posterior must be quasi-uniform")
    mu1 = math.fsum(margins(F, q)) / F.m
    if mu_target <= 0 or mu1 < mu_target:
        raise ValueError(f"cannot reach mu={mu_target:g} from mu1={mu1:g}")
    t = mu_target / mu1
    return Posterior(t * q.q + (1 - t) / q.q.size)


@dataclass
class BoostingRun:
    posteriors: list
    alphas: np.ndarray
    chosen: np.ndarray
    errors: np.ndarray
    stopped_early: bool


def adaboost_train(voters, dataset: Dataset, rounds: int) -> BoostingRun:
    """Discrete AdaBoost over the ``2n`` voters of a self-complemented set.

    After round ``t`` the cumulative coefficients, normalized, give the
    posterior recorded for that round.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    H = voters.vote_matrix(dataset).F
    y = dataset.y
    m, n2 = H.shape
    wrong = (H * y[:, None]) <= 0
    w = np.full(m, 1.0 / m)
    coef = np.zeros(n2)
    posts, alphas, chosen, errs = [], [], [], []
    stopped = False
    for _ in range(rounds):
        err = w @ wrong
        j = int(np.argmin(err))
        eps = float(err[j])
        if eps >= 0.5:
            stopped = True
            break
        eps_c = max(eps, 1e-10)
        alpha = 0.5 * math.log((1 - eps_c) / eps_c)
        coef[j] += alpha
        w = w * np.exp(-alpha * y * H[:, j])
        w /= w.sum()
        posts.append(Posterior(coef / coef.sum()))
        alphas.append(alpha)
        chosen.append(j)
        errs.append(eps)
    return BoostingRun(posts, np.array(alphas), np.array(chosen, dtype=int), np.array(errs), stopped)
