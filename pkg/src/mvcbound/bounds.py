"""PAC-Bayesian upper bounds on the risk of the majority vote.

Each function takes a :class:`BoundInputs` record and returns a
:class:`BoundReport`. Identifiers: B0 (twice the Gibbs risk), B1 (Gibbs risk
and disagreement), B1s (disagreement from unlabeled data), B2 / B2p (joint
error and disagreement), B3 / B3p (aligned posteriors, KL-free, with B3p for
sample-compressed kernel voters).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import xlogy

from .numerics import kl_invert, maximize_fc_over_region, xi
from .types import BoundReport, MarginSummary, Posterior


@dataclass(frozen=True)
class BoundInputs:
    m: int
    delta: float = 0.05
    kl: float = 0.0
    gibbs_risk: float | None = None
    disagreement: float | None = None
    joint_error: float | None = None
    m_unlabeled: int | None = None
    disagreement_unlabeled: float | None = None
    compression_size: int = 0
    aligned: bool = False

    def __post_init__(self):
        if not 0 < self.delta <= 1:
            raise ValueError(f"delta must lie in (0, 1], got {self.delta}")
        if self.kl < 0:
            raise ValueError("KL(Q||P) must be non-negative")
        if self.m < 1:
            raise ValueError("m must be positive")
        if self.compression_size >= self.m:
            raise ValueError("compression size must be below m")

    @classmethod
    def from_summary(cls, s: MarginSummary, delta: float = 0.05, kl: float = 0.0, **kw) -> "BoundInputs":
        return cls(m=s.m, delta=delta, kl=kl, gibbs_risk=s.gibbs_risk,
                   disagreement=s.disagreement, joint_error=s.joint_error, **kw)

    def mu(self) -> tuple[float, float]:
        r, d = self._need("gibbs_risk"), self._need("disagreement")
        return 1 - 2 * r, 1 - 2 * d

    def _need(self, name):
        v = getattr(self, name)
        if v is None:
            raise ValueError(f"this bound needs {name}")
        return v

    def to_dict(self):
        return {k: v for k, v in asdict(self).items() if v is not None}


def kl_qp_vs_uniform(q) -> float:
    """``KL(Q || uniform)`` over the ``2n`` voters."""
    q = q.q if isinstance(q, Posterior) else np.asarray(q, dtype=float)
    return max(0.0, float(math.fsum(xlogy(q, q * q.size))))


def _report(bid, value, inp, **diag):
    return BoundReport(bid, float(min(1.0, max(0.0, value))), inp.to_dict(), diag)


def bound0(inp: BoundInputs) -> BoundReport:
    r = inp._need("gibbs_risk")
    tau = (inp.kl + math.log(xi(inp.m) / inp.delta)) / inp.m
    r_sup, info = kl_invert(r, tau, "sup", cap=0.5, full_output=True)
    return _report("B0", 2 * r_sup, inp, tau=tau, r_sup=r_sup, **info)


def _c_from_rd(r_sup, d_inf):
    if r_sup >= 0.5:
        return 1.0
    return 1 - (1 - 2 * r_sup) ** 2 / (1 - 2 * d_inf)


def _bound1(bid, inp, d_s, m_d):
    r = inp._need("gibbs_risk")
    half = inp.delta / 2
    tau_r = (inp.kl + math.log(xi(inp.m) / half)) / inp.m
    tau_d = (2 * inp.kl + math.log(xi(m_d) / half)) / m_d
    r_sup = kl_invert(r, tau_r, "sup", cap=0.5)
    d_inf = kl_invert(d_s, tau_d, "inf")
    return _report(bid, _c_from_rd(r_sup, d_inf), inp, tau_r=tau_r, tau_d=tau_d,
                   r_sup=r_sup, d_inf=d_inf)


def bound1(inp: BoundInputs) -> BoundReport:
    return _bound1("B1", inp, inp._need("disagreement"), inp.m)


def bound1_semi(inp: BoundInputs) -> BoundReport:
    """As B1, with the disagreement measured on ``m_unlabeled`` unlabeled examples."""
    m_u = inp._need("m_unlabeled")
    d_u = inp.disagreement_unlabeled if inp.disagreement_unlabeled is not None else inp._need("disagreement")
    return _bound1("B1s", inp, d_u, m_u)


def _bound2(bid, inp, delta, e_cap):
    d, e = inp._need("disagreement"), inp._need("joint_error")
    tau = (2 * inp.kl + math.log((xi(inp.m) + inp.m) / delta)) / inp.m
    res = maximize_fc_over_region(d, e, tau, e_cap=e_cap)
    return _report(bid, res.value, inp, tau=tau, d_star=res.d, e_star=res.e, e_cap=e_cap,
                   **{k: v for k, v in res.diagnostics.items() if k not in ("tau", "e_cap")})


def bound2(inp: BoundInputs) -> BoundReport:
    return _bound2("B2", inp, inp.delta, None)


def bound2_prime(inp: BoundInputs) -> BoundReport:
    half = inp.delta / 2
    tau_e = (2 * inp.kl + math.log(xi(inp.m) / half)) / inp.m
    e_cap = kl_invert(inp._need("joint_error"), tau_e, "sup", cap=1.0)
    return _bound2("B2p", inp, half, e_cap)


def _aligned_value(mu1, mu2, eps_r, eps_d):
    mu1_lo = max(0.0, mu1 - 2 * eps_r)
    mu2_hi = min(1.0, mu2 + 2 * eps_d)
    value = 1.0 if mu2_hi == 0 else 1 - mu1_lo ** 2 / mu2_hi
    return value, mu1_lo, mu2_hi


def _check_aligned(inp):
    if not inp.aligned:
        raise ValueError("this bound only holds for aligned (quasi-uniform) posteriors")


def bound3(inp: BoundInputs) -> BoundReport:
    _check_aligned(inp)
    mu1, mu2 = inp.mu()
    eps = math.sqrt(math.log(xi(inp.m) / (inp.delta / 2)) / (2 * inp.m))
    value, mu1_lo, mu2_hi = _aligned_value(mu1, mu2, eps, eps)
    r_sup = min(0.5, inp.gibbs_risk + eps)
    d_inf = max(0.0, inp.disagreement - eps)
    return _report("B3", value, inp, eps=eps, mu1_lo=mu1_lo, mu2_hi=mu2_hi,
                   r_sup=r_sup, d_inf=d_inf, rd_form=_c_from_rd(r_sup, d_inf))


def bound3_prime(inp: BoundInputs) -> BoundReport:
    _check_aligned(inp)
    if inp.compression_size != 1:
        raise ValueError(f"needs compression size 1, got {inp.compression_size}")
    m = inp.m
    if m <= 2:
        raise ValueError("needs m >= 3")
    half = inp.delta / 2
    eps_r = math.sqrt((4 + math.log(xi(m - 1) / half)) / (2 * (m - 1)))
    eps_d = math.sqrt((8 + math.log(xi(m - 2) / half)) / (2 * (m - 2)))
    mu1, mu2 = inp.mu()
    value, mu1_lo, mu2_hi = _aligned_value(mu1, mu2, eps_r, eps_d)
    r_sup = min(0.5, inp.gibbs_risk + eps_r)
    d_inf = max(0.0, inp.disagreement - eps_d)
    return _report("B3p", value, inp, eps_r=eps_r, eps_d=eps_d, mu1_lo=mu1_lo, mu2_hi=mu2_hi,
                   r_sup=r_sup, d_inf=d_inf, rd_form=_c_from_rd(r_sup, d_inf))


BOUNDS = {"B0": bound0, "B1": bound1, "B1s": bound1_semi, "B2": bound2,
          "B2p": bound2_prime, "B3": bound3, "B3p": bound3_prime}


def compute_bound(bound_id: str, inp: BoundInputs) -> BoundReport:
    try:
        return BOUNDS[bound_id](inp)
    except KeyError:
        raise ValueError(f"unknown bound id {bound_id!r}; choose from {sorted(BOUNDS)}") from None
