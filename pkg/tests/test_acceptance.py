"""Acceptance checks 1-9.

Each ``check_N`` returns (passed, detail); the tests print one PASS/FAIL line
per check and then assert. Run this file directly for the summary alone.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from mvcbound import Dataset, build_kernel_voters, build_stumps, margins, summarize
from mvcbound.bounds import (BoundInputs, bound0, bound1, bound1_semi, bound2, bound2_prime, bound3,
                             bound3_prime)
from mvcbound.evaluation import cross_validate, sign_test
from mvcbound.learners import (max_realizable_margin, mincq_build, mincq_train, quasi_uniformize,
                               rescale_margin)
from mvcbound.margins import c_bound_forms, optimality_flags, variance_upper_bound
from mvcbound.numerics import kl_invert, xi
from mvcbound.voters import ExplicitVoters, attribute_stats, tanh_normalize

from conftest import random_posterior, random_vote_matrix, two_gaussians


def timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


def close(x, target, tol):
    return abs(x - target) <= tol


# 1 ------------------------------------------------------------------------

def check_1():
    def run():
        inp = BoundInputs(m=1000, delta=0.05, kl=5.0, gibbs_risk=0.30)
        rep = bound0(inp)
        tau = rep.diagnostics["tau"]
        return tau, kl_invert(0.30, tau, "inf"), kl_invert(0.30, tau, "sup"), rep.value

    bound0(BoundInputs(m=1000, delta=0.05, kl=5.0, gibbs_risk=0.30))  # warm imports
    (tau, lo, hi, b0), dt = timed(run)
    ok = (close(tau, 0.0117, 5e-4) and close(lo, 0.233, 1e-3) and close(hi, 0.373, 1e-3)
          and close(b0, 0.746, 0.004) and dt < 0.010)
    return ok, f"tau={tau:.6f} interval=[{lo:.4f}, {hi:.4f}] B0={b0:.4f} t={dt * 1e3:.2f}ms"


# 2 ------------------------------------------------------------------------

def check_2():
    inp = BoundInputs(m=1000, delta=0.05, kl=5.0, disagreement=0.40, joint_error=0.10)

    def run():
        r2, r2p = bound2(inp), bound2_prime(inp)
        return r2.diagnostics["tau"], r2.value, r2p.value

    (tau, b2, b2p), dt = timed(run)
    # the level is the trivalent one, independently recomputed
    tau_direct = (2 * 5.0 + math.log((xi(1000) + 1000) / 0.05)) / 1000
    ok = (close(tau, 0.0199, 5e-4) and tau == tau_direct and close(b2, 0.679, 0.005)
          and close(b2p, 0.660, 0.005) and dt < 0.100)
    return ok, f"tau={tau:.6f} B2={b2:.4f} B2'={b2p:.4f} t={dt * 1e3:.1f}ms"


# 3 ------------------------------------------------------------------------

def _xi_exact(m):
    return sum(Fraction(math.comb(m, k)) * Fraction(k, m) ** k * Fraction(m - k, m) ** (m - k)
               for k in range(m + 1))


def check_3():
    def run():
        bad = []
        exact_ok = xi(1) == 2.0 and xi(2) == 2.5
        for m in range(1, 21):
            ex = _xi_exact(m)
            if abs(Fraction(xi(m)) - ex) > ex * Fraction(1, 10 ** 14):
                bad.append(("exact", m))
        grid = np.unique(np.round(np.logspace(np.log10(2), 5, 60)).astype(int))
        for m in grid:
            v = xi(int(m))
            if not math.sqrt(m) <= v <= 2 * math.sqrt(m):
                bad.append(("sqrt", int(m)))
        return exact_ok, bad, grid.size

    (exact_ok, bad, n), dt = timed(run)
    ok = exact_ok and not bad and dt < 1.0
    return ok, f"xi(1)={xi(1)!r} xi(2)={xi(2)!r} grid={n} points violations={bad} t={dt:.3f}s"


# 4 ------------------------------------------------------------------------

def check_4():
    rng = np.random.default_rng(4)

    def run():
        worst = dict(forms=0.0, esd=0.0)
        fails = []
        for _ in range(1000):
            F = random_vote_matrix(rng)
            q = random_posterior(rng, F.n, sparse=bool(rng.integers(2)))
            s = summarize(margins(F, q))
            r, d = s.gibbs_risk, s.disagreement
            worst["esd"] = max(worst["esd"], abs(s.joint_error + s.joint_success + d - 1))
            if d > 2 * r * (1 - r) + 1e-12:
                fails.append("d<=2r(1-r)")
            if s.bayes_risk > 2 * r + 1e-12:
                fails.append("R<=2r")
            if variance_upper_bound(q, F) < s.variance - 1e-12:
                fails.append("variance")
            if s.mu1 > 0:
                f = c_bound_forms(s.mu1, s.mu2)
                worst["forms"] = max(worst["forms"], max(f) - min(f))
                if s.bayes_risk > s.c_bound + 1e-12:
                    fails.append("R<=C")
                fl = optimality_flags(s.mu1, s.mu2)
                # skip draws where a flag sits on its boundary to within roundoff
                clear = abs(s.mu2 - s.mu1) > 1e-9 and abs(s.c_bound - 2 * r) > 1e-12
                if clear and not fl.moment_cond == fl.gibbs_vs_d == fl.cb_vs_2r:
                    fails.append("flags")
        return worst, fails

    (worst, fails), dt = timed(run)
    ok = worst["forms"] <= 1e-12 and worst["esd"] <= 1e-10 and not fails and dt < 5
    return ok, f"forms spread={worst['forms']:.2e} |e+s+d-1|={worst['esd']:.2e} failures={fails[:5]} t={dt:.2f}s"


# 5 ------------------------------------------------------------------------

def check_5():
    rng = np.random.default_rng(5)

    def run():
        worst_cb = worst_mu = 0.0
        sign_flips = done = 0
        while done < 200:
            F = random_vote_matrix(rng)
            q = random_posterior(rng, F.n)
            if np.abs(q.vote_weights).max() == 0:
                continue
            done += 1
            qu = quasi_uniformize(q)
            a, b = F.F @ q.q, F.F @ qu.q
            # votes within roundoff of zero carry no sign
            firm = np.abs(a) > 1e-12
            sign_flips += int(np.sum(np.sign(a[firm]) != np.sign(b[firm])))
            s, t = summarize(margins(F, q)), summarize(margins(F, qu))
            if s.mu1 > 1e-9:
                worst_cb = max(worst_cb, abs(s.c_bound - t.c_bound))
                target = t.mu1 * rng.uniform(0.01, 1)
                u = summarize(margins(F, rescale_margin(qu, target, F)))
                worst_mu = max(worst_mu, abs(u.mu1 - target))
                worst_cb = max(worst_cb, abs(u.c_bound - t.c_bound))
        return worst_cb, worst_mu, sign_flips

    (worst_cb, worst_mu, flips), dt = timed(run)
    ok = flips == 0 and worst_cb <= 1e-10 and worst_mu <= 1e-10 and dt < 5
    return ok, f"sign flips={flips} C-bound drift={worst_cb:.2e} margin miss={worst_mu:.2e} t={dt:.2f}s"


# 6 ------------------------------------------------------------------------

def _grid_qp(p, step=1e-3):
    """Best objective over exactly feasible points on a grid along the equality line."""
    i = int(np.argmax(np.abs(p.m)))
    j = 1 - i
    g = np.arange(0, p.upper + step / 2, step)
    other = (p.rhs - p.m[j] * g) / p.m[i]
    keep = (other >= 0) & (other <= p.upper)
    Q = np.zeros((keep.sum(), 2))
    Q[:, j], Q[:, i] = g[keep], other[keep]
    if not len(Q):
        return math.inf
    return float(np.min(np.einsum("ki,ij,kj->k", Q, p.M, Q) - Q @ p.a))


def check_6():
    rng = np.random.default_rng(6)

    def run():
        gaps, kkts, eqs, qu = [], [], [], True
        while len(gaps) < 50:
            F = random_vote_matrix(rng, m=int(rng.integers(5, 40)), n=2)
            top = max_realizable_margin(F)
            if top < 1e-3:
                continue
            mu = rng.uniform(0.05, 0.95) * top
            X = np.arange(F.m, dtype=float)[:, None]
            v = ExplicitVoters([lambda Z, j=j: F.base[Z[:, 0].astype(int), j] for j in range(2)])
            model = mincq_train(v, Dataset(X, F.y), mu)
            p = mincq_build(F, mu)
            gaps.append(abs(p.objective(model.q) - _grid_qp(p)))
            kkts.append(model.diagnostics["kkt_residual"])
            eqs.append(model.diagnostics["equality_residual"])
            qu &= model.posterior.is_quasi_uniform
        toy = Dataset([[0.0], [1.0], [0.2], [0.9]], [-1, 1, -1, 1])
        q1 = mincq_train(build_stumps(toy, 1), toy, 0.5).q.tolist()
        return max(gaps), max(kkts), max(eqs), qu, q1

    (gap, kkt, eq, qu, q1), dt = timed(run)
    ok = gap <= 2e-3 and kkt <= 1e-6 and eq <= 1e-8 and qu and q1 == [0.75] and dt < 10
    return ok, (f"max grid gap={gap:.2e} max KKT={kkt:.2e} max |m'q-rhs|={eq:.2e} "
                f"quasi-uniform={qu} n=1 toy q={q1} t={dt:.2f}s")


# 7 ------------------------------------------------------------------------

def _gaussian_task():
    rng = np.random.default_rng(0)
    train, test = two_gaussians(500, rng), two_gaussians(2000, rng)
    stats = attribute_stats(train)
    return tanh_normalize(train, stats), tanh_normalize(test, stats)


def _risk(model, data):
    return float(np.mean(model.predict(data.X) != data.y))


def check_7():
    train, test = _gaussian_task()

    def run():
        rbf_grid = [{"mu": float(mu), "gamma": g} for g in (0.5, 2.0) for mu in np.logspace(-4, -2, 5)]
        rbf = cross_validate(lambda p, tr: mincq_train(build_kernel_voters(tr, {"type": "rbf", "gamma": p["gamma"]}),
                                                       tr, p["mu"]), rbf_grid, train, folds=5, seed=0)
        stumps = build_stumps(train, 10)
        st_grid = [{"mu": float(mu)} for mu in np.logspace(-4, 0, 15)]
        st = cross_validate(lambda p, tr: mincq_train(stumps, tr, p["mu"]), st_grid, train, folds=5, seed=0)
        # baseline: every base stump with the same weight
        base_vote = np.sign(stumps.base_outputs(test) @ np.ones(stumps.n))
        return rbf, st, float(np.mean(base_vote != test.y))

    (rbf, st, base), dt = timed(run)
    r_rbf, r_st = _risk(rbf.model, test), _risk(st.model, test)
    ok = r_rbf <= 0.05 and r_st < base and dt < 120
    return ok, (f"RBF MinCq test risk={r_rbf:.4f} ({rbf.best_params}) stumps MinCq={r_st:.4f} "
                f"({st.best_params}) uniform stump vote={base:.4f} t={dt:.1f}s")


# 8 ------------------------------------------------------------------------

CBOUND = [.166, .050, .187, .252, .320, .215, .085, .005, .041, .050, .289, .010, .192, .389, .032, .101, .049]
RISK_S = [.169, .047, .199, .196, .320, .289, .120, .014, .041, .050, .289, .024, .250, .364, .041, .102, .060]
ROUNDS_1000 = [.172, .058, .199, .196, .340, .289, .085, .010, .043, .049, .295, .010, .202, .389, .046, .115, .060]


def check_8():
    sign_test(list(zip(CBOUND, RISK_S)))  # warm scipy

    def run():
        return sign_test(list(zip(CBOUND, ROUNDS_1000))), sign_test(list(zip(CBOUND, RISK_S)))

    (vs_all, vs_rs), dt = timed(run)
    ok = close(vs_all.p_value, 0.02, 0.01) and close(vs_rs.p_value, 0.05, 0.02) and dt < 1e-3
    return ok, (f"vs 1000 rounds p={vs_all.p_value:.4f} (w={vs_all.wins} l={vs_all.losses} t={vs_all.ties}); "
                f"vs R_S p={vs_rs.p_value:.4f} (w={vs_rs.wins} l={vs_rs.losses} t={vs_rs.ties}); "
                f"t={dt * 1e3:.2f}ms")


# 9 ------------------------------------------------------------------------

def _inputs(mu1, mu2, m, delta, kl, **kw):
    return BoundInputs(m=m, delta=delta, kl=kl, gibbs_risk=(1 - mu1) / 2, disagreement=(1 - mu2) / 2,
                       joint_error=(1 - 2 * mu1 + mu2) / 4, **kw)


def check_9():
    stats = [(0.3, 0.2), (0.6, 0.5)]
    ms, deltas = (200, 2000), (0.01, 0.1)

    def run():
        issues = []
        for mu1, mu2 in stats:
            for kl in (0.0, 3.0):
                table = {}
                for m in ms:
                    for dl in deltas:
                        inp = _inputs(mu1, mu2, m, dl, kl, m_unlabeled=100 * m, aligned=kl == 0.0,
                                      compression_size=1)
                        vals = {f.__name__: f(inp).value for f in (bound0, bound1, bound1_semi, bound2, bound2_prime)}
                        if kl == 0.0:
                            vals["bound3"] = bound3(inp).value
                            vals["bound3_prime"] = bound3_prime(inp).value
                            if vals["bound3_prime"] < vals["bound3"]:
                                issues.append(("3'>=3", mu1, m, dl))
                        if vals["bound1_semi"] > vals["bound1"]:
                            issues.append(("1'<=1", mu1, m, dl))
                        if not all(0 <= v <= 1 for v in vals.values()):
                            issues.append(("range", mu1, m, dl))
                        table[m, dl] = vals
                for name in table[ms[0], deltas[0]]:
                    for m in ms:
                        if table[m, deltas[1]][name] > table[m, deltas[0]][name] + 1e-12:
                            issues.append(("delta", name, m))
                    for dl in deltas:
                        if table[ms[1], dl][name] > table[ms[0], dl][name] + 1e-12:
                            issues.append(("m", name, dl))
        return issues

    issues, dt = timed(run)
    return not issues and dt < 1.0, f"violations={issues[:5]} t={dt:.3f}s"


CHECKS = [check_1, check_2, check_3, check_4, check_5, check_6, check_7, check_8, check_9]


def _report(k, ok, detail):
    return f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"


@pytest.mark.parametrize("k", range(1, 10))
def test_criterion(k, capsys):
    ok, detail = CHECKS[k - 1]()
    with capsys.disabled():
        print("\n" + _report(k, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    for k, check in enumerate(CHECKS, 1):
        print(_report(k, *check()))
