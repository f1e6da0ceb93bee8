"""Numerical kernels shared by the bounds and the learners.

Everything here is scalar-oriented and dependency-light: bisection for KL
level sets, golden-section search for concave 1-d maximization, and a
projected-gradient solver for the box-constrained QP with one equality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, rel_entr

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
OPEN_EPS = 1e-12


class InfeasibleError(ValueError):
    """The feasible set of an optimization problem is empty."""


def _xi_terms(m: int, k: np.ndarray) -> np.ndarray:
    log_terms = gammaln(m + 1.0) - gammaln(k + 1.0) - gammaln(m - k + 1.0)
    inner = (k > 0) & (k < m)
    ki = k[inner]
    log_terms[inner] += ki * np.log(ki / m) + (m - ki) * np.log1p(-ki / m)
    return np.exp(log_terms)


def xi(m: int, chunk: int = 1 << 20) -> float:
    """``sum_k C(m,k) (k/m)^k (1-k/m)^(m-k)``, with ``0^0 = 1``.

    Each term is evaluated in the log domain. Terms are all of comparable size,
    so large ``m`` is summed in chunks to bound memory.
    """
    if int(m) != m or m < 1:
        raise ValueError(f"xi(m) needs a positive integer, got {m}")
    m = int(m)
    if m < chunk:
        # smallest first keeps fsum's input well ordered
        return math.fsum(np.sort(_xi_terms(m, np.arange(m + 1, dtype=float))))
    parts = [_xi_terms(m, np.arange(a, min(a + chunk, m + 1), dtype=float)).sum()
             for a in range(0, m + 1, chunk)]
    return math.fsum(parts)


def kl_bernoulli(q, p):
    """KL divergence between Bernoulli(q) and Bernoulli(p); may be ``inf``."""
    return rel_entr(q, p) + rel_entr(1.0 - q, 1.0 - p)


def kl_trivalent(q1, q2, p1, p2):
    """KL divergence between the 3-outcome laws (q1, q2, 1-q1-q2) and (p1, p2, 1-p1-p2)."""
    if all(isinstance(v, float) for v in (q1, q2, p1, p2)):
        # scalar path: the region search calls this tens of thousands of times
        q3, p3 = max(1.0 - q1 - q2, 0.0), max(1.0 - p1 - p2, 0.0)
        return _rel_entr1(q1, p1) + _rel_entr1(q2, p2) + _rel_entr1(q3, p3)
    q3 = np.maximum(1.0 - q1 - q2, 0.0)
    p3 = np.maximum(1.0 - p1 - p2, 0.0)
    return rel_entr(q1, p1) + rel_entr(q2, p2) + rel_entr(q3, p3)


def _rel_entr1(x: float, y: float) -> float:
    # same conventions as scipy's rel_entr, without ufunc overhead
    if x > 0 and y > 0:
        r = x / y
        if 0.5 < r < 2:
            return x * math.log1p((x - y) / y)
        return x * math.log(r) if r < math.inf else x * (math.log(x) - math.log(y))
    if x == 0 and y >= 0:
        return 0.0
    return math.inf


def _bisect(pred, lo: float, hi: float, tol: float, max_iter: int) -> tuple[float, float, int]:
    """Shrink [lo, hi] keeping pred(lo) true and pred(hi) false; returns (lo, hi, iterations)."""
    it = 0
    while hi - lo > tol and it < max_iter:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            lo = mid
        else:
            hi = mid
        it += 1
    return lo, hi, it


def _bisect_level(g, inside, outside, tol, max_iter):
    """Bisect between ``inside`` (g <= 0) and ``outside`` (g > 0).

    Stops once the bracket is narrower than ``tol`` and the level is met to
    ``tol`` as well, or after ``max_iter`` halvings. Returns (inside, outside, iterations).
    """
    it = 0
    while it < max_iter:
        if abs(outside - inside) <= tol and -g(inside) <= tol:
            break
        mid = 0.5 * (inside + outside)
        if mid in (inside, outside):
            break
        if g(mid) <= 0:
            inside = mid
        else:
            outside = mid
        it += 1
    return inside, outside, it


def kl_invert(q: float, tau: float, direction: str = "sup", cap: float = 1.0,
              tol: float = 1e-12, max_iter: int = 60, full_output: bool = False):
    """Edge of the level set ``{r : kl(q || r) <= tau}``.

    ``direction="sup"`` returns the largest such ``r`` in ``[q, cap]`` (``cap``
    itself when the level is not reached below it); ``"inf"`` returns the
    smallest ``r`` in ``[0, q]``.
    """
    if tau < 0:
        raise ValueError(f"level tau must be non-negative, got {tau}")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must be a probability, got {q}")
    info = {"iterations": 0, "capped": False}
    if direction not in ("sup", "inf"):
        raise ValueError(f"direction must be 'sup' or 'inf', got {direction!r}")
    if tau == 0.0:
        # the level set is {q}; bisection would stop on kl's roundoff floor instead
        r = min(q, cap) if direction == "sup" else q
        return (float(r), {**info, "residual": 0.0}) if full_output else float(r)
    if direction == "sup":
        if q >= cap or kl_bernoulli(q, cap) <= tau:
            r = cap
            info["capped"] = True
        else:
            r, _, info["iterations"] = _bisect_level(lambda r: kl_bernoulli(q, r) - tau, q, cap, tol, max_iter)
    elif kl_bernoulli(q, 0.0) <= tau:
        r = 0.0
        info["capped"] = True
    else:
        r, _, info["iterations"] = _bisect_level(lambda r: kl_bernoulli(q, r) - tau, q, 0.0, tol, max_iter)
    r = float(r)
    if full_output:
        info["residual"] = float(kl_bernoulli(q, r) - tau) if not info["capped"] else 0.0
        return r, info
    return r


@dataclass(frozen=True)
class KlLevelSetQuery:
    q: float
    tau: float
    direction: str = "sup"
    cap: float = 1.0

    def solve(self) -> float:
        return kl_invert(self.q, self.tau, self.direction, self.cap)


def golden_max(f, a: float, b: float, tol: float = 1e-10, max_iter: int = 200):
    """Maximize a concave (unimodal) ``f`` on ``[a, b]`` by golden-section search.

    Returns ``(x, f(x), iterations)``; the endpoints are compared at the end so a
    maximum on the boundary is reported exactly.
    """
    if b < a:
        raise ValueError("empty interval")
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    it = 0
    while b - a > tol and it < max_iter:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = f(x1)
        it += 1
    best = max([(f1, x1), (f2, x2), (f(a), a), (f(b), b)])
    return best[1], best[0], it


def c_bound_de(d: float, e: float) -> float:
    """The C-bound written with disagreement ``d`` and joint error ``e``."""
    return 1.0 - (1.0 - (2.0 * e + d)) ** 2 / (1.0 - 2.0 * d)


def _slice_frame(d_s, e_s, tau, d, e_cap):
    """Constraint interval of ``e`` at fixed ``d`` and the kl-closest point in it, or None.

    The kl-slice is convex in ``e`` with its minimum at ``e_star``, so the
    slice meets the constraints exactly when kl at the clipped ``e_star`` is
    within ``tau``.
    """
    if d >= 0.5:
        return None
    # d <= 2(sqrt(e) - e)  <=>  sqrt(e) between the roots of t - t^2 = d/2
    root = math.sqrt(max(0.0, 1.0 - 2.0 * d))
    c_lo = ((1.0 - root) / 2.0) ** 2
    c_hi = min(((1.0 + root) / 2.0) ** 2, (1.0 - OPEN_EPS - d) / 2.0)
    if e_cap is not None:
        c_hi = min(c_hi, e_cap)
    if c_lo > c_hi:
        return None
    e_star = e_s * (1.0 - d) / (1.0 - d_s) if d_s < 1.0 else 0.0
    e_clip = min(max(e_star, c_lo), c_hi)
    if kl_trivalent(d_s, e_s, d, e_clip) > tau:
        return None
    return c_lo, c_hi, e_star, e_clip


def _e_slice(d_s, e_s, tau, d, e_cap):
    """Feasible interval of ``e`` at fixed ``d``, or None."""
    fr = _slice_frame(d_s, e_s, tau, d, e_cap)
    if fr is None:
        return None
    c_lo, c_hi, e_star, e_clip = fr
    k = lambda e: kl_trivalent(d_s, e_s, d, e)
    # only the sides of the kl-slice that can bind need a bisection
    if e_clip > e_star:
        lo = e_clip
    elif k(c_lo) <= tau:
        lo = c_lo
    else:
        lo = _bisect(lambda e: k(e) > tau, c_lo, e_clip, 1e-14, 200)[1]
    if e_clip < e_star:
        hi = e_clip
    elif k(c_hi) <= tau:
        hi = c_hi
    else:
        hi = _bisect(lambda e: k(e) <= tau, e_clip, c_hi, 1e-14, 200)[0]
    return lo, hi


@dataclass
class RegionMax:
    value: float
    d: float | None
    e: float | None
    diagnostics: dict = field(default_factory=dict)


def maximize_fc_over_region(d_s: float, e_s: float, tau: float, e_cap: float | None = None,
                            tol: float = 1e-11) -> RegionMax:
    """Supremum of the (d, e) form of the C-bound over the kl level set.

    The region is ``kl(d_s, e_s || d, e) <= tau`` intersected with
    ``d <= 2(sqrt(e) - e)``, ``2e + d < 1`` and optionally ``e <= e_cap``.
    The objective is concave, so the sup is found with an outer golden-section
    over ``d`` wrapping a golden-section over the e-slice at that ``d``.
    An empty region gives 1.
    """
    if tau < 0:
        raise ValueError(f"level tau must be non-negative, got {tau}")
    if not (0 <= d_s <= 1 and 0 <= e_s <= 1 and d_s + e_s <= 1 + 1e-12):
        raise ValueError(f"inadmissible empirical pair d={d_s}, e={e_s}")
    if tau == 0.0:
        # singleton region; bisection would leave a roundoff-wide sliver
        ok = (d_s <= 2 * (math.sqrt(e_s) - e_s) + 1e-15 and 2 * e_s + d_s <= 1 - OPEN_EPS
              and (e_cap is None or e_s <= e_cap))
        if not ok:
            return RegionMax(1.0, None, None, {"empty_region": True, "tau": tau})
        return RegionMax(min(1.0, max(0.0, c_bound_de(d_s, e_s))), d_s, e_s,
                         {"empty_region": False, "tau": tau})
    # projection of the kl region on d: {d : kl(d_s || d) <= tau}
    d_min = kl_invert(d_s, tau, "inf")
    d_max = min(kl_invert(d_s, tau, "sup"), 0.5)

    def inner(d):
        sl = _e_slice(d_s, e_s, tau, d, e_cap)
        if sl is None:
            return None
        return golden_max(lambda e: c_bound_de(d, e), sl[0], sl[1], tol=tol)[0]

    # find one feasible d, then the ends of the (convex) feasible d-interval
    d0 = None
    for cand in np.concatenate([[min(max(d_s, d_min), d_max)], np.linspace(d_min, d_max, 257)]):
        if _slice_frame(d_s, e_s, tau, float(cand), e_cap) is not None:
            d0 = float(cand)
            break
    if d0 is None:
        return RegionMax(1.0, None, None, {"empty_region": True, "tau": tau})
    feasible = lambda d: _slice_frame(d_s, e_s, tau, d, e_cap) is not None
    a = d_min if feasible(d_min) else _bisect(lambda d: not feasible(d), d_min, d0, 1e-14, 200)[1]
    b = d_max if feasible(d_max) else _bisect(feasible, d0, d_max, 1e-14, 200)[0]
    if not feasible(a):
        a = d0
    if not feasible(b):
        b = d0

    def outer(d):
        e = inner(d)
        return -math.inf if e is None else c_bound_de(d, e)

    d_best, v_best, it = golden_max(outer, a, b, tol=tol)
    e_best = inner(d_best)
    value = min(1.0, max(0.0, v_best))
    return RegionMax(value, d_best, e_best,
                     {"empty_region": False, "tau": tau, "d_range": (a, b),
                      "outer_iterations": it, "e_cap": e_cap})


# --------------------------------------------------------------------------
# QP: min q'Mq - a'q  s.t.  m'q = rhs,  0 <= q <= u


@dataclass
class QpProblem:
    M: np.ndarray
    a: np.ndarray
    m: np.ndarray
    rhs: float
    upper: float

    def __post_init__(self):
        self.M = np.asarray(self.M, dtype=float)
        self.a = np.asarray(self.a, dtype=float)
        self.m = np.asarray(self.m, dtype=float)
        n = self.a.size
        if self.M.shape != (n, n) or self.m.shape != (n,):
            raise ValueError("inconsistent QP dimensions")
        if not np.allclose(self.M, self.M.T, atol=1e-10, rtol=0):
            raise ValueError("M must be symmetric")
        self.M = 0.5 * (self.M + self.M.T)

    @property
    def n(self) -> int:
        return self.a.size

    def achievable(self) -> tuple[float, float]:
        """Range of ``m'q`` over the box."""
        return (self.upper * np.minimum(self.m, 0).sum(), self.upper * np.maximum(self.m, 0).sum())

    def objective(self, q) -> float:
        return float(q @ self.M @ q - self.a @ q)

    def gradient(self, q) -> np.ndarray:
        return 2.0 * (self.M @ q) - self.a


@dataclass
class QpResult:
    q: np.ndarray
    objective: float
    kkt_residual: float
    multiplier: float
    iterations: int
    converged: bool
    polished: bool


def project_box_hyperplane(z, m, rhs, upper):
    """Euclidean projection of ``z`` on ``{q : 0 <= q <= upper, m'q = rhs}``.

    The projection is ``clip(z - lam * m)`` where ``lam`` zeroes the monotone
    piecewise-linear function ``g(lam) = m'clip(z - lam m) - rhs``. A binary
    search over the sorted breakpoints finds the linear piece holding the root,
    which is then solved exactly.
    """
    nz = m != 0
    if not np.any(nz):
        if abs(rhs) > 1e-12:
            raise InfeasibleError("m is zero but rhs is not")
        return np.clip(z, 0.0, upper)
    g = lambda lam: m @ np.clip(z - lam * m, 0.0, upper) - rhs
    bp = np.unique(np.concatenate([z[nz] / m[nz], (z[nz] - upper) / m[nz]]))
    # g is non-increasing: find j with g(bp[j]) >= 0 >= g(bp[j+1])
    if g(bp[0]) <= 0:
        lam = bp[0]
    elif g(bp[-1]) >= 0:
        lam = bp[-1]
    else:
        lo, hi = 0, bp.size - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if g(bp[mid]) >= 0:
                lo = mid
            else:
                hi = mid
        t = z - 0.5 * (bp[lo] + bp[hi]) * m
        free = (t > 0) & (t < upper)
        den = m[free] @ m[free]
        if den == 0:
            lam = bp[lo]
        else:
            lam = (m[free] @ z[free] + upper * m[t >= upper].sum() - rhs) / den
            lam = min(max(lam, bp[lo]), bp[hi])
    q = np.clip(z - lam * m, 0.0, upper)
    return _fix_equality(q, m, rhs, upper)


def _fix_equality(q, m, rhs, upper):
    # spread the leftover equality error over coordinates with room to move
    q = q.copy()
    for _ in range(3):
        err = rhs - m @ q
        if abs(err) < 1e-15:
            break
        room = np.where(err * m > 0, upper - q, q)
        free = (room > 1e-14) & (m != 0)
        if not np.any(free):
            break
        w = np.zeros_like(q)
        w[free] = np.sign(m[free]) * np.sign(err)
        denom = m @ w
        if denom == 0:
            break
        q = np.clip(q + w * err / denom, 0.0, upper)
    return q


def kkt_residual(p: QpProblem, q) -> tuple[float, float]:
    """Smallest achievable KKT violation and the equality multiplier attaining it.

    With ``r_i = grad_i + nu * m_i``: free coordinates need ``r_i = 0``, those at
    the lower bound ``r_i >= 0`` and those at the upper bound ``r_i <= 0``.
    """
    g = p.gradient(q)
    at_lo = q <= 0.0
    at_hi = q >= p.upper
    free = ~(at_lo | at_hi)

    def viol(nu):
        r = g + nu * p.m
        v = np.zeros_like(r)
        v[free] = np.abs(r[free])
        v[at_lo] = np.maximum(0.0, -r[at_lo])
        v[at_hi] = np.maximum(0.0, r[at_hi])
        return v.max(initial=0.0)

    nz = p.m != 0
    if not np.any(nz):
        return viol(0.0), 0.0
    cands = -g[nz] / p.m[nz]
    lo, hi = cands.min() - 1.0, cands.max() + 1.0
    # viol is convex piecewise-linear in nu: ternary search then a local check
    for _ in range(200):
        a = lo + (hi - lo) / 3
        b = hi - (hi - lo) / 3
        if viol(a) <= viol(b):
            hi = b
        else:
            lo = a
        if hi - lo < 1e-15 * max(1.0, abs(lo)):
            break
    nu = 0.5 * (lo + hi)
    if np.any(free & nz):
        # least-squares multiplier on the free set is often exact
        f = free & nz
        nu_ls = -float(g[f] @ p.m[f]) / float(p.m[f] @ p.m[f])
        if viol(nu_ls) < viol(nu):
            nu = nu_ls
    return float(viol(nu)), float(nu)


def _power_lmax(M, iters=100, seed=0):
    n = M.shape[0]
    if n <= 400:
        return float(np.linalg.eigvalsh(M)[-1])
    v = np.random.default_rng(seed).standard_normal(n)
    lam = 0.0
    for _ in range(iters):
        w = M @ v
        nrm = np.linalg.norm(w)
        if nrm == 0:
            return 0.0
        v = w / nrm
        new = float(v @ M @ v)
        if abs(new - lam) <= 1e-10 * max(abs(new), 1.0):
            lam = new
            break
        lam = new
    return lam * 1.01


def _polish(p: QpProblem, q, tol):
    """Solve the KKT system on the face picked out by ``q``; None if that fails."""
    u = p.upper
    at_lo = q <= 1e-12 * u
    at_hi = q >= u * (1 - 1e-12)
    free = ~(at_lo | at_hi)
    for _ in range(8):
        F = np.flatnonzero(free)
        fixed = np.where(at_hi, u, 0.0)
        fixed[free] = 0.0
        k = F.size
        K = np.zeros((k + 1, k + 1))
        K[:k, :k] = 2.0 * p.M[np.ix_(F, F)]
        K[:k, k] = p.m[F]
        K[k, :k] = p.m[F]
        rhs = np.empty(k + 1)
        rhs[:k] = p.a[F] - 2.0 * p.M[F] @ fixed
        rhs[k] = p.rhs - p.m @ fixed
        start = np.append(np.clip(q[F], 0.0, u), 0.0)
        # minimum-norm correction keeps the answer near q on flat faces
        sol = start + np.linalg.lstsq(K, rhs - K @ start, rcond=None)[0]
        cand = fixed.copy()
        cand[F] = sol[:k]
        if abs(p.m @ cand - p.rhs) > 1e-10 or not np.allclose(K @ sol, rhs, atol=1e-9):
            return None
        out_lo = free & (cand < 0)
        out_hi = free & (cand > u)
        r = p.gradient(cand) + sol[k] * p.m
        bad_lo = at_lo & (r < -tol)
        bad_hi = at_hi & (r > tol)
        if not (out_lo.any() or out_hi.any() or bad_lo.any() or bad_hi.any()):
            return np.clip(cand, 0.0, u)
        # primal-dual active set update
        at_lo = (at_lo & ~bad_lo) | out_lo
        at_hi = (at_hi & ~bad_hi) | out_hi
        free = ~(at_lo | at_hi)
    return None


def solve_box_eq_qp(p: QpProblem, tol: float = 1e-9, max_iter: int = 50000,
                    q0=None, check_every: int = 25, polish_every: int | None = None) -> QpResult:
    """Minimize ``q'Mq - a'q`` subject to ``m'q = rhs`` and ``0 <= q <= upper``.

    Accelerated projected gradient (step ``1/L``, adaptive restart) with an
    exact projection on the box-hyperplane intersection, stopped on the KKT
    residual. Now and then the active face is guessed from the iterate and
    the KKT system on it is solved directly; that point is kept only if it is
    feasible, KKT-valid and no worse than the iterate.
    """
    lo, hi = p.achievable()
    if not lo - 1e-12 <= p.rhs <= hi + 1e-12:
        raise InfeasibleError(
            f"equality m'q = {p.rhs:.6g} unreachable; achievable range [{lo:.6g}, {hi:.6g}]")
    if p.n <= 2000:
        eig = np.linalg.eigvalsh(p.M)
        if eig[0] < -1e-8:
            raise ValueError(f"M is not positive semi-definite (min eigenvalue {eig[0]:.3g})")
        lmax = float(eig[-1])
    else:
        lmax = _power_lmax(p.M)
    step = 1.0 / (2.0 * max(lmax, 1e-12))
    if polish_every is None:
        # a face solve costs O(n^3); keep it rare on big problems
        polish_every = 25 if p.n <= 100 else 400
    if q0 is None:
        q0 = np.full(p.n, p.upper / 2)
    x = project_box_hyperplane(np.asarray(q0, dtype=float), p.m, p.rhs, p.upper)
    y, t = x.copy(), 1.0
    f_x = p.objective(x)
    it = 0
    polished = False
    res, nu = kkt_residual(p, x)
    while it < max_iter and res > tol:
        x_new = project_box_hyperplane(y - step * p.gradient(y), p.m, p.rhs, p.upper)
        f_new = p.objective(x_new)
        if f_new > f_x:
            # restart momentum
            y, t = x.copy(), 1.0
            x_new = project_box_hyperplane(x - step * p.gradient(x), p.m, p.rhs, p.upper)
            f_new = p.objective(x_new)
        t_new = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        y = x_new + ((t - 1) / t_new) * (x_new - x)
        x, f_x, t = x_new, f_new, t_new
        it += 1
        if it % polish_every == 0:
            cand = _polish(p, x, tol)
            if cand is not None and p.objective(cand) <= f_x + 1e-12:
                r_c, nu_c = kkt_residual(p, cand)
                if r_c <= tol:
                    x, f_x, res, nu, polished = cand, p.objective(cand), r_c, nu_c, True
                    break
        if it % check_every == 0:
            res, nu = kkt_residual(p, x)
    res, nu = kkt_residual(p, x)
    return QpResult(x, p.objective(x), res, nu, it, res <= tol, polished)
