"""Experiment harnesses: cross-validation, stopping criteria for boosting, sign test, bound curves."""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import stats
from sklearn.model_selection import StratifiedKFold

from .bounds import BoundInputs, bound0, bound1, bound1_semi, bound2, bound2_prime, kl_qp_vs_uniform
from .learners import adaboost_train
from .margins import margins, summarize
from .types import Dataset


@dataclass
class ExperimentConfig:
    seed: int = 0
    max_train: int | None = 400
    train_fraction: float = 0.5
    folds: int = 5
    delta: float = 0.05
    validation_fraction: float = 0.1

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("need at least 2 folds")
        if not 0 < self.train_fraction < 1 or not 0 < self.validation_fraction < 1:
            raise ValueError("split fractions must lie in (0, 1)")


def split_train_test(data: Dataset, rng: np.random.Generator, fraction: float = 0.5,
                     max_train: int | None = None) -> tuple[Dataset, Dataset]:
    """Random split; the training part is ``fraction`` of the data, capped at ``max_train``."""
    perm = rng.permutation(data.m)
    k = int(round(fraction * data.m))
    if max_train is not None:
        k = min(k, max_train)
    k = min(max(k, 1), data.m - 1)
    return data.subset(perm[:k], data.name + ":train"), data.subset(perm[k:], data.name + ":test")


def _risk(model, data: Dataset) -> float:
    return float(np.mean(model.predict(data.X) != data.y))


def _fold_indices(y, folds, seed):
    k = min(folds, int(np.bincount((y > 0).astype(int)).min()))
    if k >= 2:
        return list(StratifiedKFold(k, shuffle=True, random_state=seed).split(np.zeros(y.size), y))
    # one class too rare to stratify
    perm = np.random.default_rng(seed).permutation(y.size)
    parts = np.array_split(perm, folds)
    return [(np.setdiff1d(perm, p), p) for p in parts]


@dataclass
class CvResult:
    best_params: dict
    best_index: int
    mean_risks: list
    failures: dict
    model: object = None


def cross_validate(train_fn: Callable, grid: Sequence[dict], data: Dataset, folds: int = 5,
                   seed: int = 0, refit: bool = True) -> CvResult:
    """Pick the grid cell with the lowest mean held-out risk, then refit on all of ``data``.

    ``train_fn(params, train)`` returns a model with ``predict(X)``. A cell that
    raises on any fold is recorded as failed. Ties go to the earliest cell.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("empty hyperparameter grid")
    splits = _fold_indices(data.y, folds, seed)
    means, failures = [], {}
    for i, params in enumerate(grid):
        try:
            risks = [_risk(train_fn(params, data.subset(tr)), data.subset(te)) for tr, te in splits]
            means.append(float(np.mean(risks)))
        except (ValueError, ArithmeticError) as exc:
            failures[i] = f"{params}: {exc}"
            means.append(math.nan)
    ok = [i for i, v in enumerate(means) if not math.isnan(v)]
    if not ok:
        raise ValueError("every grid cell failed:\n" + "\n".join(failures.values()))
    best = min(ok, key=lambda i: (means[i], i))
    model = train_fn(grid[best], data) if refit else None
    return CvResult(dict(grid[best]), best, means, failures, model)


def stopping_criterion_select(values: Sequence[float | None]) -> int:
    """1-based round with the smallest defined criterion value; the earliest one on ties."""
    vals = [(v, i) for i, v in enumerate(values) if v is not None and not math.isnan(v)]
    if not vals:
        raise ValueError("criterion undefined on every round")
    if len(vals) < len(values):
        warnings.warn(f"{len(values) - len(vals)} rounds with undefined criterion skipped", stacklevel=2)
    return min(vals)[1] + 1


def _round_curves(run, F_eval, y_eval):
    """Per-round majority-vote risk of a boosting run on another sample."""
    return [float(np.mean(y_eval * (F_eval @ p.q) <= 0)) for p in run.posteriors]


def _padded(curve, rounds):
    # after an early stop the final vote stays in place
    return list(curve) + [curve[-1]] * (rounds - len(curve))


def stopping_criterion_experiment(data: Dataset, build_voters: Callable, rounds: int = 1000,
                                  config: ExperimentConfig | None = None) -> dict:
    """Compare ways of picking the number of boosting rounds.

    Criteria: empirical C-bound on S, empirical risk on S, a held-out 10% of S,
    k-fold cross-validation, and simply running every round.
    ``build_voters(train)`` returns a voter set.
    """
    cfg = config or ExperimentConfig()
    rng = np.random.default_rng(cfg.seed)
    S, T = split_train_test(data, rng, cfg.train_fraction, cfg.max_train)
    voters = build_voters(S)
    run = adaboost_train(voters, S, rounds)
    FS, FT = voters.vote_matrix(S), voters.vote_matrix(T)
    test_risk = _round_curves(run, FT.F, T.y)
    cbounds, train_risks = [], []
    for p in run.posteriors:
        s = summarize(margins(FS, p))
        cbounds.append(s.c_bound)
        train_risks.append(s.bayes_risk)
    picks = {"cbound_train": stopping_criterion_select(cbounds),
             "bayes_train": stopping_criterion_select(train_risks)}
    out = {name: {"round": r, "test_risk": test_risk[r - 1]} for name, r in picks.items()}

    # validation: train on 90% of S, keep the vote best on the rest
    perm = rng.permutation(S.m)
    n_val = max(1, int(round(cfg.validation_fraction * S.m)))
    S_fit, S_val = S.subset(perm[n_val:]), S.subset(perm[:n_val])
    v_voters = build_voters(S_fit)
    v_run = adaboost_train(v_voters, S_fit, rounds)
    r_val = stopping_criterion_select(_round_curves(v_run, v_voters.vote_matrix(S_val).F, S_val.y))
    out["validation"] = {"round": r_val,
                         "test_risk": _round_curves(v_run, v_voters.vote_matrix(T).F, T.y)[r_val - 1]}

    # cross-validation on S, then the chosen round of the run on all of S
    fold_curves = []
    for tr, te in _fold_indices(S.y, cfg.folds, cfg.seed):
        Str, Ste = S.subset(tr), S.subset(te)
        f_voters = build_voters(Str)
        f_run = adaboost_train(f_voters, Str, rounds)
        fold_curves.append(_padded(_round_curves(f_run, f_voters.vote_matrix(Ste).F, Ste.y), rounds))
    cv_curve = np.mean(fold_curves, axis=0)[: len(run.posteriors)]
    r_cv = stopping_criterion_select(list(cv_curve))
    out["cv"] = {"round": r_cv, "test_risk": test_risk[r_cv - 1]}
    out["all_rounds"] = {"round": len(run.posteriors), "test_risk": test_risk[-1]}
    return {"dataset": data.name, "seed": cfg.seed, "m_train": S.m, "m_test": T.m,
            "rounds_run": len(run.posteriors), "criteria": out}


@dataclass(frozen=True)
class SignTestResult:
    p_value: float
    wins: int
    losses: int
    ties: int


def sign_test(pairs: Sequence[tuple[float, float]], ties: str = "exclude",
              method: str = "exact") -> SignTestResult:
    """One-sided sign test that method ``a`` (first entry, lower risk is better) beats ``b``.

    The p-value is ``P[Bin(N, 1/2) >= w]``. With ``ties="exclude"`` tied pairs
    are dropped; ``ties="split"`` gives half of them (rounded down) to each
    side. ``method="normal"`` swaps the binomial tail for its normal
    approximation without continuity correction.
    """
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
    if pairs.shape[0] == 0:
        raise ValueError("no pairs")
    w = int(np.sum(pairs[:, 0] < pairs[:, 1]))
    l = int(np.sum(pairs[:, 0] > pairs[:, 1]))
    t = pairs.shape[0] - w - l
    if ties == "split":
        w_eff, l_eff = w + t // 2, l + t // 2
    elif ties == "exclude":
        w_eff, l_eff = w, l
    else:
        raise ValueError(f"unknown tie policy {ties!r}")
    N = w_eff + l_eff
    if N == 0:
        warnings.warn("all pairs tied; p-value set to 1", stacklevel=2)
        return SignTestResult(1.0, w, l, t)
    if method == "exact":
        p = stats.binomtest(w_eff, N, 0.5, alternative="greater").pvalue
    elif method == "normal":
        p = stats.norm.sf((w_eff - N / 2) / math.sqrt(N / 4))
    else:
        raise ValueError(f"unknown method {method!r}")
    return SignTestResult(float(p), w, l, t)


CURVE_FIELDS = ("round", "mu1", "mu2", "gibbs_risk", "disagreement", "joint_error", "kl",
                "c_bound_train", "bayes_train", "bayes_test", "B0", "B1", "B1s", "B2", "B2p")


def bound_curve(voters, train: Dataset, test: Dataset, rounds: int, delta: float = 0.05) -> list[dict]:
    """Bounds and risks of the boosting vote after every round.

    The semi-supervised bound takes its disagreement from ``test`` (labels
    unused), with ``m_unlabeled = len(test)``. Rounds whose first moment is
    not positive carry ``None`` in the bound columns.
    """
    run = adaboost_train(voters, train, rounds)
    FS, FT = voters.vote_matrix(train), voters.vote_matrix(test)
    rows = []
    for t, p in enumerate(run.posteriors, 1):
        s = summarize(margins(FS, p))
        st = summarize(margins(FT, p))
        kl = kl_qp_vs_uniform(p)
        row = {"round": t, "mu1": s.mu1, "mu2": s.mu2, "gibbs_risk": s.gibbs_risk,
               "disagreement": s.disagreement, "joint_error": s.joint_error, "kl": kl,
               "c_bound_train": s.c_bound, "bayes_train": s.bayes_risk, "bayes_test": st.bayes_risk}
        if s.mu1 > 0:
            inp = BoundInputs.from_summary(s, delta=delta, kl=kl, m_unlabeled=test.m,
                                           disagreement_unlabeled=st.disagreement)
            for f in (bound0, bound1, bound1_semi, bound2, bound2_prime):
                rep = f(inp)
                row[rep.bound_id] = rep.value
        else:
            row.update(dict.fromkeys(("B0", "B1", "B1s", "B2", "B2p")))
        rows.append(row)
    return rows


def rows_to_csv(rows: Sequence[dict], fields: Sequence[str] | None = None) -> str:
    fields = list(fields or rows[0].keys())
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r.get(k) is None else _fmt(r[k])) for k in fields})
    return buf.getvalue()


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v
