"""Command-line entry point.

Exit status: 0 on success, 1 for bad input (files, flags, infeasible margin),
2 for numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import io as mio
from .bounds import BOUNDS, BoundInputs, compute_bound, kl_qp_vs_uniform
from .evaluation import (CURVE_FIELDS, ExperimentConfig, bound_curve, cross_validate, rows_to_csv,
                         split_train_test, stopping_criterion_experiment)
from .learners import MinCqModel, adaboost_train, mincq_train
from .margins import margins, summarize
from .voters import KernelSpec, attribute_stats, build_kernel_voters, build_stumps, tanh_normalize


class NumericalFailure(RuntimeError):
    pass


def _add_data(p, required=True):
    p.add_argument("--data", required=required, help="dataset file")
    p.add_argument("--format", choices=("csv", "sparse"), help="defaults from the file extension")


def _add_voters(p):
    p.add_argument("--voters", choices=("stumps", "rbf", "linear"), default="stumps")
    p.add_argument("--per-attribute", type=int, default=10)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--normalize", action="store_true", help="tanh-normalize features with train statistics")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mvcbound", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="flat key = value file; flags given here win")
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bound", help="evaluate one risk bound")
    b.add_argument("--id", dest="bound_id", required=True, choices=sorted(BOUNDS))
    b.add_argument("--m", type=int)
    b.add_argument("--delta", type=float, default=0.05)
    b.add_argument("--kl", type=float, default=0.0)
    b.add_argument("--rs", type=float, help="empirical Gibbs risk")
    b.add_argument("--ds", type=float, help="empirical disagreement")
    b.add_argument("--es", type=float, help="empirical joint error")
    b.add_argument("--mu1", type=float)
    b.add_argument("--mu2", type=float)
    b.add_argument("--m-unlabeled", type=int)
    b.add_argument("--ds-unlabeled", type=float)
    b.add_argument("--aligned", action="store_true")
    b.add_argument("--compression-size", type=int, default=0)
    b.add_argument("--model", help="model JSON; statistics are then taken on --data")
    _add_data(b, required=False)
    b.add_argument("--out")

    t = sub.add_parser("train-mincq", help="train MinCq for a fixed mu or by cross-validation")
    _add_data(t)
    _add_voters(t)
    t.add_argument("--mu", type=float)
    t.add_argument("--mu-grid", help="comma-separated values, chosen by cross-validation")
    t.add_argument("--folds", type=int, default=5)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out")

    a = sub.add_parser("train-adaboost", help="boost decision stumps")
    _add_data(a)
    a.add_argument("--per-attribute", type=int, default=10)
    a.add_argument("--rounds", type=int, default=100)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out")

    e = sub.add_parser("evaluate", help="risk, margin statistics and bounds of a saved model")
    e.add_argument("--model", required=True)
    _add_data(e)
    e.add_argument("--delta", type=float, default=0.05)
    e.add_argument("--out")

    x = sub.add_parser("experiment", help="experiment harnesses")
    xs = x.add_subparsers(dest="experiment", required=True)
    sc = xs.add_parser("stopping-criterion")
    bc = xs.add_parser("bound-curve")
    for p in (sc, bc):
        _add_data(p)
        p.add_argument("--per-attribute", type=int, default=10)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--delta", type=float, default=0.05)
        p.add_argument("--out")
    sc.add_argument("--rounds", type=int, default=1000)
    sc.add_argument("--max-train", type=int, default=400)
    bc.add_argument("--rounds", type=int, default=60)
    bc.add_argument("--train-fraction", type=float, default=0.5)
    ap.leaves = {"bound": b, "train-mincq": t, "train-adaboost": a, "evaluate": e,
                 "stopping-criterion": sc, "bound-curve": bc}
    return ap


def parse_args(argv=None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known_args, _ = pre.parse_known_args(argv)
    if known_args.config:
        # config entries become defaults of the chosen command, so flags win
        conf = mio.load_config(known_args.config)
        words = [w for w in argv if w in ap.leaves or w == "experiment"]
        leaf = ap.leaves.get(words[1] if words[:1] == ["experiment"] and len(words) > 1 else
                             (words[0] if words else ""))
        if leaf is not None:
            actions = {a.dest: a for a in leaf._actions}
            unknown = sorted(set(conf) - set(actions))
            if unknown:
                ap.error(f"unknown config keys: {', '.join(unknown)}")
            for k, v in conf.items():
                actions[k].required = False
                leaf.set_defaults(**{k: _coerce(v, actions[k])})
    return ap.parse_args(argv)


def _coerce(val: str, action):
    if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
        return val.lower() in ("1", "true", "yes", "on")
    # argparse applies the flag's type to string defaults
    return val


def _config_echo(args):
    return {k: v for k, v in sorted(vars(args).items()) if v is not None}


def _load(args):
    return mio.load_dataset(args.data, args.format)


def _make_voters(args, train):
    if args.voters == "stumps":
        return build_stumps(train, args.per_attribute)
    return build_kernel_voters(train, KernelSpec(args.voters, args.gamma))


def cmd_bound(args):
    if args.model:
        if not args.data:
            raise ValueError("--model needs --data")
        model = MinCqModel.from_dict(json.loads(open(args.model).read()))
        data = _load(args)
        s = summarize(margins(model.voters.vote_matrix(data), model.posterior))
        inp = BoundInputs.from_summary(s, delta=args.delta, kl=kl_qp_vs_uniform(model.posterior),
                                       aligned=True, compression_size=model.voters.compression_size,
                                       m_unlabeled=args.m_unlabeled, disagreement_unlabeled=args.ds_unlabeled)
    else:
        if args.m is None:
            raise ValueError("--m is required without --model")
        rs, ds = args.rs, args.ds
        if args.mu1 is not None:
            rs = (1 - args.mu1) / 2
        if args.mu2 is not None:
            ds = (1 - args.mu2) / 2
        es = args.es
        if es is None and args.mu1 is not None and args.mu2 is not None:
            es = (1 - 2 * args.mu1 + args.mu2) / 4
        inp = BoundInputs(m=args.m, delta=args.delta, kl=args.kl, gibbs_risk=rs, disagreement=ds,
                          joint_error=es, m_unlabeled=args.m_unlabeled,
                          disagreement_unlabeled=args.ds_unlabeled,
                          compression_size=args.compression_size, aligned=args.aligned)
    out = compute_bound(args.bound_id, inp).to_dict()
    out["config"] = _config_echo(args)
    return mio.dumps(out)


def _prepare(args, data):
    if getattr(args, "normalize", False):
        stats = attribute_stats(data)
        data = tanh_normalize(data, stats)
        return data, [s.tolist() for s in stats]
    return data, None


def cmd_train_mincq(args):
    data, norm = _prepare(args, _load(args))
    if (args.mu is None) == (args.mu_grid is None):
        raise ValueError("give exactly one of --mu or --mu-grid")

    def fit(params, train):
        model = mincq_train(_make_voters(args, train), train, params["mu"])
        if not model.diagnostics["converged"]:
            raise NumericalFailure(f"QP did not converge (KKT residual {model.diagnostics['kkt_residual']:.3g})")
        return model

    cv = None
    if args.mu is not None:
        model = fit({"mu": args.mu}, data)
    else:
        grid = [{"mu": float(v)} for v in args.mu_grid.split(",")]
        res = cross_validate(fit, grid, data, folds=args.folds, seed=args.seed)
        model = res.model
        cv = {"grid": grid, "mean_risks": res.mean_risks, "failures": res.failures}
    out = model.to_dict()
    out.update(config=_config_echo(args), seed=args.seed, normalization=norm,
               train_risk=model.risk(data), cv=cv)
    return mio.dumps(out)


def cmd_train_adaboost(args):
    data = _load(args)
    voters = build_stumps(data, args.per_attribute)
    run = adaboost_train(voters, data, args.rounds)
    F = voters.vote_matrix(data)
    rounds = []
    for t, p in enumerate(run.posteriors, 1):
        s = summarize(margins(F, p))
        rounds.append({"round": t, "voter": int(run.chosen[t - 1]), "alpha": float(run.alphas[t - 1]),
                       "train_risk": s.bayes_risk, "c_bound": s.c_bound})
    out = {"voters": voters.to_dict(), "q": run.posteriors[-1].q.tolist() if run.posteriors else None,
           "rounds": rounds, "stopped_early": run.stopped_early,
           "config": _config_echo(args), "seed": args.seed}
    return mio.dumps(out)


def cmd_evaluate(args):
    model = MinCqModel.from_dict(json.loads(open(args.model).read()))
    data = _load(args)
    s = summarize(margins(model.voters.vote_matrix(data), model.posterior))
    inp = BoundInputs.from_summary(s, delta=args.delta, kl=kl_qp_vs_uniform(model.posterior),
                                   aligned=True, compression_size=model.voters.compression_size)
    bounds = {bid: compute_bound(bid, inp).value for bid in ("B0", "B1", "B2", "B2p", "B3")}
    if inp.compression_size == 1 and inp.m >= 3:
        bounds["B3p"] = compute_bound("B3p", inp).value
    out = {"risk": model.risk(data), "summary": s.to_dict(), "bounds": bounds,
           "config": _config_echo(args)}
    return mio.dumps(out)


def cmd_stopping(args):
    data = _load(args)
    cfg = ExperimentConfig(seed=args.seed, max_train=args.max_train, delta=args.delta)
    res = stopping_criterion_experiment(data, lambda tr: build_stumps(tr, args.per_attribute),
                                        rounds=args.rounds, config=cfg)
    res["config"] = _config_echo(args)
    return mio.dumps(res)


def cmd_bound_curve(args):
    data = _load(args)
    rng = np.random.default_rng(args.seed)
    train, test = split_train_test(data, rng, args.train_fraction)
    rows = bound_curve(build_stumps(train, args.per_attribute), train, test, args.rounds, args.delta)
    return rows_to_csv(rows, CURVE_FIELDS)


def dispatch(args) -> str:
    if args.command == "experiment":
        return {"stopping-criterion": cmd_stopping, "bound-curve": cmd_bound_curve}[args.experiment](args)
    return {"bound": cmd_bound, "train-mincq": cmd_train_mincq, "train-adaboost": cmd_train_adaboost,
            "evaluate": cmd_evaluate}[args.command](args)


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        text = dispatch(args)
    except (NumericalFailure, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    mio.write_text(args.out, text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
