# MinCq on two overlapping Gaussian clouds, with stumps and with RBF voters
import numpy as np

from mvcbound import Dataset, build_kernel_voters, build_stumps, margins, mincq_train, summarize
from mvcbound.evaluation import cross_validate
from mvcbound.learners import adaboost_train
from mvcbound.voters import attribute_stats, tanh_normalize

rng = np.random.default_rng(0)


def clouds(m):
    y = np.where(rng.random(m) < 0.5, -1, 1)
    return Dataset(rng.standard_normal((m, 2)) + np.outer(y, (2.0, 0.5)), y)


train, test = clouds(500), clouds(2000)
stats = attribute_stats(train)
train, test = tanh_normalize(train, stats), tanh_normalize(test, stats)

stumps = build_stumps(train, 10)
F = stumps.vote_matrix(train)
vote = np.sign(stumps.base_outputs(test).sum(1))
print(f"{stumps.n} stumps, uniform vote test risk {np.mean(vote != test.y):.4f}")

# the margin mu trades first moment for second moment
print("\n  mu      train C-bound  test risk")
for mu in (0.01, 0.05, 0.2, 0.5):
    model = mincq_train(stumps, train, mu)
    s = summarize(margins(F, model.posterior))
    print(f"  {mu:<6}  {s.c_bound:.4f}         {model.risk(test):.4f}")

cv = cross_validate(lambda p, tr: mincq_train(stumps, tr, p["mu"]),
                    [{"mu": float(mu)} for mu in np.logspace(-4, 0, 15)], train)
print(f"\nstumps, mu by 5-fold CV = {cv.best_params['mu']:.4g}: test risk {cv.model.risk(test):.4f}")

grid = [{"mu": float(mu), "gamma": g} for g in (0.5, 2.0) for mu in np.logspace(-4, -2, 5)]
cv = cross_validate(lambda p, tr: mincq_train(build_kernel_voters(tr, {"type": "rbf", "gamma": p["gamma"]}),
                                              tr, p["mu"]), grid, train)
print(f"RBF voters, CV picks {cv.best_params}: test risk {cv.model.risk(test):.4f}")

run = adaboost_train(stumps, train, 200)
H = stumps.vote_matrix(test).F
print(f"AdaBoost, 200 rounds: test risk {np.mean(test.y * (H @ run.posteriors[-1].q) <= 0):.4f}")
