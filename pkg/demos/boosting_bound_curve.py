# Watching the C-bound and the PAC-Bayes bounds while boosting stumps
import sys
import numpy as np

from mvcbound import Dataset, build_stumps
from mvcbound.evaluation import CURVE_FIELDS, bound_curve, rows_to_csv, split_train_test

rng = np.random.default_rng(1)
m = 800
y = np.where(rng.random(m) < 0.5, -1, 1)
X = rng.standard_normal((m, 4)) + np.outer(y, (1.0, 0.6, 0.3, 0.0))
data = Dataset(X, y, "clouds4")
train, test = split_train_test(data, rng, 0.5)

rows = bound_curve(build_stumps(train, 10), train, test, rounds=60)

print("round  C_S     R_S     R_T     B1      B1s     B2")
for r in rows[::6]:
    fmt = lambda v: "   -  " if v is None else f"{v:.4f}"
    print(f"{r['round']:5d}  {fmt(r['c_bound_train'])}  {fmt(r['bayes_train'])}  {fmt(r['bayes_test'])}  "
          f"{fmt(r['B1'])}  {fmt(r['B1s'])}  {fmt(r['B2'])}")

# full table for plotting
if len(sys.argv) > 1:
    open(sys.argv[1], "w").write(rows_to_csv(rows, CURVE_FIELDS))
