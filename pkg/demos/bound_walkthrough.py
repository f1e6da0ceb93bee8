# From margin statistics to risk bounds for a majority vote
import math
import numpy as np

from mvcbound import kl_invert, xi
from mvcbound.bounds import BoundInputs, compute_bound

m, delta, kl = 1000, 0.05, 5.0

# how far can the true Gibbs risk sit from 0.30 and still look like 0.30?
tau = (kl + math.log(xi(m) / delta)) / m
lo, hi = kl_invert(0.30, tau, "inf"), kl_invert(0.30, tau, "sup")
print(f"xi({m}) = {xi(m):.3f}   level = {tau:.6f}")
print(f"Gibbs risk interval [{lo:.4f}, {hi:.4f}] -> twice the top: {2 * hi:.4f}")

# second-moment information: disagreement 0.40, joint error 0.10
mu2 = 1 - 2 * 0.40               # d = (1 - mu2)/2
mu1 = (1 + mu2 - 4 * 0.10) / 2    # e = (1 - 2 mu1 + mu2)/4
inp = BoundInputs(m=m, delta=delta, kl=kl, gibbs_risk=(1 - mu1) / 2, disagreement=0.40,
                  joint_error=0.10, m_unlabeled=100 * m, aligned=True, compression_size=1)
print(f"\nmu1 = {mu1:.2f}, mu2 = {mu2:.2f}, empirical C-bound = {1 - mu1 ** 2 / mu2:.4f}")

for bid in ("B0", "B1", "B1s", "B2", "B2p", "B3", "B3p"):
    rep = compute_bound(bid, inp)
    print(f"  {bid:4s} {rep.value:.4f}")

# the KL price: same statistics, growing divergence from the prior
print("\nKL     B1      B2")
for k in np.linspace(0, 20, 5):
    inp_k = BoundInputs(m=m, delta=delta, kl=float(k), gibbs_risk=(1 - mu1) / 2,
                        disagreement=0.40, joint_error=0.10)
    print(f"{k:4.0f}  {compute_bound('B1', inp_k).value:.4f}  {compute_bound('B2', inp_k).value:.4f}")
