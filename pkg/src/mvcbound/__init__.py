"""Weighted majority votes over self-complemented voters: C-bound, PAC-Bayesian bounds and MinCq."""

from .bounds import (BoundInputs, bound0, bound1, bound1_semi, bound2, bound2_prime, bound3,
                     bound3_prime, compute_bound, kl_qp_vs_uniform)
from .learners import (MinCqModel, adaboost_train, mincq_build, mincq_predict, mincq_train,
                       quasi_uniformize, rescale_margin)
from .margins import (c_bound, independent_voters_cb_bound, margins, optimality_flags, summarize,
                      variance_upper_bound)
from .numerics import (InfeasibleError, KlLevelSetQuery, QpProblem, golden_max, kl_bernoulli,
                       kl_invert, kl_trivalent, kkt_residual, maximize_fc_over_region,
                       solve_box_eq_qp, xi)
from .types import (BoundReport, Dataset, Example, MarginSummary, Posterior, VoteMatrix,
                    complement_index)
from .voters import (KernelSpec, build_kernel_voters, build_stumps, tanh_normalize, vote_matrix)

__version__ = "0.1.0"
