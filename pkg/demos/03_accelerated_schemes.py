"""
Accelerated Gauss-Seidel schemes
================================

Three accelerated variants share a predictor ``x_hat`` and a corrector.
The IMEX form solves a shifted skew system per step.  The inexact form solves
it iteratively under a residual rule.  The explicit form needs only a
triangular solve.  Steps scale with ``sqrt(kappa)`` rather than ``kappa``.
"""

import math

from monosplit import AccConfig, solve_agss
from monosplit.harness import ProblemSpec, generate, slope_fit

###############################################################################
# Each scheme on one instance.  Ratios are only meaningful while the energy is
# well above roundoff, so the worst one is taken over ``E_k > 1e-8 E_0``; the
# violation count uses the absolute ``1e-12`` tolerance over the whole run.

prob = generate(ProblemSpec("quadratic_plus_skew", dim=50, kappa_F=1e3, kappa_Bsym=10.0, seed=1))
for scheme in ("imex", "imex_inexact", "explicit"):
    state, tr = solve_agss(prob, scheme, AccConfig(stop_on="error", stop_tol=1e-8,
                                                   max_iter=10 ** 6))
    E = tr.values()
    worst = tr.ratios()[E[:-1] > 1e-8 * E[0]].max()
    print(f"{scheme:13s} {tr.iterations:6d} steps  worst ratio {worst:.6f}"
          f"  bound {tr.theorem_rate:.6f}  violations {len(tr.ratio_violations())}")

###############################################################################
# Square-root scaling of the IMEX iteration count.

kappas, counts = (1e2, 1e3, 1e4), []
for kappa in kappas:
    p = generate(ProblemSpec("quadratic_plus_skew", dim=30, kappa_F=kappa, seed=0))
    cfg = AccConfig(alpha=1 / math.sqrt(kappa), inner_method="direct", stop_on="error",
                    stop_tol=1e-8, max_iter=10 ** 6)
    counts.append(solve_agss(p, "imex", cfg)[1].iterations)
fit = slope_fit(kappas, counts)
print("iterations", counts, f"slope {fit.slope:.3f}")
