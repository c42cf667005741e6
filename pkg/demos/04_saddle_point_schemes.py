"""
Saddle point problems
=====================

``min_u max_p f(u) - g(p) + <B u, p>`` is a monotone system with a block
skew part.  The package offers five schemes.  The accelerated, IMEX and
proximal schemes need ``g`` strongly convex.  The transformed primal-dual
schemes also cover linear constraints, where ``g`` is linear.
"""

import numpy as np

from monosplit import SaddleConfig, solve_saddle
from monosplit.harness import ProblemSpec, generate

###############################################################################
# A strongly convex, strongly concave instance.  GSS-TPD is left out here.
# After the rescaling its spectral condition requires, it needs roughly
# 8e5 steps on this instance.

prob = generate(ProblemSpec("bilinear_saddle", m=40, n=20, kappa_f=30.0, kappa_g=10.0, seed=0))
for scheme in ("agss", "imex", "prox", "atpd"):
    u, p, tr = solve_saddle(prob, scheme, SaddleConfig(stop_tol=1e-10, max_iter=10 ** 6))
    err = np.linalg.norm(np.concatenate([u, p]) - prob.x_star)
    print(f"{scheme:5s} {tr.iterations:6d} steps  error {err:.1e}  flags {tr.flags}")

###############################################################################
# An equality constrained QP.  The transformed schemes rescale the metrics
# automatically when the spectral condition they need does not hold.

qp = generate(ProblemSpec("constrained_qp", m=40, n=20, kappa_f=100.0, dual_metric="schur", seed=0))
for scheme in ("tpd", "atpd"):
    u, p, tr = solve_saddle(qp, scheme, SaddleConfig(stop_tol=1e-10, max_iter=10 ** 6))
    print(f"{scheme:5s} {tr.iterations:6d} steps  ||Bu - b|| = {np.linalg.norm(qp.B @ u - qp.b_rhs):.1e}")
