"""
HSS baseline
============

Hermitian/skew-Hermitian splitting alternates a solve with the symmetric
part and a solve with the shifted skew part.  Its rate depends on
``sqrt(kappa)`` of the symmetric part, like the accelerated IMEX scheme, but
the IMEX scheme never inverts the symmetric part.
"""

from monosplit import AccConfig, StepConfig, solve_agss, solve_flow
from monosplit.harness import ProblemSpec, generate

prob = generate(ProblemSpec("quadratic_plus_skew", dim=100, kappa_F=100.0, kappa_Bsym=10.0, seed=0))
_, hss = solve_flow(prob, "hss", StepConfig(stop_on="error", stop_tol=1e-8))
_, imex = solve_agss(prob, "imex", AccConfig(stop_on="error", stop_tol=1e-8, max_iter=10 ** 5))

###############################################################################
# Operation census of both runs.

print("hss ", hss.iterations, "steps", dict(hss.ops))
print("imex", imex.iterations, "steps", dict(imex.ops))
