"""
Benchmarks, files and the command line
======================================

Problems are described by small JSON documents.  Matrices can be swapped in
from Matrix Market files.  Benchmark suites turn convergence guarantees into
pass/fail assertions.
"""

import json
import os
import tempfile

from monosplit.harness import ProblemSpec, generate, run_benchmark, write_matrix
from monosplit.harness.cli import main

tmp = tempfile.mkdtemp()

###############################################################################
# Write a skew matrix and a problem file that points at it.

prob = generate(ProblemSpec("shifted_skew_linear", dim=50, kappa_Bsym=5.0, seed=3))
write_matrix(os.path.join(tmp, "N.mtx"), prob.N)
doc = {"kind": "shifted_skew_linear", "dim": 50, "seed": 7, "paths": {"N": "N.mtx"}}
with open(os.path.join(tmp, "problem.json"), "w") as fh:
    json.dump(doc, fh)

###############################################################################
# Solve from the command line entry point (exit code 0 means pass).

code = main(["solve", "--problem", os.path.join(tmp, "problem.json"), "--method", "aor",
             "--trace", os.path.join(tmp, "trace.csv")])
print("exit code", code)

###############################################################################
# A benchmark suite returns a report of checked assertions.

report = run_benchmark("gss")
print(report.suite, "passed" if report.passed else "failed",
      f"{len(report.assertions)} assertions in {report.seconds:.1f} s")
for a in report.assertions[:3]:
    print(" ", a.to_dict())
