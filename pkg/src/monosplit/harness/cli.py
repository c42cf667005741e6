"""Command line: ``monosplit {solve,bench,sweep,compare}``.

Exit codes: 0 pass, 1 assertion failure (a violated contraction check, a run
that misses its tolerance, or divergence), 2 usage error, 3 numerical failure.
"""

import argparse
import csv
import json
import math
import sys

from ..agss import AccConfig, solve_agss
from ..core import (DivergenceError, EstimationError, MalformedProblemError,
                    MonotoneProblem, NumericalFailure, UnsupportedProblemError)
from ..flow import StepConfig, solve_flow
from ..saddle import SaddleConfig, solve_saddle
from .bench import SUITES, run_benchmark, sweep, thread_count
from .generate import InfeasibleSpecError, generate
from .io import load_problem, write_trace
from .rates import estimate_rate, slope_fit

EXIT_PASS, EXIT_ASSERT, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

MONOTONE_METHODS = ("explicit_euler", "implicit_euler", "aor", "gss", "hss",
                    "agss_imex", "agss_inexact", "agss_explicit")
SADDLE_METHODS = ("agss", "imex", "prox", "tpd", "atpd")
SWEEP_KINDS = {"quadratic_plus_skew": ("imex", "explicit", "gss", "gd"),
               "constrained_qp": ("atpd",)}


class UsageError(Exception):
    pass


def _alpha(text):
    if text is None or text == "auto":
        return None
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"alpha must be a number or 'auto', got {text!r}")
    if not value > 0:
        raise argparse.ArgumentTypeError("alpha must be positive")
    return value


def _kappas(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad kappa list {text!r}")
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("kappas must be >= 1")
    return values


def run_method(problem, method, alpha=None, max_iter=10000, tol=1e-10):
    """Solve with one method; returns the trace."""
    if isinstance(problem, MonotoneProblem):
        if method not in MONOTONE_METHODS:
            raise UsageError(f"method {method!r} does not apply to this problem; "
                             f"choose from {MONOTONE_METHODS}")
        if method.startswith("agss_"):
            scheme = {"agss_imex": "imex", "agss_inexact": "imex_inexact",
                      "agss_explicit": "explicit"}[method]
            return solve_agss(problem, scheme, AccConfig(alpha=alpha, max_iter=max_iter,
                                                         stop_tol=tol))[1]
        return solve_flow(problem, method, StepConfig(alpha=alpha, max_iter=max_iter,
                                                      stop_tol=tol))[1]
    if method not in SADDLE_METHODS:
        raise UsageError(f"method {method!r} does not apply to this problem; "
                         f"choose from {SADDLE_METHODS}")
    return solve_saddle(problem, method, SaddleConfig(alpha=alpha, max_iter=max_iter,
                                                      stop_tol=tol))[2]


def _summary(method, trace):
    out = {"method": method, "alpha": trace.alpha, "iterations": trace.iterations,
           "converged": trace.converged, "residual": trace.residual[-1],
           "theorem_rate": trace.theorem_rate, "fitted_rate": None,
           "ratio_violations": None, "flags": trace.flags}
    try:
        out["fitted_rate"] = estimate_rate(trace).rho_hat
    except EstimationError:
        pass
    if trace.theorem_rate is not None and trace.err_norm[0] is not None:
        out["ratio_violations"] = len(trace.ratio_violations())
    return out


def _verdict(summary):
    return summary["converged"] and not summary["ratio_violations"]


def cmd_solve(args):
    problem = generate(load_problem(args.problem))
    trace = run_method(problem, args.method, args.alpha, args.max_iter, args.tol)
    if args.trace:
        write_trace(trace, args.trace)
    summary = _summary(args.method, trace)
    print(json.dumps(summary))
    return EXIT_PASS if _verdict(summary) else EXIT_ASSERT


def cmd_compare(args):
    problem = generate(load_problem(args.problem))
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if not methods:
        raise UsageError("no methods given")
    rows = []
    for method in methods:
        try:
            rows.append(_summary(method, run_method(problem, method, None, args.max_iter,
                                                    args.tol)))
        except DivergenceError as exc:
            rows.append({"method": method, "converged": False, "error": str(exc),
                         "ratio_violations": None})
    print(f"{'method':<16}{'iterations':>12}{'converged':>11}{'theorem':>10}{'fitted':>10}")
    for r in rows:
        rate = lambda v: "-" if v is None else f"{v:.4f}"
        print(f"{r['method']:<16}{r.get('iterations', '-')!s:>12}{r['converged']!s:>11}"
              f"{rate(r.get('theorem_rate')):>10}{rate(r.get('fitted_rate')):>10}")
    return EXIT_PASS if all(_verdict(r) for r in rows) else EXIT_ASSERT


def cmd_bench(args):
    report = run_benchmark(args.suite)
    if args.out:
        report.save(args.out)
    failed = report.failures()
    print(f"{report.suite}: {len(report.assertions) - len(failed)}/{len(report.assertions)} "
          f"assertions pass ({report.seconds:.1f} s)")
    for a in failed:
        print(f"  FAIL {a.name}: observed {a.observed}, expected {a.expected} "
              f"(tolerance {a.tolerance})")
    return EXIT_PASS if report.passed else EXIT_ASSERT


def cmd_sweep(args):
    if args.method not in SWEEP_KINDS[args.kind]:
        raise UsageError(f"method {args.method!r} is not swept on {args.kind}; "
                         f"choose from {SWEEP_KINDS[args.kind]}")
    traces = sweep(args.method, args.kappa_list, threads=thread_count(), dim=args.dim,
                   seed=args.seed, tol=args.tol)
    rows = []
    for kappa in args.kappa_list:
        tr = traces[kappa]
        try:
            fit = estimate_rate(tr)
            rho, r2 = fit.rho_hat, fit.r_squared
        except EstimationError:
            rho = r2 = math.nan
        rows.append({"kind": args.kind, "method": args.method, "kappa": kappa,
                     "iterations": tr.iterations, "converged": tr.converged,
                     "rho_hat": rho, "r_squared": r2})
    with open(args.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    converged = all(r["converged"] for r in rows)
    if converged and len(rows) >= 2:
        fit = slope_fit([r["kappa"] for r in rows], [r["iterations"] for r in rows])
        print(f"slope {fit.slope:.3f} (95% CI {fit.ci_low:.3f} .. {fit.ci_high:.3f}, "
              f"r^2 {fit.r_squared:.4f})")
    return EXIT_PASS if converged else EXIT_ASSERT


def build_parser():
    parser = argparse.ArgumentParser(prog="monosplit",
                                     description="Splitting solvers for monotone systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one problem and write its trace")
    p.add_argument("--problem", required=True, help="JSON problem file")
    p.add_argument("--method", required=True,
                   help=f"monotone: {', '.join(MONOTONE_METHODS)}; saddle: {', '.join(SADDLE_METHODS)}")
    p.add_argument("--alpha", type=_alpha, default=None, help="step size or 'auto'")
    p.add_argument("--max-iter", type=int, default=10000)
    p.add_argument("--tol", type=float, default=1e-10, help="residual tolerance")
    p.add_argument("--trace", help="CSV trace output")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run a benchmark suite")
    p.add_argument("--suite", required=True, choices=sorted(SUITES))
    p.add_argument("--out", help="JSON report output")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep", help="iteration counts over a condition-number list")
    p.add_argument("--kind", required=True, choices=sorted(SWEEP_KINDS))
    p.add_argument("--kappa-list", required=True, type=_kappas)
    p.add_argument("--method", required=True)
    p.add_argument("--dim", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-8, help="relative error target")
    p.add_argument("--out", required=True, help="CSV output")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="run several methods on one problem")
    p.add_argument("--problem", required=True)
    p.add_argument("--methods", required=True, help="comma separated")
    p.add_argument("--max-iter", type=int, default=10000)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, MalformedProblemError, InfeasibleSpecError,
            UnsupportedProblemError, ValueError, KeyError, OSError) as exc:
        print(f"monosplit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"monosplit: divergence: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    except (NumericalFailure, EstimationError, FloatingPointError, ArithmeticError) as exc:
        print(f"monosplit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
