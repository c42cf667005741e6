"""Benchmark suites: each turns a convergence guarantee into checked assertions.

Every suite returns a `Report`.  Ratio checks compare consecutive records of
the designated Lyapunov functional, ``E_{k+1} <= rate * E_k + 1e-12``, and
report the worst excess ``max(E_{k+1} - rate * E_k)`` so that a pass reads
``observed <= 1e-12``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math
import os
import time
from typing import Callable

import numpy as np
import scipy.linalg as sla

from ..agss import AccConfig, solve_agss, strong_lyapunov_gap
from ..core import bregman, split_skew
from ..flow import StepConfig, hss_default_alpha, hss_factors, hss_step, solve_flow
from ..saddle import (Metric, SaddleConfig, SaddleProblem, approx_s_condition,
                      choose_scaling, coupling_norm, coupling_norm_dense,
                      positivity_min_eig, rescale, schur_spectrum, solve_saddle,
                      strong_saddle_gap)
from .generate import ProblemSpec, generate, random_skew
from .io import Report
from .rates import estimate_rate, slope_fit

__all__ = ["SUITES", "Suite", "run_benchmark", "ratio_excess", "thread_count",
           "RATIO_ATOL", "suite_aor", "suite_gss", "suite_imex", "suite_inexact",
           "suite_agss_explicit", "suite_saddle", "suite_tpd", "suite_atpd",
           "suite_hss", "suite_sweeps", "suite_properties", "iterations_to"]

RATIO_ATOL = 1e-12
THREADS_ENV = "MONOSPLIT_THREADS"


def thread_count():
    """Worker threads for sweeps, from ``MONOSPLIT_THREADS`` (default 1)."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def ratio_excess(trace, rate=None):
    """Worst ``E_{k+1} - rate^{dk} E_k`` over consecutive records."""
    rate = trace.theorem_rate if rate is None else rate
    E = trace.values()
    if E.size < 2:
        return -math.inf
    dk = np.diff(np.asarray(trace.k))
    return float(np.max(E[1:] - rate ** dk * E[:-1]))


def _ratio_check(rep, name, traces, rate_of=lambda t: t.theorem_rate):
    worst = max(ratio_excess(t, rate_of(t)) for t in traces)
    steps = sum(len(t) - 1 for t in traces)
    rep.check_le(name, worst, 0.0, RATIO_ATOL)
    rep.records.append({"name": name, "instances": len(traces), "steps_checked": steps,
                        "max_ratio": max(float(np.max(t.ratios()[t.values()[:-1] > 1e-8 * t.values()[0]],
                                                      initial=0.0)) for t in traces)})


def iterations_to(trace):
    """Iterations used by a converged run, ``inf`` otherwise."""
    return trace.iterations if trace.converged else math.inf


# ----------------------------------------------------------------- flow suites

def suite_aor(seeds=range(20), dim=200, L_values=(1.0, 10.0, 100.0), mu=1.0, max_iter=20000):
    """Shifted skew systems: per-step contraction and the squared-error bound."""
    rep = Report("aor")
    for L in L_values:
        traces, norm_ratio = [], 0.0
        for seed in seeds:
            prob = generate(ProblemSpec("shifted_skew_linear", dim=dim, mu=mu,
                                        kappa_Bsym=L / mu, seed=seed))
            split = split_skew(prob.N)
            alpha = 0.5 / split.L_Bsym
            _, tr = solve_flow(prob, "aor", StepConfig(alpha=alpha, max_iter=max_iter,
                                                       stop_on="error", stop_tol=1e-8),
                               split=split)
            traces.append(tr)
            e2 = np.asarray(tr.err_norm) ** 2
            k = np.asarray(tr.k, dtype=float)
            bound = (1 + mu * alpha) ** (-k) * 3 * e2[0]
            norm_ratio = max(norm_ratio, float(np.max(e2 / bound)))
        _ratio_check(rep, f"aor/L_Bsym={L:g}/lyapunov_ratio", traces)
        rep.check_le(f"aor/L_Bsym={L:g}/error_bound", norm_ratio, 1.0, 1e-12)
        rep.check(f"aor/L_Bsym={L:g}/converged", all(t.converged for t in traces))
    return rep


def _gss_family(kF_values=(1e2, 1e3), kB_values=(10.0, 1e2), seeds=(0, 1), dim=50):
    for kF in kF_values:
        for kB in kB_values:
            for seed in seeds:
                yield kF, kB, seed, generate(ProblemSpec(
                    "quadratic_plus_skew", dim=dim, kappa_F=kF, kappa_Bsym=kB, seed=seed))


def suite_gss(seeds=(0, 1), dim=50, max_iter=20000):
    """Quadratic plus skew: per-step contraction of the Bregman-corrected functional."""
    rep = Report("gss")
    for kF, kB, seed, prob in _gss_family(seeds=seeds, dim=dim):
        _, tr = solve_flow(prob, "gss", StepConfig(max_iter=max_iter, stop_on="error",
                                                   stop_tol=1e-8))
        _ratio_check(rep, f"gss/kF={kF:g}/kB={kB:g}/seed={seed}/lyapunov_ratio", [tr])
        rep.records.append({"name": f"gss/kF={kF:g}/kB={kB:g}/seed={seed}",
                            "alpha": tr.alpha, "iterations": tr.iterations,
                            "converged": tr.converged})
    return rep


# ---------------------------------------------------------------- agss suites

def suite_imex(kF_values=(1e2, 1e3, 1e4), kB=10.0, seeds=(0, 1), dim=50, max_iter=20000):
    """IMEX scheme with exact inner solves at ``alpha = 1/sqrt(kappa_F)``."""
    rep = Report("imex")
    for kF in kF_values:
        traces = []
        for seed in seeds:
            prob = generate(ProblemSpec("quadratic_plus_skew", dim=dim, kappa_F=kF,
                                        kappa_Bsym=kB, seed=seed))
            alpha = 1 / math.sqrt(prob.L_F / prob.mu)
            _, tr = solve_agss(prob, "imex", AccConfig(alpha=alpha, inner_method="direct",
                                                       max_iter=max_iter, stop_on="error",
                                                       stop_tol=1e-8))
            traces.append(tr)
        _ratio_check(rep, f"imex/kF={kF:g}/lyapunov_ratio", traces)
        rep.check(f"imex/kF={kF:g}/converged", all(t.converged for t in traces))
    return rep


def suite_inexact(seeds=(0, 1), dim=50, max_iter=5000, loose_iter=2000):
    """Inexact IMEX: ratio with the residual rule, and a violation without it."""
    rep = Report("inexact")
    enforced, violations, loose_runs = [], 0, 0
    for kF, kB, seed, prob in _gss_family(seeds=seeds, dim=dim):
        _, tr = solve_agss(prob, "imex_inexact", AccConfig(max_iter=max_iter, stop_on="error",
                                                           stop_tol=1e-8))
        enforced.append(tr)
        _, loose = solve_agss(prob, "imex_inexact", AccConfig(
            max_iter=loose_iter, stop_on="error", stop_tol=1e-8, enforce_rule=False,
            loose_tol=1e-1))
        violations += len(loose.ratio_violations(tr.theorem_rate, RATIO_ATOL))
        loose_runs += 1
        rep.records.append({"name": f"inexact/kF={kF:g}/kB={kB:g}/seed={seed}",
                            "iterations": tr.iterations,
                            "inner_iterations": int(sum(tr.inner_iters[1:])),
                            "loose_converged": loose.converged})
    _ratio_check(rep, "inexact/rule_enforced/lyapunov_ratio", enforced)
    rep.check("inexact/rule_disabled/violation_found", violations >= 1,
              expected=">= 1 violating step", observed=violations)
    return rep


def suite_agss_explicit(seeds=(0, 1), dim=50, max_iter=40000):
    """Explicit accelerated scheme on the GSS family, with GSS counts for reference."""
    rep = Report("agss_explicit")
    for kF, kB, seed, prob in _gss_family(seeds=seeds, dim=dim):
        split = split_skew(prob.N)
        _, tr = solve_agss(prob, "explicit", AccConfig(max_iter=max_iter, stop_on="error",
                                                       stop_tol=1e-8), split=split)
        name = f"agss_explicit/kF={kF:g}/kB={kB:g}/seed={seed}"
        _ratio_check(rep, name + "/lyapunov_ratio", [tr])
        # GSS is capped at the accelerated count: only "slower or not" is recorded
        _, g = solve_flow(prob, "gss", StepConfig(max_iter=max(tr.iterations, 1), stop_on="error",
                                                  stop_tol=1e-8, check_every=10), split=split)
        rep.records.append({"name": name, "alpha": tr.alpha, "iterations": tr.iterations,
                            "converged": tr.converged, "gss_converged_within": g.converged,
                            "gss_error_at_cap": g.err_norm[-1] / g.err_norm[0]})
    return rep


# -------------------------------------------------------------- saddle suites

def _saddle_family(seeds, configs, kind="bilinear_saddle", m=40, n=20, dual_metric="identity"):
    for cfg in configs:
        for seed in seeds:
            spec = ProblemSpec(kind, m=m, n=n, seed=seed, dual_metric=dual_metric, **cfg)
            yield cfg, seed, generate(spec)


def _kkt_match(rep, name, problem, u, p, tol=1e-7):
    err = float(np.linalg.norm(np.concatenate([u, p]) - problem.x_star))
    rep.check_le(name + "/kkt_match", err, 0.0, tol)


SADDLE_CONFIGS = ({"kappa_f": 10.0, "kappa_g": 10.0, "kappa_S": 10.0},
                  {"kappa_f": 100.0, "kappa_g": 10.0, "kappa_S": 10.0},
                  {"kappa_f": 10.0, "kappa_g": 100.0, "kappa_S": 100.0})


def suite_saddle(seeds=(0, 1), configs=SADDLE_CONFIGS, schemes=("agss", "imex", "prox"),
                 max_iter=50000):
    """Strongly convex-concave quadratic saddles (m = 40, n = 20)."""
    rep = Report("saddle")
    for cfg, seed, prob in _saddle_family(seeds, configs):
        tag = "/".join(f"{k}={v:g}" for k, v in cfg.items())
        for scheme in schemes:
            u, p, tr = solve_saddle(prob, scheme, SaddleConfig(max_iter=max_iter, stop_on="error", stop_tol=1e-10))
            name = f"saddle/{scheme}/{tag}/seed={seed}"
            _ratio_check(rep, name + "/lyapunov_ratio", [tr])
            _kkt_match(rep, name, prob, u, p)
    return rep


QP_CONFIGS = ({"kappa_f": 10.0, "kappa_S": 10.0}, {"kappa_f": 100.0, "kappa_S": 10.0},
              {"kappa_f": 10.0, "kappa_S": 100.0})


def suite_tpd(seeds=(0, 1), configs=QP_CONFIGS, max_iter=200000):
    """Gauss-Seidel transformed primal-dual scheme on equality-constrained QPs."""
    rep = Report("tpd")
    for cfg, seed, prob in _saddle_family(seeds, configs, kind="constrained_qp"):
        u, p, tr = solve_saddle(prob, "tpd", SaddleConfig(max_iter=max_iter, stop_on="error", stop_tol=1e-10,
                                                          check_every=1))
        name = "tpd/" + "/".join(f"{k}={v:g}" for k, v in cfg.items()) + f"/seed={seed}"
        _ratio_check(rep, name + "/lyapunov_ratio", [tr])
        _kkt_match(rep, name, prob, u, p)
        rep.records.append({"name": name, "alpha": tr.alpha, "rate": tr.theorem_rate,
                            "iterations": tr.iterations, "flags": list(tr.flags)})
    return rep


def suite_atpd(seeds=(0, 1), configs=QP_CONFIGS, max_iter=200000):
    """Accelerated transformed primal-dual scheme, identity and Schur dual metrics."""
    rep = Report("atpd")
    for metric in ("identity", "schur"):
        for cfg, seed, prob in _saddle_family(seeds, configs, kind="constrained_qp",
                                              dual_metric=metric):
            u, p, tr = solve_saddle(prob, "atpd", SaddleConfig(max_iter=max_iter, stop_on="error", stop_tol=1e-10))
            name = (f"atpd/I_Q={metric}/" + "/".join(f"{k}={v:g}" for k, v in cfg.items())
                    + f"/seed={seed}")
            _ratio_check(rep, name + "/lyapunov_ratio", [tr])
            _kkt_match(rep, name, prob, u, p)
            rep.records.append({"name": name, "alpha": tr.alpha, "iterations": tr.iterations,
                                "flags": list(tr.flags)})
    return rep


# ------------------------------------------------------------------ baseline

def hss_run(problem, alpha=None, tol=1e-8, max_iter=10000):
    """HSS iterates with errors in the Euclidean and the ``(alpha I + S)`` norms."""
    A = problem.linear_operator()
    alpha = hss_default_alpha(A) if alpha is None else alpha
    S = 0.5 * (A - A.T)
    W = alpha * np.eye(A.shape[0]) + S
    factors = hss_factors(A, alpha)
    x = np.zeros(problem.dim)
    xs = problem.x_star
    e0 = np.linalg.norm(x - xs)
    eu, en = [e0], [np.linalg.norm(W @ (x - xs))]
    for _ in range(max_iter):
        x = hss_step(A, problem.rhs, x, alpha, factors)
        eu.append(np.linalg.norm(x - xs))
        en.append(np.linalg.norm(W @ (x - xs)))
        if eu[-1] <= tol * e0:
            break
    return alpha, np.asarray(eu), np.asarray(en)


def suite_hss(seeds=(0, 1, 2), dim=100, kF_values=(10.0, 100.0), kB=10.0):
    """HSS contraction at its optimal step, and the operation census against IMEX."""
    rep = Report("hss")
    for kF in kF_values:
        for seed in seeds:
            prob = generate(ProblemSpec("quadratic_plus_skew", dim=dim, kappa_F=kF,
                                        kappa_Bsym=kB, seed=seed))
            ev = np.linalg.eigvalsh(prob.hessian)
            kappa = ev[-1] / ev[0]
            bound = (math.sqrt(kappa) - 1) / (math.sqrt(kappa) + 1)
            alpha, eu, en = hss_run(prob)
            name = f"hss/kF={kF:g}/seed={seed}"
            floor = 1e-13 * en[0]
            keep = en[:-1] > floor
            rep.check_le(name + "/natural_norm_contraction",
                         float(np.max(en[1:][keep] / en[:-1][keep])), bound, 0.05)
            fit = estimate_rate(eu ** 2)
            rep.check_le(name + "/fitted_error_contraction", math.sqrt(fit.rho_hat), bound, 0.05)
            _, hs = solve_flow(prob, "hss", StepConfig(max_iter=10000, stop_on="error",
                                                       stop_tol=1e-8))
            _, im = solve_agss(prob, "imex", AccConfig(max_iter=20000, stop_on="error",
                                                       stop_tol=1e-8))
            sym_ops = ("sym_solve", "resolvent")
            rep.check(name + "/imex_no_symmetric_inverse",
                      im.converged and not any(im.ops.get(o, 0) for o in sym_ops),
                      expected="converged, 0 symmetric-part solves",
                      observed={"converged": im.converged, "ops": dict(im.ops)})
            rep.check(name + "/hss_needs_symmetric_inverse",
                      hs.converged and hs.ops.get("sym_solve", 0) >= hs.iterations > 0,
                      expected="one symmetric-part solve per step",
                      observed={"converged": hs.converged, "ops": dict(hs.ops)})
            rep.records.append({"name": name, "alpha": alpha, "bound": bound,
                                "hss_iterations": hs.iterations, "imex_iterations": im.iterations})
    return rep


# -------------------------------------------------------------------- sweeps

@dataclass
class SweepCase:
    method: str
    kappa: float
    run: Callable


def _monotone_family(kappa, dim=30, seed=0):
    return generate(ProblemSpec("quadratic_plus_skew", dim=dim, kappa_F=kappa,
                                kappa_Bsym=1.0, seed=seed))


def _sweep_run(method, kappa, dim=30, seed=0, tol=1e-8):
    """Iterations to relative error ``tol`` and the trace, for one sweep point."""
    if method == "atpd":
        prob = generate(ProblemSpec("constrained_qp", m=2 * dim, n=dim, kappa_f=kappa,
                                    kappa_S=10.0, dual_metric="schur", seed=seed))
        _, _, tr = solve_saddle(prob, "atpd", SaddleConfig(max_iter=10 ** 6, stop_on="error",
                                                           stop_tol=tol))
        return tr
    prob = _monotone_family(kappa, dim, seed)
    if method == "imex":
        alpha = 1 / math.sqrt(prob.L_F / prob.mu)
        return solve_agss(prob, "imex", AccConfig(alpha=alpha, inner_method="direct",
                                                  max_iter=10 ** 6, stop_on="error",
                                                  stop_tol=tol))[1]
    if method == "explicit":
        return solve_agss(prob, "explicit", AccConfig(max_iter=10 ** 6, stop_on="error",
                                                      stop_tol=tol))[1]
    flow = {"gss": "gss", "gd": "explicit_euler"}[method]
    return solve_flow(prob, flow, StepConfig(max_iter=10 ** 7, stop_on="error",
                                             stop_tol=tol, check_every=10))[1]


SWEEP_PLAN = (("imex", (1e2, 1e3, 1e4), 0.5, 0.1),
              ("gss", (1e2, 1e3, 1e4), 1.0, 0.15),
              ("gd", (10.0, 30.0, 100.0), 2.0, 0.3),
              ("atpd", (1e2, 1e3, 1e4), 0.5, 0.1))


def sweep(method, kappas, threads=None, **kw):
    """Run ``method`` over ``kappas``; returns ``{kappa: trace}``.

    Points run concurrently on ``threads`` workers (``MONOSPLIT_THREADS`` by
    default); results are keyed by ``kappa`` so their order is irrelevant.
    """
    threads = thread_count() if threads is None else threads
    if threads == 1:
        return {k: _sweep_run(method, k, **kw) for k in kappas}
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = {k: pool.submit(_sweep_run, method, k, **kw) for k in kappas}
        return {k: f.result() for k, f in futures.items()}


def suite_sweeps(plan=SWEEP_PLAN, threads=None):
    """Iteration-count scaling laws with confidence intervals, and rate monotonicity."""
    rep = Report("sweeps")
    for method, kappas, target, tol in plan:
        traces = sweep(method, kappas, threads=threads)
        counts = [iterations_to(traces[k]) for k in kappas]
        name = f"sweeps/{method}"
        if not all(math.isfinite(c) for c in counts):
            rep.check(name + "/converged", False, observed=counts)
            continue
        fit = slope_fit(kappas, counts)
        rep.check_within(name + "/slope", fit.slope, target, tol)
        rhos = [estimate_rate(traces[k]).rho_hat for k in kappas]
        rep.check(name + "/rate_monotone_in_kappa",
                  all(a <= b for a, b in zip(rhos, rhos[1:])),
                  expected="nondecreasing in kappa", observed=rhos)
        rep.records.append({"name": name, "kappas": list(kappas), "iterations": counts,
                            "slope": fit.slope, "ci": [fit.ci_low, fit.ci_high],
                            "r_squared": fit.r_squared, "fitted_rates": rhos})
    return rep


# ---------------------------------------------------------------- properties

def _rel(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def suite_properties(n_instances=100, n_states=1000, seed=0):
    """Structural identities and inequalities on random instances."""
    rep = Report("properties")
    rng = np.random.default_rng(seed)

    # skew split roundtrip, Gaussian and integer entries
    worst = 0.0
    for i in range(50):
        n = int(rng.integers(2, 60))
        U = np.triu(rng.standard_normal((n, n)) if i % 2 else
                    rng.integers(-9, 10, (n, n)).astype(float), 1)
        N = U - U.T
        s = split_skew(N)
        worst = max(worst, np.abs(s.Bsym - 2 * s.B - N).max(), np.abs(2 * s.B.T - s.Bsym - N).max())
    rep.check_le("properties/split_roundtrip_exact", float(worst), 0.0)

    # triangular step against a dense solve
    worst = 0.0
    for i in range(50):
        n = int(rng.integers(5, 200))
        N = random_skew(n, float(rng.uniform(0.1, 100)), rng)
        s = split_skew(N)
        alpha = float(rng.uniform(0.05, 0.5)) / s.L_Bsym
        rhs = rng.standard_normal(n)
        for shift, scale, upper in ((1 + alpha, -2 * alpha, False), (1 + alpha, 2 * alpha, True)):
            M = shift * np.eye(n) + scale * (s.B.T if upper else s.B)
            worst = max(worst, _rel(s.solve(shift, scale, rhs, upper=upper),
                                    np.linalg.solve(M, rhs)))
    rep.check_le("properties/triangular_vs_dense", worst, 0.0, 1e-13)

    # Bregman three-term identity on quadratic and log-cosh F
    worst = 0.0
    for i in range(20):
        eps = 0.0 if i % 2 == 0 else 2.0
        prob = generate(ProblemSpec("quadratic_plus_skew", dim=20, kappa_F=50.0,
                                    kappa_Bsym=5.0, epsilon=eps, seed=1000 + i))
        D = lambda a, b: bregman(prob.F_value, prob.grad_F, a, b)
        for _ in range(50):
            x, y, z = rng.standard_normal((3, 20))
            lhs = (prob.grad_F(x) - prob.grad_F(y)) @ (y - z)
            terms = (D(z, x), D(z, y), D(y, x))
            scale = max(1.0, abs(lhs), *map(abs, terms))
            worst = max(worst, abs(lhs - (terms[0] - terms[1] - terms[2])) / scale)
    rep.check_le("properties/bregman_three_term", worst, 0.0, 1e-10)

    # strong Lyapunov inequalities
    worst = 0.0
    for i in range(5):
        prob = generate(ProblemSpec("quadratic_plus_skew", dim=20, kappa_F=100.0,
                                    kappa_Bsym=10.0, epsilon=0.0 if i % 2 else 1.0,
                                    seed=2000 + i))
        for _ in range(n_states // 5):
            x, y = rng.standard_normal((2, 20)) * rng.uniform(0.01, 10)
            gap = strong_lyapunov_gap(prob, x, y)
            worst = max(worst, -gap / max(1.0, abs(gap)))
    rep.check_le("properties/strong_acc_inequality", worst, 0.0, 1e-10)
    worst = 0.0
    for i, (cfg, _, prob) in enumerate(_saddle_family(range(5), SADDLE_CONFIGS[:1], m=12, n=6)):
        for _ in range(n_states // 5):
            x, y = rng.standard_normal((2, 18)) * rng.uniform(0.01, 10)
            gap = strong_saddle_gap(prob, x, y)
            worst = max(worst, -gap / max(1.0, abs(gap)))
    rep.check_le("properties/strong_saddle_inequality", worst, 0.0, 1e-10)

    # positivity of I_mu - 2 alpha Bsym at the bound, random metrics
    worst = math.inf
    for i in range(n_instances):
        m = int(rng.integers(2, 15))
        n = int(rng.integers(1, m + 1))
        prob = _random_saddle(rng, m, n)
        spec = schur_spectrum(prob)
        alpha = math.sqrt(prob.mu_f * prob.mu_g / (4 * spec.L_S))
        worst = min(worst, positivity_min_eig(prob, alpha))
    rep.check_le("properties/positivity_min_eig", -worst, 0.0, 1e-10)

    # coupling norm: Schur spectrum against the dense generalized eigensolve
    worst = 0.0
    for i in range(n_instances):
        m = int(rng.integers(2, 30))
        n = int(rng.integers(1, m + 1))
        prob = _random_saddle(rng, m, n)
        a, b = coupling_norm(prob), coupling_norm_dense(prob)
        worst = max(worst, abs(a - b) / b)
    rep.check_le("properties/coupling_norm_two_ways", worst, 0.0, 1e-8)

    # metric rescaling post-condition
    fails = []
    for i in range(50):
        kind = "constrained_qp" if i % 2 == 0 else "bilinear_saddle"
        m = int(rng.integers(4, 40))
        spec = ProblemSpec(kind, m=m, n=int(rng.integers(1, m + 1)), seed=3000 + i,
                           kappa_f=float(10 ** rng.uniform(0, 4)),
                           kappa_g=float(10 ** rng.uniform(0, 2)),
                           kappa_S=float(10 ** rng.uniform(0, 3)),
                           mu_f=float(10 ** rng.uniform(-2, 2)),
                           L_S=float(10 ** rng.uniform(-2, 2)))
        prob = generate(spec)
        scaled = rescale(prob, choose_scaling(prob))
        ok, low, high = approx_s_condition(scaled.mu_g, scaled.L_f, schur_spectrum(scaled))
        if not ok:
            fails.append({"seed": spec.seed, "margins": [low, high]})
    rep.check("properties/choose_scaling_condition", not fails, expected="50/50 satisfied",
              observed=f"{50 - len(fails)}/50 satisfied")
    return rep


def _random_saddle(rng, m, n):
    """Quadratic saddle with random diagonal metrics and constants."""
    def spd(k):
        Q = sla.qr(rng.standard_normal((k, k)))[0]
        return (Q * 10 ** rng.uniform(-1, 1, k)) @ Q.T
    B = rng.standard_normal((n, m))
    I_V = Metric.diagonal(10 ** rng.uniform(-1, 1, m))
    I_Q = Metric.diagonal(10 ** rng.uniform(-1, 1, n))
    H_f, H_g = spd(m), spd(n)
    return SaddleProblem.quadratic(0.5 * (H_f + H_f.T), rng.standard_normal(m),
                                   0.5 * (H_g + H_g.T), rng.standard_normal(n), B, I_V, I_Q)


# ------------------------------------------------------------------- runner

@dataclass
class Suite:
    """Named list of experiments, each a zero-argument callable returning a `Report`."""

    name: str
    experiments: list = field(default_factory=list)


SUITES = {
    "aor": suite_aor,
    "gss": suite_gss,
    "imex": suite_imex,
    "inexact": suite_inexact,
    "agss_explicit": suite_agss_explicit,
    "saddle": suite_saddle,
    "tpd": suite_tpd,
    "atpd": suite_atpd,
    "hss": suite_hss,
    "sweeps": suite_sweeps,
    "properties": suite_properties,
}


def run_benchmark(suite, **options):
    """Run a suite by name (see `SUITES`) or a custom `Suite`.

    Returns
    -------
    Report
        ``report.passed`` is true when every assertion holds; an empty suite
        gives an empty passing report.
    """
    start = time.perf_counter()
    if isinstance(suite, Suite):
        rep = Report(suite.name)
        for experiment in suite.experiments:
            rep.extend(experiment())
    elif suite in SUITES:
        rep = SUITES[suite](**options)
    else:
        raise KeyError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    rep.seconds = time.perf_counter() - start
    return rep
