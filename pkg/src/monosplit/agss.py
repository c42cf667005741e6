"""Accelerated schemes built on the flow

    x' = y - x,    y' = x - y - (grad F(x) + N y) / mu.

Three discretizations share the predictor ``x_hat = (x + alpha y)/(1 + alpha)``
and a gradient-free corrector for ``x``:

* ``imex``: implicit in ``N``; a shifted skew solve per step, rate
  ``1/(1 + alpha)`` for ``alpha = sqrt(mu / L_F)``.
* ``imex_inexact``: the same solve stopped as soon as the inner residual
  passes a computable test, rate ``1/(1 + alpha/2)``.
* ``explicit``: the skew term handled by a lower triangular sweep, rate
  ``1/(1 + alpha/2)`` for ``alpha = min(mu/(2 L_Bsym), sqrt(mu/(2 L_F)))``.
"""

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .core import (ConvergenceTrace, DivergenceError, NumericalFailure, SkewSplit,
                   UnsupportedProblemError, inv_or_inf, lyapunov_acc,
                   lyapunov_acc_alphaB, split_skew, _to_dense, DENSE_LIMIT)
from .flow import BOUNDARY_MARGIN, DIVERGENCE_WINDOW, aor_linear_step

__all__ = [
    "AccState", "CorrectionParams", "InnerSolveReport", "ShiftedSkewSolver",
    "AccConfig", "max_step_size", "correction_extrapolate",
    "shifted_skew_solve", "agss_imex_step", "agss_imex_inexact_step",
    "agss_explicit_step", "flow_spectrum", "strong_lyapunov_gap",
    "default_acc_alpha", "solve_agss", "IMEX", "INEXACT", "EXPLICIT",
    "AGSS_SCHEMES", "inexact_rule",
]

AGSS_SCHEMES = ("imex", "imex_inexact", "explicit")
INNER_METHODS = ("direct", "cg_normal", "aor_inner")
DIRECT_LIMIT = 2048


@dataclass
class AccState:
    """Iterate pair ``(x, y)`` of an accelerated scheme."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.shape != self.y.shape:
            raise ValueError("x and y must have the same shape")


@dataclass(frozen=True)
class CorrectionParams:
    """Constants of the corrector ``x_new = x_hat + alpha c2/(1 + alpha c1) (y_new - y)``.

    ``c3`` enters only the largest admissible step size.
    """

    c1: float
    c2: float
    c3: float

    def __post_init__(self):
        if min(self.c1, self.c2, self.c3) <= 0:
            raise ValueError("correction constants must be positive")


def IMEX(mu):
    return CorrectionParams(1.0, 1.0, mu)


def INEXACT(mu):
    return CorrectionParams(0.5, 1.0, mu)


EXPLICIT = INEXACT


def max_step_size(params, L_F):
    """Positive root of ``L_F c2^2 alpha^2 = c3 (1 + c1 alpha)``.

    At this step size the gradient term of the corrected scheme is exactly
    balanced by the decay of the Lyapunov functional.
    """
    c1, c2, c3 = params.c1, params.c2, params.c3
    return (c1 * c3 + math.sqrt((c1 * c3) ** 2 + 4 * L_F * c2 ** 2 * c3)) / (2 * L_F * c2 ** 2)


def correction_extrapolate(x_hat_new, y_new, y_old, alpha, params):
    return x_hat_new + alpha * params.c2 / (1 + alpha * params.c1) * (y_new - y_old)


@dataclass
class InnerSolveReport:
    residual_norm: float
    iterations: int
    method: str
    converged: bool = True


class ShiftedSkewSolver:
    """Solver for ``(beta I + N) y = b`` with ``N`` skew-symmetric.

    ``direct`` factors the matrix once.  ``cg_normal`` runs conjugate gradients
    on the symmetric positive definite system ``(beta^2 I - N^2) y =
    (beta I - N) b``.  ``aor_inner`` runs AOR sweeps with step ``1/(2 L_Bsym)``.
    The iterative methods call ``accept(y, r)`` with the true residual ``r =
    b - (beta I + N) y`` after every iteration (and once on the warm start);
    a truthy return stops the loop.
    """

    def __init__(self, N, beta, method="direct", split=None):
        if isinstance(N, SkewSplit):
            split, N = N, 2 * N.B.T - N.Bsym
        if method not in INNER_METHODS:
            raise ValueError(f"unknown inner method {method!r}")
        if method == "direct" and N.shape[0] > DIRECT_LIMIT:
            raise ValueError(f"direct inner solves are limited to {DIRECT_LIMIT} unknowns")
        if not beta > 0:
            raise ValueError("beta must be positive")
        self.N = N
        self.beta = float(beta)
        self.method = method
        self._lu = None
        self._split = split
        if method == "direct":
            self._lu = sla.lu_factor(self.beta * np.eye(N.shape[0]) + _to_dense(N))
        elif method == "aor_inner" and split is None:
            self._split = split_skew(N)

    def residual(self, y, b):
        return b - self.beta * y - self.N @ y

    def solve(self, b, x0=None, tol=1e-12, accept=None, max_iter=None):
        b = np.asarray(b, dtype=float)
        if self.method == "direct":
            y = sla.lu_solve(self._lu, b)
            r = self.residual(y, b)
            if accept is not None:
                accept(y, r)
            return y, InnerSolveReport(float(np.linalg.norm(r)), 1, "direct", True)
        if accept is None:
            bn = float(np.linalg.norm(b))
            accept = lambda y, r: np.linalg.norm(r) <= tol * bn
        y = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
        if self.method == "cg_normal":
            return self._cg_normal(b, y, accept, max_iter or 10 * b.size + 100)
        return self._aor(b, y, accept, max_iter or 20000)

    def _cg_normal(self, b, y, accept, max_iter):
        beta, N = self.beta, self.N
        r = self.residual(y, b)
        if accept(y, r):
            return y, InnerSolveReport(float(np.linalg.norm(r)), 0, "cg_normal")
        # (beta I - N) is the transpose of (beta I + N)
        s = beta * r - N @ r
        d = s.copy()
        ss = s @ s
        for it in range(1, max_iter + 1):
            Md = beta * d + N @ d
            step = ss / (Md @ Md)
            y = y + step * d
            r = r - step * Md
            if accept(y, r):
                return y, InnerSolveReport(float(np.linalg.norm(r)), it, "cg_normal")
            s = beta * r - N @ r
            ss_new = s @ s
            if ss_new == 0:
                break
            d = s + (ss_new / ss) * d
            ss = ss_new
        return y, InnerSolveReport(float(np.linalg.norm(r)), it, "cg_normal", False)

    def _aor(self, b, y, accept, max_iter):
        split = self._split
        r = self.residual(y, b)
        if accept(y, r):
            return y, InnerSolveReport(float(np.linalg.norm(r)), 0, "aor_inner")
        if split.L_Bsym == 0:
            y = b / self.beta
            r = self.residual(y, b)
            return y, InnerSolveReport(float(np.linalg.norm(r)), 1, "aor_inner",
                                       bool(accept(y, r)))
        step = 0.5 / split.L_Bsym
        for it in range(1, max_iter + 1):
            y = aor_linear_step(split, self.beta, b, y, step)
            r = self.residual(y, b)
            if accept(y, r):
                return y, InnerSolveReport(float(np.linalg.norm(r)), it, "aor_inner")
        return y, InnerSolveReport(float(np.linalg.norm(r)), max_iter, "aor_inner", False)


def shifted_skew_solve(beta, N, b, method="direct", tol=1e-12, x0=None,
                       accept=None, max_iter=None, split=None):
    """Solve ``(beta I + N) y = b``; see `ShiftedSkewSolver`.

    ``N`` may also be a `SkewSplit`, from which ``N = 2 B.T - Bsym`` is rebuilt.

    Returns
    -------
    y : ndarray
    report : InnerSolveReport
    """
    solver = ShiftedSkewSolver(N, beta, method, split)
    return solver.solve(b, x0=x0, tol=tol, accept=accept, max_iter=max_iter)


def _predict(state, alpha):
    return (state.x + alpha * state.y) / (1 + alpha)


def _imex_system(problem, state, alpha):
    """Predictor and the scaled system ``(beta I + N) y = rhs`` of an IMEX step.

    The unscaled equation ``((1 + alpha) I + (alpha/mu) N) y = b`` is multiplied
    by ``mu/alpha``; residuals of the two differ by that factor.
    """
    mu = problem.mu
    x_hat = _predict(state, alpha)
    b = state.y + alpha * x_hat - (alpha / mu) * problem.grad_F(x_hat)
    return x_hat, mu * (1 + alpha) / alpha, (mu / alpha) * b


def _default_inner(problem):
    return "direct" if problem.dim <= DENSE_LIMIT else "cg_normal"


def agss_imex_step(problem, state, alpha, inner_method=None, inner_tol=1e-12,
                   solver=None):
    """One IMEX step: explicit gradient, implicit skew part.

    ``y_new`` solves ``((1 + alpha) I + (alpha/mu) N) y = y + alpha x_hat -
    (alpha/mu) grad F(x_hat)`` and ``x_new = (x + alpha y_new)/(1 + alpha)``.
    """
    x_hat, beta, rhs = _imex_system(problem, state, alpha)
    if solver is None:
        solver = ShiftedSkewSolver(problem.N, beta, inner_method or _default_inner(problem))
    y_new, rep = solver.solve(rhs, x0=state.y, tol=inner_tol)
    rep.residual_norm *= alpha / problem.mu
    x_new = correction_extrapolate(x_hat, y_new, state.y, alpha, IMEX(problem.mu))
    return AccState(x_new, y_new), rep


def inexact_rule(x_hat, x, y, alpha):
    """Right-hand side of the inner stopping test ``||eps||^2 <= rule``."""
    return 0.5 * alpha * (float((x_hat - x) @ (x_hat - x))
                          + alpha * float((y - x_hat) @ (y - x_hat)))


def agss_imex_inexact_step(problem, state, alpha, inner_method="cg_normal",
                           enforce_rule=True, inner_tol=1e-1, solver=None,
                           max_iter=None):
    """IMEX step with an inexact inner solve.

    With ``enforce_rule`` the inner iteration (warm started at ``y_k``) stops as
    soon as the unscaled residual ``eps`` satisfies

        ||eps||^2 <= alpha/2 (||x_hat - x_k||^2 + alpha ||y - x_hat||^2),

    where ``y`` is the current inner iterate.  A round-off floor of
    ``64 eps_mach ||b||`` keeps the test reachable near the solution.
    Otherwise the inner solve runs to the fixed relative tolerance
    ``inner_tol``.  The corrector uses ``c1 = 1/2``.
    """
    mu = problem.mu
    x_hat, beta, rhs = _imex_system(problem, state, alpha)
    if solver is None:
        solver = ShiftedSkewSolver(problem.N, beta, inner_method)
    scale = alpha / mu
    floor = (64 * np.finfo(float).eps * scale * np.linalg.norm(rhs)) ** 2
    outcome = {"ok": False}

    def accept(y, r):
        eps2 = scale ** 2 * float(r @ r)
        ok = eps2 <= max(inexact_rule(x_hat, state.x, y, alpha), floor)
        outcome["ok"] = ok
        return ok

    if enforce_rule:
        y_new, rep = solver.solve(rhs, x0=state.y, accept=accept, max_iter=max_iter)
        rep.converged = outcome["ok"]
    else:
        y_new, rep = solver.solve(rhs, x0=state.y, tol=inner_tol, max_iter=max_iter)
    rep.residual_norm *= scale
    x_new = correction_extrapolate(x_hat, y_new, state.y, alpha, INEXACT(mu))
    return AccState(x_new, y_new), rep


def agss_explicit_step(problem, split, state, alpha):
    """Fully explicit accelerated Gauss-Seidel step.

    ``((1 + alpha) I - (2 alpha/mu) B) y_new = y + alpha x_hat - (alpha/mu)
    (grad F(x_hat) + Bsym y)``, a forward substitution, followed by the
    corrector with ``c1 = 1/2``.
    """
    mu = problem.mu
    x_hat = _predict(state, alpha)
    rhs = state.y + alpha * x_hat - (alpha / mu) * (problem.grad_F(x_hat)
                                                    + split.Bsym @ state.y)
    y_new = split.solve(1 + alpha, -2 * alpha / mu, rhs)
    x_new = correction_extrapolate(x_hat, y_new, state.y, alpha, EXPLICIT(mu))
    return AccState(x_new, y_new)


def flow_spectrum(a, b):
    """Eigenvalues of ``G = [[-1, 1], [1 - a, -1 + i b]]``, the accelerated flow
    on the scalar model where ``grad^2 F / mu`` has eigenvalue ``a`` and
    ``N / mu`` has eigenvalue ``-i b``.

    Returns ``-1 + i (b +/- sqrt(b^2 + 4 (a - 1)))/2``; the real part is -1 for
    every ``a >= 1``.
    """
    if a < 1:
        raise ValueError("a must be >= 1")
    root = math.sqrt(b * b + 4 * (a - 1))
    return np.array([complex(-1, (b + root) / 2), complex(-1, (b - root) / 2)])


def strong_lyapunov_gap(problem, x, y):
    """``-<grad E, G> - (E + mu/2 ||y - x||^2)`` at ``(x, y)``.

    ``E`` is the accelerated functional and ``G`` the flow vector field; the
    value is non-negative for every point when ``E`` is a strong Lyapunov
    function of the flow.
    """
    if problem.x_star is None:
        raise UnsupportedProblemError("needs the solution x*")
    mu, xs = problem.mu, problem.x_star
    g = problem.grad_F(x)
    dEx = g - problem.grad_F(xs)
    dEy = mu * (y - xs)
    Gx = y - x
    Gy = x - y - (g + problem.N @ y) / mu
    E = lyapunov_acc(x, y, xs, problem.F_value, problem.grad_F, mu)
    return float(-(dEx @ Gx + dEy @ Gy) - E - 0.5 * mu * float((y - x) @ (y - x)))


@dataclass
class AccConfig:
    """Options for `solve_agss`.

    ``inner_method`` defaults to ``direct`` up to 512 unknowns and
    ``cg_normal`` above (``cg_normal`` always for ``imex_inexact``).
    ``enforce_rule=False`` replaces the inexact stopping test by the relative
    tolerance ``loose_tol``.
    """

    alpha: Optional[float] = None
    max_iter: int = 1000
    stop_tol: float = 1e-10
    stop_on: str = "residual"
    inner_method: Optional[str] = None
    inner_tol: float = 1e-12
    inner_max_iter: Optional[int] = None
    enforce_rule: bool = True
    loose_tol: float = 1e-1
    override: bool = False
    check_every: int = 1


def default_acc_alpha(problem, scheme, split=None):
    mu, L = problem.mu, problem.L_F
    if scheme in ("imex", "imex_inexact"):
        return math.sqrt(mu / L)
    if scheme == "explicit":
        return min(mu * inv_or_inf(2 * split.L_Bsym), math.sqrt(mu / (2 * L)))
    raise ValueError(f"unknown scheme {scheme!r}")


def _admissible(problem, scheme, alpha, split):
    mu, L = problem.mu, problem.L_F
    if scheme == "imex":
        return alpha ** 2 * L <= (1 + alpha) * mu * (1 + 1e-12)
    if scheme == "imex_inexact":
        return alpha ** 2 * L <= (1 + alpha / 2) * mu * (1 + 1e-12)
    bound = min(mu * inv_or_inf(2 * split.L_Bsym), math.sqrt(mu / (2 * L)))
    return alpha <= bound * (1 + 1e-12)


def solve_agss(problem, scheme, config=None, x0=None, y0=None, split=None):
    """Run an accelerated scheme.

    Parameters
    ----------
    problem : MonotoneProblem
    scheme : {"imex", "imex_inexact", "explicit"}
    config : AccConfig, optional
    x0, y0 : array, optional
        Starting pair; ``x0`` defaults to zeros and ``y0`` to ``x0``.
    split : SkewSplit, optional

    Returns
    -------
    state : AccState
    trace : ConvergenceTrace
        The recorded functional is ``D_F(x, x*) + mu/2 ||y - x*||^2`` for the
        IMEX schemes and ``D_F(x, x*) + ||y - x*||^2_{mu I - alpha Bsym}/2``
        for the explicit one.  Inner iteration counts and residuals are
        recorded per step.
    """
    if scheme not in AGSS_SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {AGSS_SCHEMES}")
    cfg = config or AccConfig()
    if cfg.stop_on not in ("residual", "error"):
        raise ValueError("stop_on must be 'residual' or 'error'")
    if cfg.stop_on == "error" and problem.x_star is None:
        raise ValueError("stop_on='error' needs a known solution")
    if split is None and scheme == "explicit":
        split = split_skew(problem.N)
    x = np.zeros(problem.dim) if x0 is None else np.array(x0, dtype=float)
    y = x.copy() if y0 is None else np.array(y0, dtype=float)
    if x.shape != (problem.dim,) or y.shape != (problem.dim,):
        raise ValueError("starting point has the wrong dimension")
    state = AccState(x, y)
    alpha = default_acc_alpha(problem, scheme, split) if cfg.alpha is None else float(cfg.alpha)
    if not alpha > 0:
        raise ValueError("step size must be positive")
    admissible = _admissible(problem, scheme, alpha, split)
    if not admissible and not cfg.override:
        raise ValueError(f"step size {alpha:.6g} outside the guaranteed range for "
                         f"{scheme}; set override=True to run anyway")
    mu, xs = problem.mu, problem.x_star
    if xs is not None and problem.F_value is None:
        raise UnsupportedProblemError("the accelerated functional needs F values")

    trace = ConvergenceTrace(method=f"agss_{scheme}", alpha=alpha)
    # a fixed inner tolerance voids the inexact guarantee
    guaranteed = admissible and (scheme != "imex_inexact" or cfg.enforce_rule)
    if guaranteed:
        trace.theorem_rate = 1 / (1 + alpha) if scheme == "imex" else 1 / (1 + alpha / 2)
    if not admissible:
        trace.flags.append("step_override")

    def lyapunov(s):
        if xs is None:
            return problem.residual(s.x)
        if scheme == "explicit":
            return lyapunov_acc_alphaB(s.x, s.y, xs, alpha, split.Bsym,
                                       problem.F_value, problem.grad_F, mu)
        return lyapunov_acc(s.x, s.y, xs, problem.F_value, problem.grad_F, mu)

    solver = None
    if scheme != "explicit":
        method = cfg.inner_method or ("cg_normal" if scheme == "imex_inexact"
                                      else _default_inner(problem))
        solver = ShiftedSkewSolver(problem.N, mu * (1 + alpha) / alpha, method)
        if not cfg.enforce_rule and scheme == "imex_inexact":
            trace.flags.append("fixed_inner_tolerance")

    e0 = None if xs is None else float(np.linalg.norm(state.x - xs))

    def record(k, s, rep=None):
        r = problem.residual(s.x)
        err = None if xs is None else float(np.linalg.norm(s.x - xs))
        trace.append(k, lyapunov(s), err_norm=err, residual=r,
                     inner_iters=None if rep is None else rep.iterations,
                     inner_residual=None if rep is None else rep.residual_norm,
                     inner_converged=None if rep is None else rep.converged)
        if cfg.stop_on == "residual":
            return r <= cfg.stop_tol
        return err <= cfg.stop_tol * e0

    done = record(0, state)
    rises = k = inner_total = 0
    stride = max(1, int(cfg.check_every))
    while not done and k < cfg.max_iter:
        rep = None
        if scheme == "explicit":
            state = agss_explicit_step(problem, split, state, alpha)
        elif scheme == "imex":
            state, rep = agss_imex_step(problem, state, alpha, inner_tol=cfg.inner_tol,
                                        solver=solver)
        else:
            state, rep = agss_imex_inexact_step(
                problem, state, alpha, enforce_rule=cfg.enforce_rule,
                inner_tol=cfg.loose_tol, solver=solver, max_iter=cfg.inner_max_iter)
        if rep is not None:
            inner_total += rep.iterations
        k += 1
        if k % stride and k < cfg.max_iter:
            continue
        if not (np.all(np.isfinite(state.x)) and np.all(np.isfinite(state.y))):
            raise NumericalFailure(f"non-finite iterate at step {k}")
        done = record(k, state, rep)
        E = trace.lyapunov
        rises = rises + 1 if E[-1] > E[-2] else 0
        if rises >= DIVERGENCE_WINDOW and guaranteed:
            raise DivergenceError(f"agss_{scheme}: Lyapunov value rose {rises} times "
                                  f"in a row at step {k}")
    trace.count("grad", k)
    if scheme == "explicit":
        trace.count("tri_solve", k)
        trace.count("matvec", k)
    elif solver.method == "direct":
        trace.count("skew_solve", k)
    else:
        trace.count("inner_iter", inner_total)
    trace.iterations = k
    trace.converged = bool(done)
    return state, trace
