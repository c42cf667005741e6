"""First-order flow discretizations: explicit and implicit Euler, AOR for
shifted skew systems, Gauss-Seidel splitting (GSS) for nonlinear monotone
equations, and the Hermitian/skew-Hermitian splitting (HSS) baseline.

Each scheme contracts a designated Lyapunov functional by a fixed factor per
step when its step-size condition holds:

==============  =======================================  =====================
method          functional                               rate
==============  =======================================  =====================
explicit_euler  ``||x - x*||^2 / 2``                     ``1/(1 + alpha mu)``
implicit_euler  ``||x - x*||^2 / 2``                     ``1/(1 + 2 alpha mu)``
aor             ``||x - x*||^2_{I - alpha Bsym} / 2``    ``1/(1 + alpha mu)``
gss             above minus ``alpha D_F(x*, x)``         ``1/(1 + alpha mu)``
==============  =======================================  =====================

The backward variants swap ``B`` for ``-B.T``, which flips the sign of
``Bsym`` in the functional.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .core import (ConvergenceTrace, DivergenceError, NumericalFailure,
                   UnsupportedProblemError, condition_numbers, inv_or_inf,
                   lyapunov_alphaB, lyapunov_alphaBD, lyapunov_Eq, skew_norm,
                   split_skew, _to_dense)

__all__ = [
    "StepConfig", "HSSFactors", "explicit_euler_step", "implicit_euler_step",
    "linear_resolvent", "aor_linear_step", "gss_step", "hss_factors",
    "hss_step", "hss_default_alpha", "default_alpha", "solve_flow",
    "FLOW_METHODS",
]

FLOW_METHODS = ("explicit_euler", "implicit_euler", "aor", "gss", "hss")
# strict step-size bounds are enforced with this relative margin
BOUNDARY_MARGIN = 1e-6
DIVERGENCE_WINDOW = 10


@dataclass
class StepConfig:
    """Options shared by the first-order solvers.

    Parameters
    ----------
    alpha : float, optional
        Step size; ``None`` picks the method default.
    variant : {"forward", "backward"}
        Triangular sweep direction for AOR and GSS.
    max_iter : int
    stop_tol : float
        Threshold on the residual ``||A(x_k)||`` (``stop_on="residual"``) or on
        ``||x_k - x*|| / ||x_0 - x*||`` (``stop_on="error"``).
    override : bool
        Allow step sizes outside the guaranteed range.  No contraction rate is
        then attached to the trace and divergence is not an error.
    relaxed : bool
        Explicit Euler only: accept ``alpha < 2 mu / L_A^2`` (convergent but
        without the ``1/(1 + alpha mu)`` guarantee).
    check_every : int
        Stride between stopping tests and trace records.
    """

    alpha: Optional[float] = None
    variant: str = "forward"
    max_iter: int = 1000
    stop_tol: float = 1e-10
    stop_on: str = "residual"
    override: bool = False
    relaxed: bool = False
    check_every: int = 1


def explicit_euler_step(problem, x, alpha):
    """``x - alpha A(x)``."""
    return x - alpha * problem.A(x)


def linear_resolvent(problem, alpha):
    """Return ``v -> (I + alpha A)^{-1}(v + alpha rhs)`` for quadratic ``F``.

    The LU factorization is computed once and reused by every call.
    """
    if not problem.is_linear:
        raise UnsupportedProblemError(
            "implicit Euler needs a resolvent; pass one for nonlinear F")
    M = np.eye(problem.dim) + alpha * problem.linear_operator()
    lu = sla.lu_factor(M)
    rhs = alpha * problem.rhs
    return lambda v: sla.lu_solve(lu, v + rhs)


def implicit_euler_step(problem, x, alpha, resolvent=None):
    """Solve ``x_new + alpha A(x_new) = x``.

    ``resolvent`` maps ``x`` to ``x_new``; it is built by `linear_resolvent`
    when omitted, which only works for quadratic ``F``.
    """
    if resolvent is None:
        resolvent = linear_resolvent(problem, alpha)
    return resolvent(x)


def aor_linear_step(split, mu, b, x, alpha, variant="forward"):
    """One AOR step for ``(mu I + N) x = b``.

    Forward: ``((1 + alpha mu) I - 2 alpha B) x_new = x - alpha (Bsym x - b)``.
    Backward: ``((1 + alpha mu) I + 2 alpha B.T) x_new = x + alpha (Bsym x + b)``.
    """
    if variant == "forward":
        rhs = x - alpha * (split.Bsym @ x - b)
        return split.solve(1 + alpha * mu, -2 * alpha, rhs)
    if variant == "backward":
        rhs = x + alpha * (split.Bsym @ x + b)
        return split.solve(1 + alpha * mu, 2 * alpha, rhs, upper=True)
    raise ValueError(f"unknown variant {variant!r}")


def gss_step(problem, split, x, alpha, variant="forward"):
    """One Gauss-Seidel splitting step for ``grad F(x) + N x = 0``.

    Forward: ``(I - 2 alpha B) x_new = x - alpha (grad F(x) + Bsym x)``.
    Backward: ``(I + 2 alpha B.T) x_new = x - alpha (grad F(x) - Bsym x)``.
    Only ``grad F`` at the current iterate is needed, so ``F`` may be
    nonlinear.
    """
    g = problem.grad_F(x)
    if variant == "forward":
        return split.solve(1.0, -2 * alpha, x - alpha * (g + split.Bsym @ x))
    if variant == "backward":
        return split.solve(1.0, 2 * alpha, x - alpha * (g - split.Bsym @ x),
                           upper=True)
    raise ValueError(f"unknown variant {variant!r}")


@dataclass
class HSSFactors:
    alpha: float
    sym: tuple
    skew: tuple
    Asym: np.ndarray
    Askew: np.ndarray


def hss_factors(A, alpha):
    """LU factors of ``alpha I + Asym`` and ``alpha I + Askew``."""
    A = _to_dense(A)
    n = A.shape[0]
    Asym = 0.5 * (A + A.T)
    Askew = 0.5 * (A - A.T)
    eye = alpha * np.eye(n)
    return HSSFactors(alpha, sla.lu_factor(eye + Asym), sla.lu_factor(eye + Askew),
                      Asym, Askew)


def hss_default_alpha(A):
    """``sqrt(lambda_min lambda_max)`` of the symmetric part."""
    ev = np.linalg.eigvalsh(0.5 * (A + A.T))
    return math.sqrt(ev[0] * ev[-1])


def hss_step(A, b, x, alpha, factors=None):
    """Two half steps of the HSS iteration for ``A x = b``."""
    if factors is None or factors.alpha != alpha:
        factors = hss_factors(A, alpha)
    half = sla.lu_solve(factors.sym, alpha * x - factors.Askew @ x + b)
    return sla.lu_solve(factors.skew, alpha * half - factors.Asym @ half + b)


def _step_bound(problem, split, method, relaxed=False):
    """Largest admissible step size and whether it is attained."""
    if method == "explicit_euler":
        L_A = problem.L_F + skew_norm(problem.N)
        if relaxed:
            return 2 * problem.mu / L_A ** 2, False
        return problem.mu / L_A ** 2, True
    if method == "aor":
        return inv_or_inf(split.L_Bsym), False
    if method == "gss":
        return min(inv_or_inf(2 * split.L_Bsym), inv_or_inf(2 * problem.L_F)), False
    return math.inf, False


def default_alpha(problem, method, split=None):
    """Method default step size.

    AOR uses ``1/(2 L_Bsym)``, GSS ``min(1/(4 L_Bsym), 1/(4 L_F))``, explicit
    Euler ``mu / L_A^2``; implicit Euler and HSS are unconditionally stable and
    use ``1/mu`` and ``sqrt(lambda_min lambda_max)`` of the symmetric part.
    """
    if method == "explicit_euler":
        return _step_bound(problem, split, method)[0]
    if method == "implicit_euler":
        return 1.0 / problem.mu
    if method == "aor":
        return 0.5 / split.L_Bsym if split.L_Bsym > 0 else 1.0 / problem.mu
    if method == "gss":
        return min(inv_or_inf(4 * split.L_Bsym), inv_or_inf(4 * problem.L_F))
    if method == "hss":
        return hss_default_alpha(problem.linear_operator())
    raise ValueError(f"unknown method {method!r}")


def _shifted_skew_data(problem):
    """``(mu, b)`` when ``A(x) = mu x + N x - b``; raises otherwise."""
    H = problem.hessian
    if H is None or not np.allclose(H, problem.mu * np.eye(problem.dim),
                                    rtol=0, atol=1e-14 * max(1.0, problem.mu)):
        raise UnsupportedProblemError("AOR needs A = mu I + N (use gss otherwise)")
    return problem.mu, problem.rhs


def solve_flow(problem, method, config=None, x0=None, split=None, resolvent=None):
    """Run a first-order scheme and record its designated Lyapunov functional.

    Parameters
    ----------
    problem : MonotoneProblem
    method : {"explicit_euler", "implicit_euler", "aor", "gss", "hss"}
    config : StepConfig, optional
    x0 : array, optional
        Starting point, zeros by default.
    split : SkewSplit, optional
        Reused when given; computed otherwise.
    resolvent : callable, optional
        Implicit Euler map for nonlinear ``F``.

    Returns
    -------
    x : ndarray
    trace : ConvergenceTrace
        ``theorem_rate`` holds the guaranteed per-step contraction of the
        recorded functional, or ``None`` when no guarantee applies.

    Raises
    ------
    ValueError
        Step size outside the guaranteed range without ``override``.
    DivergenceError
        The functional grew for ten consecutive records under a guarantee.
    NumericalFailure
        Non-finite iterates.
    """
    if method not in FLOW_METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {FLOW_METHODS}")
    cfg = config or StepConfig()
    if cfg.variant not in ("forward", "backward"):
        raise ValueError(f"unknown variant {cfg.variant!r}")
    if cfg.stop_on not in ("residual", "error"):
        raise ValueError("stop_on must be 'residual' or 'error'")
    if cfg.stop_on == "error" and problem.x_star is None:
        raise ValueError("stop_on='error' needs a known solution")
    if split is None and method in ("aor", "gss"):
        split = split_skew(problem.N)
    x = np.zeros(problem.dim) if x0 is None else np.array(x0, dtype=float)
    if x.shape != (problem.dim,):
        raise ValueError(f"x0 has shape {x.shape}, expected {(problem.dim,)}")

    alpha = default_alpha(problem, method, split) if cfg.alpha is None else float(cfg.alpha)
    if not alpha > 0:
        raise ValueError("step size must be positive")
    bound, inclusive = _step_bound(problem, split, method, cfg.relaxed)
    admissible = alpha <= bound if inclusive else alpha <= bound * (1 - BOUNDARY_MARGIN)
    if not admissible and not cfg.override:
        raise ValueError(f"step size {alpha:.6g} outside the guaranteed range "
                         f"(bound {bound:.6g}); set override=True to run anyway")

    trace = ConvergenceTrace(method=method, alpha=alpha)
    mu = problem.mu
    guaranteed = admissible and not (method == "explicit_euler" and cfg.relaxed)
    if guaranteed:
        trace.theorem_rate = {
            "explicit_euler": 1 / (1 + alpha * mu),
            "implicit_euler": 1 / (1 + 2 * alpha * mu),
            "aor": 1 / (1 + alpha * mu),
            "gss": 1 / (1 + alpha * mu),
        }.get(method)
    if cfg.relaxed and method == "explicit_euler":
        trace.flags.append("relaxed_step")
    if not admissible:
        trace.flags.append("step_override")

    sign = 1.0 if cfg.variant == "forward" else -1.0
    x_star = problem.x_star
    if method == "gss" and x_star is not None and problem.F_value is None:
        raise UnsupportedProblemError("the GSS functional needs F values")

    def lyapunov(z):
        if x_star is None:
            return problem.residual(z)
        if method == "aor":
            return lyapunov_alphaB(z, x_star, sign * alpha, split.Bsym)
        if method == "gss":
            return lyapunov_alphaBD(z, x_star, sign * alpha, split.Bsym,
                                    problem.F_value, problem.grad_F)
        return lyapunov_Eq(z, x_star)

    if method == "aor":
        mu_aor, b = _shifted_skew_data(problem)
        step = lambda z: aor_linear_step(split, mu_aor, b, z, alpha, cfg.variant)
        ops = {"tri_solve": 1, "matvec": 1}
    elif method == "gss":
        step = lambda z: gss_step(problem, split, z, alpha, cfg.variant)
        ops = {"grad": 1, "tri_solve": 1, "matvec": 1}
    elif method == "explicit_euler":
        step = lambda z: explicit_euler_step(problem, z, alpha)
        ops = {"grad": 1, "matvec": 1}
    elif method == "implicit_euler":
        res = resolvent or linear_resolvent(problem, alpha)
        step = lambda z: implicit_euler_step(problem, z, alpha, res)
        ops = {"resolvent": 1}
    else:
        A = problem.linear_operator()
        factors = hss_factors(A, alpha)
        step = lambda z: hss_step(A, problem.rhs, z, alpha, factors)
        ops = {"sym_solve": 1, "skew_solve": 1, "matvec": 2}

    e0 = None if x_star is None else float(np.linalg.norm(x - x_star))

    def record(k, z):
        r = problem.residual(z)
        err = None if x_star is None else float(np.linalg.norm(z - x_star))
        trace.append(k, lyapunov(z), err_norm=err, residual=r)
        if cfg.stop_on == "residual":
            return r <= cfg.stop_tol
        return err <= cfg.stop_tol * e0

    done = record(0, x)
    rises = 0
    k = 0
    stride = max(1, int(cfg.check_every))
    while not done and k < cfg.max_iter:
        x = step(x)
        k += 1
        if k % stride and k < cfg.max_iter:
            continue
        if not np.all(np.isfinite(x)):
            raise NumericalFailure(f"non-finite iterate at step {k}")
        done = record(k, x)
        E = trace.lyapunov
        rises = rises + 1 if E[-1] > E[-2] else 0
        if rises >= DIVERGENCE_WINDOW and guaranteed:
            raise DivergenceError(
                f"{method}: Lyapunov value rose {rises} times in a row at step {k}")
    for op, n in ops.items():
        trace.count(op, n * k)
    trace.iterations = k
    trace.converged = bool(done)
    return x, trace
