"""Saddle-point systems with bilinear coupling,

    min_u max_p  L(u, p) = f(u) - g(p) + (B u, p),

written as the monotone equation ``A(x) = grad F(x) + N x = 0`` with
``x = (u, p)``, ``grad F = (grad f, grad g)`` and ``N = [[0, B.T], [-B, 0]]``.
Primal and dual spaces carry SPD inner products ``I_V`` and ``I_Q``; all
convexity constants are measured in them.

Schemes
-------
agss   explicit accelerated Gauss-Seidel, the ``v`` update feeds the ``q`` update
imex   accelerated, skew part implicit (block inner solve per step)
prox   proximal in ``f`` and ``g``, explicit triangular treatment of ``N``
tpd    Gauss-Seidel splitting of the transformed primal-dual operator
atpd   accelerated transformed primal-dual; allows ``mu_g = 0``
"""

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .agss import AccState, CorrectionParams, InnerSolveReport, correction_extrapolate
from .core import (ConvergenceTrace, DivergenceError, MalformedProblemError,
                   MonotoneProblem, NumericalFailure, UnsupportedProblemError,
                   DENSE_LIMIT, _to_dense)
from .flow import BOUNDARY_MARGIN, DIVERGENCE_WINDOW

__all__ = [
    "Metric", "SaddleProblem", "SchurSpectrum", "PreconScaling", "TpdConstants",
    "GS", "SaddleConfig", "schur_spectrum", "coupling_norm", "agss_saddle_step",
    "imex_saddle_step", "prox_saddle_step", "build_gS", "tpd_gss_step",
    "atpd_step", "choose_scaling", "tpd_scaling", "rescale", "approx_s_condition",
    "augment_objective", "duality_bregman_gap", "saddle_lyapunov",
    "positivity_min_eig", "coupling_norm_dense", "key_lemma_gap",
    "strong_saddle_gap", "quadratic_prox", "l2_penalty_prox", "solve_saddle",
    "default_saddle_alpha", "SADDLE_SCHEMES",
]

SADDLE_SCHEMES = ("agss", "imex", "prox", "tpd", "atpd")


class Metric:
    """SPD inner-product operator with ``apply`` and ``solve``.

    Use the constructors `identity`, `scalar`, `diagonal` or `dense`.
    """

    def __init__(self, dim, scalar=None, diag=None, matrix=None):
        self.dim = int(dim)
        self.scalar = scalar
        self.diag = diag
        self._matrix = matrix
        self._chol = None
        if scalar is not None:
            if not scalar > 0:
                raise MalformedProblemError("metric scale must be positive")
        elif diag is not None:
            if diag.shape != (dim,) or np.any(diag <= 0):
                raise MalformedProblemError("diagonal metric must be positive")
        else:
            if matrix.shape != (dim, dim):
                raise MalformedProblemError("metric matrix has the wrong shape")
            if not np.allclose(matrix, matrix.T, rtol=1e-12, atol=0):
                raise MalformedProblemError("metric matrix is not symmetric")
            try:
                self._chol = sla.cho_factor(matrix)
            except np.linalg.LinAlgError as exc:
                raise MalformedProblemError("metric matrix is not positive definite") from exc

    @classmethod
    def identity(cls, dim):
        return cls(dim, scalar=1.0)

    @classmethod
    def scaled_identity(cls, dim, c):
        return cls(dim, scalar=float(c))

    @classmethod
    def diagonal(cls, d):
        d = np.asarray(d, dtype=float)
        return cls(d.size, diag=d)

    @classmethod
    def dense(cls, M):
        M = np.asarray(M, dtype=float)
        return cls(M.shape[0], matrix=M)

    @property
    def is_scalar(self):
        return self.scalar is not None

    def apply(self, x):
        if self.scalar is not None:
            return self.scalar * x
        if self.diag is not None:
            return (self.diag * x.T).T
        return self._matrix @ x

    def solve(self, x):
        if self.scalar is not None:
            return x / self.scalar
        if self.diag is not None:
            return (x.T / self.diag).T
        return sla.cho_solve(self._chol, x)

    def matrix(self):
        if self.scalar is not None:
            return self.scalar * np.eye(self.dim)
        if self.diag is not None:
            return np.diag(self.diag)
        return self._matrix

    def scaled(self, c):
        if self.scalar is not None:
            return Metric(self.dim, scalar=self.scalar * c)
        if self.diag is not None:
            return Metric(self.dim, diag=self.diag * c)
        return Metric(self.dim, matrix=self._matrix * c)

    def norm_sq(self, x):
        return float(x @ self.apply(x))


def quadratic_prox(H, c, metric):
    """Prox of ``f(u) = u.T H u / 2 - c @ u`` in ``metric``.

    ``prox(w, gamma)`` solves ``(H + M/gamma) u = c + M w / gamma``; factors are
    cached per ``gamma``.
    """
    H = np.asarray(H, dtype=float)
    c = np.asarray(c, dtype=float)
    M = metric.matrix()
    cache = {}

    def prox(w, gamma):
        fac = cache.get(gamma)
        if fac is None:
            fac = sla.cho_factor(H + M / gamma)
            if len(cache) > 8:
                cache.clear()
            cache[gamma] = fac
        return sla.cho_solve(fac, c + metric.apply(w) / gamma)

    return prox


def l2_penalty_prox(lam, metric):
    """Prox of ``f(u) = lam ||u||_2`` in a scaled identity metric (block
    soft thresholding)."""
    if not metric.is_scalar:
        raise UnsupportedProblemError("the l2 penalty prox needs a scaled identity metric")

    def prox(w, gamma):
        t = lam * gamma / metric.scalar
        nrm = np.linalg.norm(w)
        return np.zeros_like(w) if nrm <= t else (1 - t / nrm) * w

    return prox


@dataclass
class SaddleProblem:
    """Saddle problem ``min_u max_p f(u) - g(p) + (B u, p)``.

    ``B`` is ``n x m`` with ``m >= n`` and full row rank.  ``I_V`` and ``I_Q``
    default to identities.  The quadratic data ``H_f, c_f, H_g, c_g`` (with
    ``f = u.T H_f u / 2 - c_f @ u`` and likewise for ``g``) are optional and
    enable exact constants and built-in prox oracles.
    """

    B: object
    grad_f: Callable
    grad_g: Callable
    mu_f: float
    L_f: float
    mu_g: float
    L_g: float
    f_value: Optional[Callable] = None
    g_value: Optional[Callable] = None
    prox_f: Optional[Callable] = None
    prox_g: Optional[Callable] = None
    b_rhs: Optional[np.ndarray] = None
    I_V: Optional[Metric] = None
    I_Q: Optional[Metric] = None
    H_f: Optional[np.ndarray] = None
    c_f: Optional[np.ndarray] = None
    H_g: Optional[np.ndarray] = None
    c_g: Optional[np.ndarray] = None
    u_star: Optional[np.ndarray] = None
    p_star: Optional[np.ndarray] = None
    flags: list = field(default_factory=list)

    def __post_init__(self):
        if not sp.issparse(self.B):
            self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        n, m = self.B.shape
        if m < n:
            raise MalformedProblemError(f"B is {n}x{m}; need m >= n")
        self.I_V = self.I_V or Metric.identity(m)
        self.I_Q = self.I_Q or Metric.identity(n)
        if self.I_V.dim != m or self.I_Q.dim != n:
            raise MalformedProblemError("metric dimensions do not match B")
        for lo, hi, name in ((self.mu_f, self.L_f, "f"), (self.mu_g, self.L_g, "g")):
            if lo < 0 or lo > hi * (1 + 1e-12):
                raise MalformedProblemError(f"need 0 <= mu_{name} <= L_{name}")
        if min(n, m) <= DENSE_LIMIT:
            s = np.linalg.svd(_to_dense(self.B), compute_uv=False)
            if s[-1] <= 1e-10 * s[0]:
                raise MalformedProblemError("B does not have full row rank")
        elif "rank_unchecked" not in self.flags:
            self.flags.append("rank_unchecked")

    @property
    def n(self):
        return self.B.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def x_star(self):
        if self.u_star is None or self.p_star is None:
            return None
        return np.concatenate([self.u_star, self.p_star])

    def split(self, x):
        return x[:self.m], x[self.m:]

    def grad_F(self, x):
        u, p = self.split(x)
        return np.concatenate([self.grad_f(u), self.grad_g(p)])

    def F_value(self, x):
        if self.f_value is None or self.g_value is None:
            raise UnsupportedProblemError("needs f and g values")
        u, p = self.split(x)
        return self.f_value(u) + self.g_value(p)

    def lagrangian(self, u, p):
        return self.f_value(u) - self.g_value(p) + float(self.B @ u @ p)

    def kkt_residual(self, u, p):
        """``||grad f(u) + B.T p|| + ||-B u + grad g(p)||``."""
        return float(np.linalg.norm(self.grad_f(u) + self.B.T @ p)
                     + np.linalg.norm(self.grad_g(p) - self.B @ u))

    def N_matrix(self):
        B = _to_dense(self.B)
        n, m = B.shape
        return np.block([[np.zeros((m, m)), B.T], [-B, np.zeros((n, n))]])

    def Bsym_matrix(self):
        B = _to_dense(self.B)
        n, m = B.shape
        return np.block([[np.zeros((m, m)), B.T], [B, np.zeros((n, n))]])

    def as_monotone(self):
        """The equivalent `MonotoneProblem` (identity metrics only)."""
        if not (self.I_V.is_scalar and self.I_V.scalar == 1
                and self.I_Q.is_scalar and self.I_Q.scalar == 1):
            raise UnsupportedProblemError("as_monotone needs identity metrics")
        if self.mu_g <= 0:
            raise UnsupportedProblemError("needs mu_g > 0")
        F_value = None
        if self.f_value is not None and self.g_value is not None:
            F_value = self.F_value
        return MonotoneProblem(dim=self.m + self.n, grad_F=self.grad_F,
                               N=self.N_matrix(), mu=min(self.mu_f, self.mu_g),
                               L_F=max(self.L_f, self.L_g), F_value=F_value,
                               x_star=self.x_star)

    @classmethod
    def quadratic(cls, H_f, c_f, H_g, c_g, B, I_V=None, I_Q=None, b_rhs=None):
        """Quadratic saddle with exact constants, prox oracles and solution."""
        H_f = np.asarray(H_f, dtype=float)
        H_g = np.asarray(H_g, dtype=float)
        c_f = np.asarray(c_f, dtype=float)
        c_g = np.asarray(c_g, dtype=float)
        B = np.atleast_2d(np.asarray(B, dtype=float))
        n, m = B.shape
        I_V = I_V or Metric.identity(m)
        I_Q = I_Q or Metric.identity(n)
        ef = sla.eigh(H_f, I_V.matrix(), eigvals_only=True)
        eg = sla.eigh(H_g, I_Q.matrix(), eigvals_only=True)
        clip = lambda v: max(float(v), 0.0)
        kkt = np.block([[H_f, B.T], [-B, H_g]])
        sol = np.linalg.solve(kkt, np.concatenate([c_f, c_g]))
        return cls(
            B=B, grad_f=lambda u: H_f @ u - c_f, grad_g=lambda p: H_g @ p - c_g,
            mu_f=clip(ef[0]), L_f=clip(ef[-1]), mu_g=clip(eg[0]), L_g=clip(eg[-1]),
            f_value=lambda u: 0.5 * u @ (H_f @ u) - c_f @ u,
            g_value=lambda p: 0.5 * p @ (H_g @ p) - c_g @ p,
            prox_f=quadratic_prox(H_f, c_f, I_V), prox_g=quadratic_prox(H_g, c_g, I_Q),
            b_rhs=b_rhs, I_V=I_V, I_Q=I_Q, H_f=H_f, c_f=c_f, H_g=H_g, c_g=c_g,
            u_star=sol[:m], p_star=sol[m:])

    @classmethod
    def constrained_qp(cls, H_f, c_f, B, b, I_V=None, I_Q=None):
        """``min u.T H_f u / 2 - c_f @ u`` subject to ``B u = b``; ``g(p) = (b, p)``."""
        n = np.atleast_2d(B).shape[0]
        b = np.asarray(b, dtype=float)
        return cls.quadratic(H_f, c_f, np.zeros((n, n)), -b, B, I_V, I_Q, b_rhs=b)


@dataclass
class SchurSpectrum:
    """Extreme generalized eigenvalues of ``S = B I_V^{-1} B.T`` against ``I_Q``."""

    L_S: float
    mu_S: float

    def __post_init__(self):
        if not 0 < self.mu_S <= self.L_S * (1 + 1e-12):
            raise MalformedProblemError("need 0 < mu_S <= L_S")

    @property
    def kappa_S(self):
        return self.L_S / self.mu_S


def schur_matrix(problem):
    B = _to_dense(problem.B)
    return B @ problem.I_V.solve(B.T)


def schur_apply(problem, p):
    return problem.B @ problem.I_V.solve(problem.B.T @ p)


def schur_spectrum(problem):
    """Dense generalized eigensolve up to 512 dual unknowns, Lanczos above.

    Above the dense limit ``S`` is applied through ``B``, ``I_V^{-1}`` and
    ``B.T`` only.
    """
    n = problem.n
    if n <= DENSE_LIMIT:
        ev = sla.eigh(schur_matrix(problem), problem.I_Q.matrix(), eigvals_only=True)
        return SchurSpectrum(L_S=float(ev[-1]), mu_S=float(ev[0]))
    S = spla.LinearOperator((n, n), matvec=lambda p: schur_apply(problem, p), dtype=float)
    M = spla.LinearOperator((n, n), matvec=problem.I_Q.apply, dtype=float)
    Minv = spla.LinearOperator((n, n), matvec=problem.I_Q.solve, dtype=float)
    hi = spla.eigsh(S, k=1, M=M, Minv=Minv, which="LA", return_eigenvectors=False)
    lo = spla.eigsh(S, k=1, M=M, Minv=Minv, which="SA", return_eigenvectors=False)
    return SchurSpectrum(L_S=float(hi[0]), mu_S=float(lo[0]))


def coupling_norm(problem, spectrum=None):
    """``||Bsym||`` in the ``I_mu`` metric, ``sqrt(L_S / (mu_f mu_g))``."""
    spectrum = spectrum or schur_spectrum(problem)
    return math.sqrt(spectrum.L_S / (problem.mu_f * problem.mu_g))


def coupling_norm_dense(problem):
    """The same norm from a dense generalized eigensolve of ``(Bsym, I_mu)``."""
    I_mu = sla.block_diag(problem.mu_f * problem.I_V.matrix(),
                          problem.mu_g * problem.I_Q.matrix())
    ev = sla.eigh(problem.Bsym_matrix(), I_mu, eigvals_only=True)
    return float(np.max(np.abs(ev)))


def positivity_min_eig(problem, alpha):
    """Smallest eigenvalue of ``I_mu - 2 alpha Bsym`` (dense)."""
    I_mu = sla.block_diag(problem.mu_f * problem.I_V.matrix(),
                          problem.mu_g * problem.I_Q.matrix())
    return float(np.linalg.eigvalsh(I_mu - 2 * alpha * problem.Bsym_matrix())[0])


def _bsym_form(problem, e):
    """``e.T Bsym e = 2 (B e_u, e_p)``."""
    eu, ep = problem.split(e)
    return 2.0 * float((problem.B @ eu) @ ep)


# quadratic data use d.T H d / 2, which avoids cancelling large values of f
def _bregman_f(problem, a, b):
    if problem.H_f is not None:
        d = a - b
        return 0.5 * float(d @ (problem.H_f @ d))
    return float(problem.f_value(a) - problem.f_value(b) - problem.grad_f(b) @ (a - b))


def _bregman_g(problem, a, b):
    if problem.H_g is not None:
        d = a - b
        return 0.5 * float(d @ (problem.H_g @ d))
    return float(problem.g_value(a) - problem.g_value(b) - problem.grad_g(b) @ (a - b))


def _need_solution(problem):
    if problem.x_star is None:
        raise UnsupportedProblemError("needs the saddle point (u*, p*)")
    if problem.f_value is None or problem.g_value is None:
        raise UnsupportedProblemError("needs f and g values")


def duality_bregman_gap(problem, u, p):
    """``L(u, p*) - L(u*, p)``, equal to ``D_f(u, u*) + D_g(p, p*)``."""
    _need_solution(problem)
    return problem.lagrangian(u, problem.p_star) - problem.lagrangian(problem.u_star, p)


@dataclass
class TpdConstants:
    """Constants of the transformed system.

    ``mu_g_plus`` is exact for quadratic ``g`` and the computable lower bound
    ``2 mu_g + (2 - L_f) mu_S`` otherwise; ``mu_g_plus_bound`` always holds
    the bound.
    """

    mu_g_plus: float
    mu_g_plus_bound: float
    mu_gS: float
    L_gS: float
    exact: bool = False


@dataclass
class GS:
    """``g_S(p) = g(p) + ||p||_S^2 / 2`` with ``S = B I_V^{-1} B.T``."""

    grad: Callable
    value: Optional[Callable]
    S_apply: Callable
    constants: TpdConstants
    spectrum: SchurSpectrum

    def bregman(self, problem, a, b):
        d = a - b
        return _bregman_g(problem, a, b) + 0.5 * float(d @ self.S_apply(d))


def build_gS(problem, spectrum=None):
    spectrum = spectrum or schur_spectrum(problem)
    S_apply = lambda p: schur_apply(problem, p)
    grad = lambda p: problem.grad_g(p) + S_apply(p)
    value = None
    if problem.g_value is not None:
        value = lambda p: problem.g_value(p) + 0.5 * float(p @ S_apply(p))
    bound = 2 * problem.mu_g + (2 - problem.L_f) * spectrum.mu_S
    if problem.H_g is not None and problem.n <= DENSE_LIMIT:
        S = schur_matrix(problem)
        IQ = problem.I_Q.matrix()
        ev = sla.eigh(problem.H_g + S, IQ, eigvals_only=True)
        plus = sla.eigh(2 * problem.H_g + (2 - problem.L_f) * S, IQ, eigvals_only=True)[0]
        const = TpdConstants(mu_g_plus=float(plus), mu_g_plus_bound=bound,
                             mu_gS=float(ev[0]), L_gS=float(ev[-1]), exact=True)
    else:
        const = TpdConstants(mu_g_plus=bound, mu_g_plus_bound=bound,
                             mu_gS=problem.mu_g + spectrum.mu_S,
                             L_gS=problem.L_g + spectrum.L_S)
    return GS(grad=grad, value=value, S_apply=S_apply, constants=const, spectrum=spectrum)


def _predict(state, alpha):
    return (state.x + alpha * state.y) / (1 + alpha)


def agss_saddle_step(problem, state, alpha):
    """Explicit accelerated step; ``v_new`` is computed first and feeds ``q_new``.

    ``v_new = (v + a u_hat - (a/mu_f) I_V^{-1}(grad f(u_hat) + B.T q)) / (1 + a)``
    ``q_new = (q + a p_hat - (a/mu_g) I_Q^{-1}(grad g(p_hat) - 2 B v_new + B v)) / (1 + a)``
    followed by the corrector with ``c1 = 1/2``.
    """
    if problem.mu_g <= 0:
        raise UnsupportedProblemError("mu_g = 0: use the tpd or atpd schemes")
    x_hat = _predict(state, alpha)
    u_hat, p_hat = problem.split(x_hat)
    v, q = problem.split(state.y)
    B = problem.B
    gv = problem.grad_f(u_hat) + B.T @ q
    v_new = (v + alpha * u_hat - (alpha / problem.mu_f) * problem.I_V.solve(gv)) / (1 + alpha)
    gq = problem.grad_g(p_hat) - 2 * (B @ v_new) + B @ v
    q_new = (q + alpha * p_hat - (alpha / problem.mu_g) * problem.I_Q.solve(gq)) / (1 + alpha)
    y_new = np.concatenate([v_new, q_new])
    x_new = correction_extrapolate(x_hat, y_new, state.y, alpha, CorrectionParams(0.5, 1.0, 1.0))
    return AccState(x_new, y_new)


def _imex_block(problem, alpha):
    a_v = (1 + alpha) * problem.mu_f
    a_q = (1 + alpha) * problem.mu_g
    B = problem.B

    def apply(v, q):
        return (a_v * problem.I_V.apply(v) + alpha * (B.T @ q),
                -alpha * (B @ v) + a_q * problem.I_Q.apply(q))

    return a_v, a_q, apply


def _inner_aor(problem, alpha, r_v, r_q, v, q, tol, max_iter, spectrum):
    """Preconditioned AOR sweeps on the IMEX block system in the ``I_mu`` metric.

    Step ``1/(2 alpha sqrt(L_S/(mu_f mu_g)))``; zero coupling reduces to one
    block-diagonal solve.
    """
    mu_f, mu_g = problem.mu_f, problem.mu_g
    a_v, a_q, apply = _imex_block(problem, alpha)
    B = problem.B
    rn = math.hypot(np.linalg.norm(r_v), np.linalg.norm(r_q))

    def res(v, q):
        kv, kq = apply(v, q)
        return math.hypot(np.linalg.norm(r_v - kv), np.linalg.norm(r_q - kq))

    r = res(v, q)
    if r <= tol * rn:
        return v, q, InnerSolveReport(r, 0, "aor_inner")
    kappa = alpha * math.sqrt(spectrum.L_S / (mu_f * mu_g))
    if kappa == 0:
        v = problem.I_V.solve(r_v) / a_v
        q = problem.I_Q.solve(r_q) / a_q
        return v, q, InnerSolveReport(res(v, q), 1, "aor_inner")
    step = 0.5 / kappa
    for it in range(1, max_iter + 1):
        v_new = (v - (step / mu_f) * problem.I_V.solve(alpha * (B.T @ q) - r_v)) / (1 + step * (1 + alpha))
        q = (q - (step / mu_g) * problem.I_Q.solve(alpha * (B @ (v - 2 * v_new)) - r_q)) / (1 + step * (1 + alpha))
        v = v_new
        r = res(v, q)
        if r <= tol * rn:
            return v, q, InnerSolveReport(r, it, "aor_inner")
    return v, q, InnerSolveReport(r, max_iter, "aor_inner", False)


def imex_saddle_step(problem, state, alpha, inner_method=None, inner_tol=1e-12,
                     max_iter=None, spectrum=None):
    """Accelerated step with the coupling treated implicitly.

    Solves ``[[(1+a) mu_f I_V, a B.T], [-a B, (1+a) mu_g I_Q]] (v, q) =
    I_mu (y + a x_hat) - a grad F(x_hat)``.  ``inner_method`` is ``direct``,
    ``cg_schur`` (scaled identity metrics; CG on ``((1+a)^2 mu_f mu_g I +
    a^2 B B.T)`` up to metric scalings) or ``aor_inner``.
    """
    x_hat = _predict(state, alpha)
    u_hat, p_hat = problem.split(x_hat)
    v, q = problem.split(state.y)
    mu_f, mu_g = problem.mu_f, problem.mu_g
    r_v = mu_f * problem.I_V.apply(v + alpha * u_hat) - alpha * problem.grad_f(u_hat)
    r_q = mu_g * problem.I_Q.apply(q + alpha * p_hat) - alpha * problem.grad_g(p_hat)
    scalar = problem.I_V.is_scalar and problem.I_Q.is_scalar
    method = inner_method or ("cg_schur" if scalar else "aor_inner")
    a_v, a_q, apply = _imex_block(problem, alpha)
    B = problem.B
    if method == "direct":
        Bd = _to_dense(B)
        K = np.block([[a_v * problem.I_V.matrix(), alpha * Bd.T],
                      [-alpha * Bd, a_q * problem.I_Q.matrix()]])
        sol = np.linalg.solve(K, np.concatenate([r_v, r_q]))
        v_new, q_new = problem.split(sol)
        rep = InnerSolveReport(0.0, 1, "direct")
    elif method == "cg_schur":
        if not scalar:
            raise UnsupportedProblemError("cg_schur needs scaled identity metrics")
        sv, sq = a_v * problem.I_V.scalar, a_q * problem.I_Q.scalar
        n = problem.n
        op = spla.LinearOperator((n, n), dtype=float,
                                 matvec=lambda z: sv * sq * z + alpha ** 2 * (B @ (B.T @ z)))
        count = [0]

        def tick(_):
            count[0] += 1

        q_new, info = spla.cg(op, sv * r_q + alpha * (B @ r_v), x0=q, rtol=inner_tol,
                              atol=0.0, maxiter=max_iter or 10 * n + 100, callback=tick)
        v_new = (r_v - alpha * (B.T @ q_new)) / sv
        rep = InnerSolveReport(0.0, count[0], "cg_schur", info == 0)
    elif method == "aor_inner":
        spectrum = spectrum or schur_spectrum(problem)
        v_new, q_new, rep = _inner_aor(problem, alpha, r_v, r_q, v, q, inner_tol,
                                       max_iter or 100000, spectrum)
    else:
        raise ValueError(f"unknown inner method {method!r}")
    kv, kq = apply(v_new, q_new)
    rep.residual_norm = math.hypot(np.linalg.norm(r_v - kv), np.linalg.norm(r_q - kq))
    y_new = np.concatenate([v_new, q_new])
    x_new = correction_extrapolate(x_hat, y_new, state.y, alpha, CorrectionParams(1.0, 1.0, 1.0))
    return AccState(x_new, y_new), rep


def prox_saddle_step(problem, x, alpha):
    """Proximal step, ``u`` first:

    ``u_new = prox_{(a/mu_f) f}(u - (a/mu_f) I_V^{-1} B.T p)``,
    ``p_new = prox_{(a/mu_g) g}(p - (a/mu_g) I_Q^{-1} B (u - 2 u_new))``,
    with both proxes taken in their own metric.
    """
    if problem.prox_f is None or problem.prox_g is None:
        raise UnsupportedProblemError("prox scheme needs prox_f and prox_g")
    u, p = problem.split(x)
    gf = alpha / problem.mu_f
    gg = alpha / problem.mu_g
    u_new = problem.prox_f(u - gf * problem.I_V.solve(problem.B.T @ p), gf)
    p_new = problem.prox_g(p - gg * problem.I_Q.solve(problem.B @ (u - 2 * u_new)), gg)
    return np.concatenate([u_new, p_new])


def tpd_gss_step(problem, gS, x, alpha):
    """Gauss-Seidel step on the transformed primal-dual operator.

    ``u_new = u - a I_V^{-1}(grad f(u) + B.T p)`` and then
    ``p_new = p - a I_Q^{-1}(B I_V^{-1} grad f(u_new) + grad g_S(p) - B(2 u_new - u))``.
    """
    if problem.L_f >= 2:
        raise ValueError("GSS-TPD needs L_f < 2 in the I_V metric; rescale first")
    u, p = problem.split(x)
    B = problem.B
    u_new = u - alpha * problem.I_V.solve(problem.grad_f(u) + B.T @ p)
    rq = B @ problem.I_V.solve(problem.grad_f(u_new)) + gS.grad(p) - B @ (2 * u_new - u)
    p_new = p - alpha * problem.I_Q.solve(rq)
    return np.concatenate([u_new, p_new])


def atpd_step(problem, gS, state, alpha):
    """Accelerated transformed primal-dual step.

    ``v_new (1 + a/2) = v + (a/2) u_hat - (a/mu_f) I_V^{-1}(grad f(u_hat) + B.T q)``,
    ``q_new (1 + a) = q + a p_hat - a I_Q^{-1}(grad g_S(p_hat) + B v - 2 B v_new
    + B I_V^{-1} grad f(u_hat))``, then the corrector with ``c1 = 1/4``.
    """
    x_hat = _predict(state, alpha)
    u_hat, p_hat = problem.split(x_hat)
    v, q = problem.split(state.y)
    B = problem.B
    gf = problem.grad_f(u_hat)
    v_new = (v + 0.5 * alpha * u_hat
             - (alpha / problem.mu_f) * problem.I_V.solve(gf + B.T @ q)) / (1 + 0.5 * alpha)
    rq = gS.grad(p_hat) + B @ v - 2 * (B @ v_new) + B @ problem.I_V.solve(gf)
    q_new = (q + alpha * p_hat - alpha * problem.I_Q.solve(rq)) / (1 + alpha)
    y_new = np.concatenate([v_new, q_new])
    x_new = correction_extrapolate(x_hat, y_new, state.y, alpha, CorrectionParams(0.25, 1.0, 1.0))
    return AccState(x_new, y_new)


@dataclass
class PreconScaling:
    """Metric factors ``c_v I_V`` and ``c_q I_Q`` and the constants after scaling.

    ``margin_low`` and ``margin_high`` are the slacks of the two inequalities
    ``2/3 - mu_g <= lambda_min(I_Q^{-1} S)`` and ``lambda_max(I_Q^{-1} S) <=
    1/(2 L_f)`` in the scaled metrics.
    """

    c_v: float
    c_q: float
    L_f: float
    mu_f: float
    L_g: float
    mu_g: float
    L_S: float
    mu_S: float
    margin_low: float
    margin_high: float

    def __post_init__(self):
        if not (self.c_v > 0 and self.c_q > 0):
            raise ValueError("scaling factors must be positive")


def approx_s_condition(mu_g, L_f, spectrum, rtol=1e-12):
    """Margins of ``2/3 - mu_g <= mu_S <= L_S <= 1/(2 L_f)`` and whether both
    hold (up to ``rtol`` relative round-off)."""
    low = spectrum.mu_S - (2.0 / 3.0 - mu_g)
    high = 0.5 / L_f - spectrum.L_S
    ok = low >= -rtol * spectrum.mu_S and high >= -rtol * spectrum.L_S
    return ok, low, high


def choose_scaling(problem, spectrum=None):
    """``c_v = (4/3) L_f kappa_S`` and ``c_q`` with ``mu_S / (c_v c_q) = 2/3``.

    After scaling ``L_f = 3/(4 kappa_S) <= 3/4`` and the spectral condition of
    the accelerated transformed scheme holds with ``mu_g`` replaced by its
    scaled value.
    """
    spectrum = spectrum or schur_spectrum(problem)
    if problem.L_f <= 0:
        raise ValueError("L_f must be positive")
    c_v = 4.0 / 3.0 * problem.L_f * spectrum.kappa_S
    c_q = 1.5 * spectrum.mu_S / c_v
    scaled = SchurSpectrum(L_S=spectrum.L_S / (c_v * c_q), mu_S=spectrum.mu_S / (c_v * c_q))
    L_f, mu_g = problem.L_f / c_v, problem.mu_g / c_q
    _, low, high = approx_s_condition(mu_g, L_f, scaled)
    return PreconScaling(c_v=c_v, c_q=c_q, L_f=L_f, mu_f=problem.mu_f / c_v,
                         L_g=problem.L_g / c_q, mu_g=mu_g, L_S=scaled.L_S,
                         mu_S=scaled.mu_S, margin_low=low, margin_high=high)


def tpd_scaling(problem, spectrum=None):
    """Balanced factors for GSS-TPD: ``c_v = L_f`` and ``c_q = L_S / c_v``.

    After scaling ``L_f = 1 < 2`` and ``L_S = 1``, so the step-size bound is
    ``1/max(2, 2 L_gS)`` instead of being driven by a tiny ``mu_f``.
    """
    spectrum = spectrum or schur_spectrum(problem)
    if problem.L_f <= 0:
        raise ValueError("L_f must be positive")
    c_v = problem.L_f
    c_q = spectrum.L_S / c_v
    scaled = SchurSpectrum(L_S=1.0, mu_S=spectrum.mu_S / spectrum.L_S)
    L_f, mu_g = 1.0, problem.mu_g / c_q
    _, low, high = approx_s_condition(mu_g, L_f, scaled)
    return PreconScaling(c_v=c_v, c_q=c_q, L_f=L_f, mu_f=problem.mu_f / c_v,
                         L_g=problem.L_g / c_q, mu_g=mu_g, L_S=scaled.L_S,
                         mu_S=scaled.mu_S, margin_low=low, margin_high=high)


def rescale(problem, scaling):
    """Problem with metrics ``c_v I_V`` and ``c_q I_Q``; same solution.

    Prox oracles are rewrapped so they stay proxes in the new metrics.
    """
    c_v, c_q = scaling.c_v, scaling.c_q
    prox_f = prox_g = None
    if problem.prox_f is not None:
        prox_f = lambda w, gamma, _p=problem.prox_f: _p(w, gamma / c_v)
    if problem.prox_g is not None:
        prox_g = lambda w, gamma, _p=problem.prox_g: _p(w, gamma / c_q)
    return replace(problem, I_V=problem.I_V.scaled(c_v), I_Q=problem.I_Q.scaled(c_q),
                   mu_f=problem.mu_f / c_v, L_f=problem.L_f / c_v,
                   mu_g=problem.mu_g / c_q, L_g=problem.L_g / c_q,
                   prox_f=prox_f, prox_g=prox_g, flags=list(problem.flags))


def augment_objective(problem, beta):
    """Replace ``f`` by ``f + beta/2 ||B u - b||^2``; the saddle point is unchanged.

    Constants are exact generalized eigenvalues for quadratic ``f``.  Otherwise
    ``mu_f + beta sigma_min(B)^2 / lambda_max(I_V)`` is recorded when ``B`` has
    full column rank and ``mu_f`` alone (flagged) when ``m > n``.
    """
    if problem.b_rhs is None:
        raise UnsupportedProblemError("augmentation needs the constraint right-hand side")
    if beta < 0:
        raise ValueError("beta must be non-negative")
    if beta == 0:
        return problem
    B, b = problem.B, problem.b_rhs
    grad_f = lambda u, _g=problem.grad_f: _g(u) + beta * (B.T @ (B @ u - b))
    f_value = None
    if problem.f_value is not None:
        f_value = lambda u, _f=problem.f_value: _f(u) + 0.5 * beta * float((B @ u - b) @ (B @ u - b))
    Bd = _to_dense(B)
    BtB = Bd.T @ Bd
    flags = list(problem.flags)
    H_f = c_f = None
    if problem.H_f is not None:
        H_f = problem.H_f + beta * BtB
        c_f = problem.c_f + beta * (Bd.T @ b)
        ev = sla.eigh(H_f, problem.I_V.matrix(), eigvals_only=True)
        mu, L = float(ev[0]), float(ev[-1])
    else:
        ev_bb = sla.eigh(BtB, problem.I_V.matrix(), eigvals_only=True)
        L = problem.L_f + beta * float(ev_bb[-1])
        if problem.m > problem.n:
            mu = problem.mu_f
            flags.append("augmented_mu_bound_zero_gain")
        else:
            lam_max = float(np.max(np.linalg.eigvalsh(problem.I_V.matrix())))
            mu = problem.mu_f + beta * float(np.linalg.svd(Bd, compute_uv=False)[-1]) ** 2 / lam_max
    prox_f = quadratic_prox(H_f, c_f, problem.I_V) if H_f is not None else None
    return replace(problem, grad_f=grad_f, f_value=f_value, mu_f=max(mu, 0.0), L_f=L,
                   H_f=H_f, c_f=c_f, prox_f=prox_f, flags=flags)


def key_lemma_gap(problem, u1, u2, p1, p2):
    """Slack of the cross-term inequality

    ``<df, I_V^{-1} B.T dp> >= mu_f/2 ||dv||^2_{I_V} - L_f/2 ||B.T dp||^2_{I_V^{-1}}
    - <df, du>/2`` with ``v = u + I_V^{-1} B.T p``.
    """
    df = problem.grad_f(u1) - problem.grad_f(u2)
    du = u1 - u2
    w = problem.B.T @ (p1 - p2)
    Iw = problem.I_V.solve(w)
    dv = du + Iw
    lhs = float(df @ Iw)
    rhs = 0.5 * problem.mu_f * problem.I_V.norm_sq(dv) - 0.5 * problem.L_f * float(w @ Iw) - 0.5 * float(df @ du)
    return lhs - rhs


def strong_saddle_gap(problem, x, y):
    """``-<grad E, G> - E - ||y - x||^2_{I_mu}/2`` for the accelerated saddle flow."""
    _need_solution(problem)
    u, p = problem.split(x)
    v, q = problem.split(y)
    us, ps = problem.u_star, problem.p_star
    mu_f, mu_g, B = problem.mu_f, problem.mu_g, problem.B
    gu, gp = problem.grad_f(u), problem.grad_g(p)
    dE = np.concatenate([gu - problem.grad_f(us), gp - problem.grad_g(ps),
                         mu_f * problem.I_V.apply(v - us), mu_g * problem.I_Q.apply(q - ps)])
    G = np.concatenate([v - u, q - p,
                        u - v - problem.I_V.solve(gu + B.T @ q) / mu_f,
                        p - q - problem.I_Q.solve(gp - B @ v) / mu_g])
    E = (_bregman_f(problem, u, us) + _bregman_g(problem, p, ps)
         + 0.5 * mu_f * problem.I_V.norm_sq(v - us) + 0.5 * mu_g * problem.I_Q.norm_sq(q - ps))
    gap_sq = mu_f * problem.I_V.norm_sq(v - u) + mu_g * problem.I_Q.norm_sq(q - p)
    return float(-(dE @ G) - E - 0.5 * gap_sq)


def _weighted_sq(problem, e, w_f, w_g, alpha):
    """``||e||^2_{diag(w_f I_V, w_g I_Q) - alpha Bsym}``."""
    eu, ep = problem.split(e)
    return (w_f * problem.I_V.norm_sq(eu) + w_g * problem.I_Q.norm_sq(ep)
            - alpha * _bsym_form(problem, e))


def saddle_lyapunov(problem, scheme, alpha, state, gS=None, prox_coefficient=2.0):
    """Designated Lyapunov value of a saddle scheme at ``state``.

    ``state`` is an `AccState` for the accelerated schemes and the iterate
    ``x`` for ``prox`` and ``tpd``.  ``prox_coefficient`` multiplies ``alpha``
    in front of ``Bsym`` in the prox functional.
    """
    _need_solution(problem)
    xs = problem.x_star
    us, ps = problem.u_star, problem.p_star
    mu_f, mu_g = problem.mu_f, problem.mu_g
    if scheme in ("agss", "imex"):
        u, p = problem.split(state.x)
        ey = state.y - xs
        D = _bregman_f(problem, u, us) + _bregman_g(problem, p, ps)
        a = alpha if scheme == "agss" else 0.0
        return D + 0.5 * _weighted_sq(problem, ey, mu_f, mu_g, a)
    if scheme == "prox":
        return 0.5 * _weighted_sq(problem, state - xs, mu_f, mu_g, prox_coefficient * alpha)
    if scheme == "tpd":
        u, p = problem.split(state)
        D = _bregman_f(problem, us, u) + gS.bregman(problem, ps, p)
        return 0.5 * _weighted_sq(problem, state - xs, 1.0, 1.0, alpha) - alpha * D
    if scheme == "atpd":
        u, p = problem.split(state.x)
        D = _bregman_f(problem, u, us) + gS.bregman(problem, p, ps)
        return D + 0.5 * _weighted_sq(problem, state.y - xs, mu_f, 1.0, alpha)
    raise ValueError(f"unknown scheme {scheme!r}")


@dataclass
class SaddleConfig:
    """Options for `solve_saddle`.

    ``stop_on="kkt"`` tests ``||grad f(u) + B.T p|| + ||-B u + grad g(p)||``;
    ``"error"`` tests the relative distance to the known saddle point.
    ``auto_scale`` rescales the metrics with `choose_scaling` when the
    transformed schemes' conditions fail.
    """

    alpha: Optional[float] = None
    max_iter: int = 10000
    stop_tol: float = 1e-10
    stop_on: str = "kkt"
    inner_method: Optional[str] = None
    inner_tol: float = 1e-12
    override: bool = False
    auto_scale: bool = True
    check_every: int = 1


def _alpha_bound(problem, scheme, spectrum, gS=None):
    """(bound, strict) for the guaranteed step-size range."""
    mu_f, mu_g, L_f, L_g, L_S = problem.mu_f, problem.mu_g, problem.L_f, problem.L_g, spectrum.L_S
    if scheme == "agss":
        return min(math.sqrt(mu_f * mu_g / (4 * L_S)), math.sqrt(mu_f / (2 * L_f)),
                   math.sqrt(mu_g / (2 * L_g))), False
    if scheme == "prox":
        return 0.5 * math.sqrt(mu_f * mu_g / L_S), True
    if scheme == "tpd":
        return 1.0 / max(2 * math.sqrt(L_S), 2 * L_f, 2 * gS.constants.L_gS), True
    if scheme == "atpd":
        return min(math.sqrt(mu_f / (4 * L_S)), math.sqrt(mu_f / (2 * L_f)),
                   math.sqrt(1.0 / (2 * gS.constants.L_gS))), False
    return math.inf, False


def default_saddle_alpha(problem, scheme, spectrum, gS=None):
    """Theorem step sizes; half the strict bound for ``tpd``."""
    if scheme == "imex":
        return 1.0 / max(math.sqrt(problem.L_f / problem.mu_f),
                         math.sqrt(problem.L_g / problem.mu_g))
    if scheme == "prox":
        return 0.25 * math.sqrt(problem.mu_f * problem.mu_g / spectrum.L_S)
    bound, _ = _alpha_bound(problem, scheme, spectrum, gS)
    return 0.5 * bound if scheme == "tpd" else bound


def _imex_ok(problem, alpha):
    return (alpha ** 2 * problem.L_f <= (1 + alpha) * problem.mu_f * (1 + 1e-12)
            and alpha ** 2 * problem.L_g <= (1 + alpha) * problem.mu_g * (1 + 1e-12))


def solve_saddle(problem, scheme, config=None, x0=None, y0=None):
    """Run a saddle scheme.

    Parameters
    ----------
    problem : SaddleProblem
    scheme : {"agss", "imex", "prox", "tpd", "atpd"}
    config : SaddleConfig, optional
    x0, y0 : array, optional
        Joint starting vectors ``(u, p)``; ``y0`` defaults to ``x0`` and is
        used by the accelerated schemes only.

    Returns
    -------
    u, p : ndarray
    trace : ConvergenceTrace
        ``theorem_rate`` is the guaranteed per-step contraction of the
        recorded functional.  ``"rescaled"`` in ``trace.flags`` marks runs
        whose metrics were rescaled; the functional is then measured in the
        rescaled metrics.
    """
    if scheme not in SADDLE_SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SADDLE_SCHEMES}")
    cfg = config or SaddleConfig()
    if cfg.stop_on not in ("kkt", "error"):
        raise ValueError("stop_on must be 'kkt' or 'error'")
    if cfg.stop_on == "error" and problem.x_star is None:
        raise ValueError("stop_on='error' needs a known solution")
    if scheme in ("agss", "imex", "prox") and problem.mu_g <= 0:
        raise UnsupportedProblemError(f"{scheme} needs mu_g > 0; use tpd or atpd")
    trace = ConvergenceTrace(method=f"saddle_{scheme}")
    spectrum = schur_spectrum(problem)
    if scheme in ("tpd", "atpd") and cfg.auto_scale:
        if scheme == "tpd":
            need = problem.L_f >= 2
        else:
            need = not approx_s_condition(problem.mu_g, problem.L_f, spectrum)[0]
        if need:
            recipe = tpd_scaling if scheme == "tpd" else choose_scaling
            problem = rescale(problem, recipe(problem, spectrum))
            spectrum = schur_spectrum(problem)
            trace.flags.append("rescaled")
    if scheme == "atpd":
        ok, low, high = approx_s_condition(problem.mu_g, problem.L_f, spectrum)
        if not ok and not cfg.override:
            raise ValueError(f"spectral condition fails (margins {low:.3g}, {high:.3g}); "
                             "rescale with choose_scaling")
    gS = build_gS(problem, spectrum) if scheme in ("tpd", "atpd") else None

    alpha = default_saddle_alpha(problem, scheme, spectrum, gS) if cfg.alpha is None else float(cfg.alpha)
    if not alpha > 0:
        raise ValueError("step size must be positive")
    if scheme == "imex":
        admissible = _imex_ok(problem, alpha)
    else:
        bound, strict = _alpha_bound(problem, scheme, spectrum, gS)
        admissible = alpha <= bound * ((1 - BOUNDARY_MARGIN) if strict else (1 + 1e-12))
    if not admissible and not cfg.override:
        raise ValueError(f"step size {alpha:.6g} outside the guaranteed range for {scheme}")
    trace.alpha = alpha
    if admissible:
        if scheme == "agss":
            trace.theorem_rate = 1 / (1 + alpha / 2)
        elif scheme in ("imex", "prox"):
            trace.theorem_rate = 1 / (1 + alpha)
        elif scheme == "tpd":
            mu = min(problem.mu_f, gS.constants.mu_g_plus_bound)
            trace.theorem_rate = 1 / (1 + mu * alpha / 2)
        else:
            trace.theorem_rate = 1 / (1 + alpha / 4)
    else:
        trace.flags.append("step_override")

    dim = problem.m + problem.n
    x = np.zeros(dim) if x0 is None else np.array(x0, dtype=float)
    if x.shape != (dim,):
        raise ValueError(f"x0 has shape {x.shape}, expected {(dim,)}")
    accelerated = scheme in ("agss", "imex", "atpd")
    state = AccState(x, x.copy() if y0 is None else np.array(y0, dtype=float)) if accelerated else x
    xs = problem.x_star
    known = xs is not None and problem.f_value is not None and problem.g_value is not None

    def current(s):
        return s.x if accelerated else s

    def lyap(s):
        if not known:
            return problem.kkt_residual(*problem.split(current(s)))
        return saddle_lyapunov(problem, scheme, alpha, s, gS)

    e0 = None if xs is None else float(np.linalg.norm(current(state) - xs))

    def record(k, s, rep=None):
        z = current(s)
        r = problem.kkt_residual(*problem.split(z))
        err = None if xs is None else float(np.linalg.norm(z - xs))
        trace.append(k, lyap(s), err_norm=err, residual=r,
                     inner_iters=None if rep is None else rep.iterations,
                     inner_residual=None if rep is None else rep.residual_norm,
                     inner_converged=None if rep is None else rep.converged)
        if cfg.stop_on == "kkt":
            return r <= cfg.stop_tol
        return err <= cfg.stop_tol * e0

    done = record(0, state)
    rises = k = inner_total = 0
    stride = max(1, int(cfg.check_every))
    while not done and k < cfg.max_iter:
        rep = None
        if scheme == "agss":
            state = agss_saddle_step(problem, state, alpha)
        elif scheme == "imex":
            state, rep = imex_saddle_step(problem, state, alpha, cfg.inner_method,
                                          cfg.inner_tol, spectrum=spectrum)
            inner_total += rep.iterations
        elif scheme == "prox":
            state = prox_saddle_step(problem, state, alpha)
        elif scheme == "tpd":
            state = tpd_gss_step(problem, gS, state, alpha)
        else:
            state = atpd_step(problem, gS, state, alpha)
        k += 1
        if k % stride and k < cfg.max_iter:
            continue
        if not np.all(np.isfinite(current(state))):
            raise NumericalFailure(f"non-finite iterate at step {k}")
        done = record(k, state, rep)
        E = trace.lyapunov
        rises = rises + 1 if E[-1] > E[-2] else 0
        if rises >= DIVERGENCE_WINDOW and admissible:
            raise DivergenceError(f"saddle {scheme}: Lyapunov value rose {rises} times "
                                  f"in a row at step {k}")
    grads = {"agss": 2, "imex": 2, "prox": 0, "tpd": 3, "atpd": 2}[scheme]
    trace.count("grad", grads * k)
    trace.count("matvec", {"agss": 3, "imex": 0, "prox": 2, "tpd": 4, "atpd": 5}[scheme] * k)
    if scheme == "prox":
        trace.count("prox", 2 * k)
    if scheme == "imex":
        trace.count("inner_iter", inner_total)
    trace.iterations = k
    trace.converged = bool(done)
    u, p = problem.split(current(state))
    return u, p, trace
