"""Problem model, skew-symmetric splitting, Bregman divergence and Lyapunov
functionals shared by every solver in the package.

The operator equations handled here have the form ``A(x) = grad F(x) + N x = 0``
with ``F`` strongly convex and ``N`` skew-symmetric.  ``N`` is split through its
strictly lower triangular part ``B`` (``B.T = triu(N)``) as

    N = Bsym - 2 B = 2 B.T - Bsym,      Bsym = B + B.T,

which is what makes the Gauss-Seidel type schemes explicit.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "MalformedProblemError", "EstimationError", "UnsupportedProblemError",
    "DivergenceError", "NumericalFailure", "IndefiniteLyapunovWarning",
    "MonotoneProblem", "SkewSplit", "SpectralEstimates", "ConvergenceTrace",
    "check_skew", "check_oracles", "split_skew", "spectral_norm_sym",
    "skew_norm", "bregman", "lyapunov_Eq", "lyapunov_alphaB",
    "lyapunov_alphaBD", "lyapunov_acc", "lyapunov_acc_alphaB",
    "condition_numbers", "inv_or_inf",
]

SKEW_RTOL = 1e-12
DENSE_LIMIT = 512
# below this size triangular solves use a dense factor even for sparse input
SPARSE_SOLVE_MIN_DIM = 64


class MalformedProblemError(ValueError):
    """Problem data violates a structural assumption (skew-symmetry, mu <= L, ...)."""


class EstimationError(RuntimeError):
    """A spectral estimate failed to converge."""


class UnsupportedProblemError(ValueError):
    """The requested operation needs an oracle the problem does not provide."""


class DivergenceError(RuntimeError):
    """A Lyapunov value kept growing although the step-size guarantee held."""


class NumericalFailure(FloatingPointError):
    """Non-finite values appeared in an iterate or oracle output."""


class IndefiniteLyapunovWarning(UserWarning):
    pass


def inv_or_inf(value):
    """``1/value``, with the convention ``1/0 = inf`` for vanishing constants."""
    return math.inf if value == 0 else 1.0 / value


def _max_abs(M):
    if sp.issparse(M):
        return abs(M).max() if M.nnz else 0.0
    return float(np.max(np.abs(M))) if M.size else 0.0


def _to_dense(M):
    if sp.issparse(M):
        return M.toarray()
    if isinstance(M, spla.LinearOperator):
        return M @ np.eye(M.shape[1])
    return np.asarray(M, dtype=float)


def check_skew(N, rtol=SKEW_RTOL):
    """Raise `MalformedProblemError` unless ``N`` is square and skew-symmetric.

    The tolerance is relative to the largest entry of ``N``; the diagonal has to
    vanish exactly.  Inputs are never symmetrized on the caller's behalf.
    """
    if N.ndim != 2 or N.shape[0] != N.shape[1]:
        raise MalformedProblemError(f"N must be square, got shape {N.shape}")
    diag = N.diagonal()
    if np.any(diag != 0):
        raise MalformedProblemError("N has non-zero diagonal entries")
    scale = _max_abs(N)
    sym_part = N + N.T
    if _max_abs(sym_part) > rtol * scale:
        raise MalformedProblemError(
            f"N is not skew-symmetric: max|N + N^T| = {_max_abs(sym_part):.3e}")


@dataclass
class MonotoneProblem:
    """Strongly monotone operator ``A(x) = grad_F(x) + N x``.

    Parameters
    ----------
    dim : int
        Dimension of the unknown.
    grad_F : callable
        Gradient oracle of the strongly convex part.
    N : (dim, dim) array or sparse matrix
        Skew-symmetric part.
    mu, L_F : float
        Strong convexity and gradient Lipschitz constants of ``F``.
    F_value : callable, optional
        Value oracle of ``F``; needed by every functional built on a Bregman
        divergence.
    x_star : array, optional
        Known solution, used for diagnostics only.
    hessian, rhs : array, optional
        When given, ``F(x) = x.T @ hessian @ x / 2 - rhs @ x``.  Linear problems
        get built-in resolvents and the HSS baseline.
    """

    dim: int
    grad_F: Callable
    N: object
    mu: float
    L_F: float
    F_value: Optional[Callable] = None
    x_star: Optional[np.ndarray] = None
    hessian: Optional[np.ndarray] = None
    rhs: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.dim < 1:
            raise MalformedProblemError("dim must be positive")
        if not sp.issparse(self.N):
            self.N = np.asarray(self.N, dtype=float)
        if self.N.shape != (self.dim, self.dim):
            raise MalformedProblemError(
                f"N has shape {self.N.shape}, expected {(self.dim, self.dim)}")
        check_skew(self.N)
        if not self.mu > 0:
            raise MalformedProblemError("mu must be positive")
        if self.mu > self.L_F * (1 + 1e-12):
            raise MalformedProblemError(f"mu={self.mu} exceeds L_F={self.L_F}")
        if self.x_star is not None:
            self.x_star = np.asarray(self.x_star, dtype=float)

    @classmethod
    def quadratic(cls, H, N, rhs=None, mu=None, L_F=None, solve=True):
        """Build the problem for ``F(x) = x.T H x / 2 - rhs @ x``.

        Missing constants are read off the extreme eigenvalues of ``H`` and the
        solution is obtained by a dense direct solve of ``(H + N) x = rhs``.
        """
        H = np.asarray(H, dtype=float)
        n = H.shape[0]
        rhs = np.zeros(n) if rhs is None else np.asarray(rhs, dtype=float)
        if mu is None or L_F is None:
            eig = np.linalg.eigvalsh(H)
            mu = eig[0] if mu is None else mu
            L_F = eig[-1] if L_F is None else L_F
        x_star = None
        if solve:
            x_star = np.linalg.solve(H + _to_dense(N), rhs)
        return cls(dim=n, grad_F=lambda x: H @ x - rhs, N=N, mu=float(mu),
                   L_F=float(L_F), F_value=lambda x: 0.5 * x @ (H @ x) - rhs @ x,
                   x_star=x_star, hessian=H, rhs=rhs)

    @property
    def is_linear(self):
        return self.hessian is not None

    def A(self, x):
        return self.grad_F(x) + self.N @ x

    def residual(self, x):
        return float(np.linalg.norm(self.A(x)))

    def linear_operator(self):
        """Dense matrix of ``A`` for quadratic ``F``."""
        if self.hessian is None:
            raise UnsupportedProblemError("A is not linear (no hessian given)")
        return self.hessian + _to_dense(self.N)


def check_oracles(problem, n_samples=20, seed=0, rtol=1e-8):
    """Sampled sanity check of ``mu`` and ``L_F`` against the gradient oracle.

    Draws random pairs and checks strong monotonicity and Lipschitz continuity
    of ``grad_F`` with relative slack ``rtol``.  This cannot prove the constants,
    it only catches inconsistent ones.
    """
    rng = np.random.default_rng(seed)
    scale = 1.0 if problem.x_star is None else 1.0 + np.linalg.norm(problem.x_star)
    for _ in range(n_samples):
        x = scale * rng.standard_normal(problem.dim)
        y = scale * rng.standard_normal(problem.dim)
        d = x - y
        g = problem.grad_F(x) - problem.grad_F(y)
        dd = d @ d
        if g @ d < problem.mu * dd - rtol * max(1.0, abs(g @ d), problem.mu * dd):
            raise MalformedProblemError("grad_F is not mu-strongly monotone on samples")
        gn, dn = np.linalg.norm(g), math.sqrt(dd)
        if gn > problem.L_F * dn + rtol * max(1.0, gn):
            raise MalformedProblemError("grad_F violates the L_F Lipschitz bound on samples")


@dataclass
class SkewSplit:
    """Triangular decomposition ``N = Bsym - 2B = 2B.T - Bsym``.

    Shifted triangular factors ``shift*I + scale*B`` (or ``B.T``) are cached, so
    repeated steps with a fixed step size only pay for the substitution.
    """

    B: object
    Bsym: object
    L_Bsym: float
    _factors: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dim(self):
        return self.B.shape[0]

    def _factor(self, shift, scale, upper):
        key = (float(shift), float(scale), bool(upper))
        M = self._factors.get(key)
        if M is None:
            T = self.B.T if upper else self.B
            n = self.dim
            if sp.issparse(T) and n >= SPARSE_SOLVE_MIN_DIM:
                M = (shift * sp.identity(n, format="csr") + scale * T).tocsr()
            else:
                M = shift * np.eye(n) + scale * _to_dense(T)
            if len(self._factors) > 16:
                self._factors.clear()
            self._factors[key] = M
        return M

    def solve(self, shift, scale, rhs, upper=False):
        """Solve ``(shift*I + scale*B) y = rhs`` by forward substitution, or the
        system with ``B.T`` by backward substitution when ``upper`` is set."""
        M = self._factor(shift, scale, upper)
        if sp.issparse(M):
            return spla.spsolve_triangular(M, rhs, lower=not upper)
        return sla.solve_triangular(M, rhs, lower=not upper, check_finite=False)


def split_skew(N, tol=SKEW_RTOL):
    """Split a skew-symmetric matrix into its triangular parts.

    Examples
    --------
    >>> s = split_skew(np.array([[0., 1.], [-1., 0.]]))
    >>> s.B
    array([[0., 0.],
           [1., 0.]])
    >>> float(s.L_Bsym)
    1.0
    """
    if not sp.issparse(N):
        N = np.asarray(N, dtype=float)
    check_skew(N, tol)
    if sp.issparse(N):
        B = sp.triu(N, k=1).T.tocsr()
        Bsym = (B + B.T).tocsr()
    else:
        B = np.triu(N, k=1).T.copy()
        Bsym = B + B.T
    return SkewSplit(B=B, Bsym=Bsym, L_Bsym=spectral_norm_sym(Bsym))


def _power_norm(M, n, tol, max_iter, seed, restarts=3):
    """Power iteration estimate of the spectral radius of a normal operator.

    For normal ``M`` the norm of ``M v`` over the dominant invariant subspace
    equals the spectral radius even when dominant eigenvalues come in ``+/-`` or
    complex-conjugate pairs, so no Rayleigh quotient sign handling is needed.
    Returns ``None`` if the iteration cap is hit.
    """
    rng = np.random.default_rng(seed)
    for _ in range(restarts + 1):
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        est_old = 0.0
        stagnated = False
        quiet = 0
        for _ in range(max_iter):
            w = M @ v
            est = float(np.linalg.norm(w))
            if est == 0.0:
                stagnated = True
                break
            # slow convergence can look stationary for a step or two
            quiet = quiet + 1 if abs(est - est_old) <= 0.1 * tol * est else 0
            if quiet >= 3:
                return est
            est_old = est
            v = w / est
        if not stagnated:
            return None
    return 0.0


def spectral_norm_sym(M, tol=1e-10, max_iter=None, seed=0, fallback=True):
    """Spectral norm ``max |eig(M)|`` of a symmetric matrix.

    Power iteration from a seeded start with at most ``10 * dim`` iterations.
    On non-convergence a dense eigendecomposition is used when ``dim <= 512``
    and ``fallback`` is set; otherwise `EstimationError` is raised.
    """
    n = M.shape[0]
    if n == 0 or _max_abs(M) == 0:
        return 0.0
    cap = 10 * n if max_iter is None else max_iter
    est = _power_norm(M, n, tol, cap, seed)
    if est is not None:
        return est
    if fallback and n <= DENSE_LIMIT:
        return float(np.max(np.abs(np.linalg.eigvalsh(_to_dense(M)))))
    raise EstimationError(f"power iteration did not converge in {cap} steps")


def skew_norm(N, tol=1e-10, seed=0):
    """Spectral norm of a skew-symmetric (hence normal) matrix."""
    n = N.shape[0]
    if n == 0 or _max_abs(N) == 0:
        return 0.0
    est = _power_norm(N, n, tol, 10 * n, seed)
    if est is not None:
        return est
    if n <= DENSE_LIMIT:
        return float(np.linalg.norm(_to_dense(N), 2))
    raise EstimationError("power iteration for ||N|| did not converge")


def bregman(F_value, grad_F, x, y):
    """Bregman divergence ``F(x) - F(y) - <grad F(y), x - y>``."""
    if F_value is None:
        raise UnsupportedProblemError("Bregman divergence needs F values")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(F_value(x) - F_value(y) - grad_F(y) @ (x - y))


def _error(x, x_star):
    x = np.asarray(x, dtype=float)
    x_star = np.asarray(x_star, dtype=float)
    if x.shape != x_star.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {x_star.shape}")
    return x - x_star


def lyapunov_Eq(x, x_star):
    """``||x - x*||^2 / 2``."""
    e = _error(x, x_star)
    return 0.5 * float(e @ e)


def lyapunov_alphaB(x, x_star, alpha, Bsym, L_Bsym=None):
    """``||x - x*||^2_{I - alpha Bsym} / 2``.

    Positive definite only for ``alpha < 1/L_Bsym``; when ``L_Bsym`` is passed
    and the bound fails an `IndefiniteLyapunovWarning` is issued.
    """
    if L_Bsym is not None and alpha * L_Bsym >= 1:
        warnings.warn("alpha >= 1/L_Bsym: the functional may be indefinite",
                      IndefiniteLyapunovWarning, stacklevel=2)
    e = _error(x, x_star)
    return 0.5 * float(e @ e - alpha * (e @ (Bsym @ e)))


def lyapunov_alphaBD(x, x_star, alpha, Bsym, F_value, grad_F):
    """``||x - x*||^2_{I - alpha Bsym} / 2 - alpha D_F(x*, x)``."""
    return (lyapunov_alphaB(x, x_star, alpha, Bsym)
            - alpha * bregman(F_value, grad_F, x_star, x))


def lyapunov_acc(x, y, x_star, F_value, grad_F, mu):
    """``D_F(x, x*) + mu/2 ||y - x*||^2``, the accelerated-flow functional."""
    ey = _error(y, x_star)
    return bregman(F_value, grad_F, x, x_star) + 0.5 * mu * float(ey @ ey)


def lyapunov_acc_alphaB(x, y, x_star, alpha, Bsym, F_value, grad_F, mu):
    """``D_F(x, x*) + ||y - x*||^2_{mu I - alpha Bsym} / 2``."""
    ey = _error(y, x_star)
    quad = mu * float(ey @ ey) - alpha * float(ey @ (Bsym @ ey))
    return bregman(F_value, grad_F, x, x_star) + 0.5 * quad


@dataclass
class SpectralEstimates:
    L_A: float
    norm_N: float
    kappa_A: float
    kappa_F: float
    kappa_N: float
    kappa_Bsym: float


def condition_numbers(problem, split):
    mu = problem.mu
    norm_N = skew_norm(problem.N)
    L_A = problem.L_F + norm_N
    return SpectralEstimates(L_A=L_A, norm_N=norm_N, kappa_A=L_A / mu,
                             kappa_F=problem.L_F / mu, kappa_N=norm_N / mu,
                             kappa_Bsym=split.L_Bsym / mu)


@dataclass
class ConvergenceTrace:
    """Per-iteration record of a solver run.

    ``lyapunov`` holds the method's designated Lyapunov value when the solution
    is known and the residual ``||A(x_k)||`` otherwise.
    """

    k: list = field(default_factory=list)
    lyapunov: list = field(default_factory=list)
    err_norm: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    inner_iters: list = field(default_factory=list)
    inner_residual: list = field(default_factory=list)
    inner_converged: list = field(default_factory=list)
    method: str = ""
    alpha: float = float("nan")
    theorem_rate: Optional[float] = None
    fitted_rate: Optional[float] = None
    iterations: int = 0
    converged: bool = False
    ops: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    def append(self, k, lyapunov, err_norm=None, residual=None,
               inner_iters=None, inner_residual=None, inner_converged=None):
        if self.k and k <= self.k[-1]:
            raise ValueError("iteration indices must increase")
        if not np.isfinite(lyapunov):
            raise NumericalFailure(f"non-finite Lyapunov value at step {k}")
        # Bregman terms lose absolute accuracy near the solution
        floor = 1e-12 * max(1.0, abs(self.lyapunov[0]) if self.lyapunov else 0.0)
        if lyapunov < -floor and "negative_lyapunov" not in self.flags:
            self.flags.append("negative_lyapunov")
        self.k.append(int(k))
        self.lyapunov.append(float(lyapunov))
        self.err_norm.append(err_norm)
        self.residual.append(residual)
        self.inner_iters.append(inner_iters)
        self.inner_residual.append(inner_residual)
        self.inner_converged.append(inner_converged)

    def count(self, op, n=1):
        self.ops[op] = self.ops.get(op, 0) + n

    def __len__(self):
        return len(self.k)

    def values(self):
        return np.asarray(self.lyapunov)

    def ratios(self):
        E = self.values()
        with np.errstate(divide="ignore", invalid="ignore"):
            return E[1:] / E[:-1]

    def ratio_violations(self, rate=None, atol=1e-12):
        """Steps where ``E_{k+1} > rate * E_k + atol``; rate defaults to the
        theorem rate recorded by the solver."""
        rate = self.theorem_rate if rate is None else rate
        if rate is None:
            raise ValueError("no contraction rate to check against")
        E = self.values()
        # traces recorded with a stride compare over several steps at once
        steps = np.diff(np.asarray(self.k))
        bad = np.nonzero(E[1:] > rate ** steps * E[:-1] + atol)[0]
        return [self.k[i + 1] for i in bad]
