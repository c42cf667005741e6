"""Seeded test instances with prescribed spectra and a known solution."""

from dataclasses import asdict, dataclass, field
from typing import Optional
import hashlib
import json

import numpy as np
import scipy.sparse as sp

from ..core import MalformedProblemError, MonotoneProblem, spectral_norm_sym, _to_dense
from ..saddle import Metric, SaddleProblem

__all__ = ["ProblemSpec", "InfeasibleSpecError", "generate", "KINDS",
           "random_orthogonal", "random_skew", "newton_solve"]

KINDS = ("shifted_skew_linear", "quadratic_plus_skew", "bilinear_saddle", "constrained_qp")
NEWTON_TOL = 1e-12


class InfeasibleSpecError(ValueError):
    """The requested instance cannot exist (for example a condition number below 1)."""


@dataclass
class ProblemSpec:
    """Recipe for a generated instance.

    Parameters
    ----------
    kind : str
        One of `KINDS`.
    dim : int, optional
        Unknowns of the monotone kinds.
    m, n : int, optional
        Primal and dual sizes of the saddle kinds (``m >= n``).
    kappa_F, kappa_Bsym : float
        Monotone kinds: ``L_F / mu`` and ``L_Bsym / mu``.  ``kappa_Bsym = 0``
        gives ``N = 0``.
    mu : float
        Strong monotonicity constant of the monotone kinds.
    epsilon : float
        Weight of the ``sum log cosh(x_i)`` term added to ``quadratic_plus_skew``.
    kappa_f, kappa_g, kappa_S : float
        Saddle kinds, Euclidean condition numbers of ``f``, ``g`` and
        ``S = B B.T``.  ``kappa_g`` is ignored by ``constrained_qp``.
    mu_f, mu_g, L_S : float
        Saddle scales.
    dual_metric : {"identity", "schur"}
        ``"schur"`` sets ``I_Q = B B.T``.
    seed : int
        64-bit seed; it fixes every random draw.
    paths : dict
        Optional Matrix Market files replacing generated matrices, keys ``N``
        and ``H`` (monotone kinds) or ``B`` and ``H_f`` (saddle kinds).
    """

    kind: str
    dim: Optional[int] = None
    m: Optional[int] = None
    n: Optional[int] = None
    kappa_F: float = 10.0
    kappa_Bsym: float = 1.0
    mu: float = 1.0
    epsilon: float = 0.0
    kappa_f: float = 10.0
    kappa_g: float = 10.0
    kappa_S: float = 10.0
    mu_f: float = 1.0
    mu_g: float = 1.0
    L_S: float = 1.0
    dual_metric: str = "identity"
    seed: int = 0
    paths: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise MalformedProblemError(f"unknown kind {self.kind!r}; choose from {KINDS}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise MalformedProblemError("seed must be a 64-bit unsigned integer")
        if self.dual_metric not in ("identity", "schur"):
            raise MalformedProblemError("dual_metric must be 'identity' or 'schur'")
        if self.kind in ("shifted_skew_linear", "quadratic_plus_skew"):
            if not self.dim or self.dim < 1:
                raise MalformedProblemError(f"{self.kind} needs dim >= 1")
            if not self.mu > 0:
                raise InfeasibleSpecError("mu must be positive")
            if self.kappa_F < 1:
                raise InfeasibleSpecError(f"kappa_F={self.kappa_F} < 1")
            if self.kappa_Bsym < 0:
                raise InfeasibleSpecError("kappa_Bsym must be nonnegative")
            if self.epsilon < 0 or self.epsilon > 0.5 * (self.kappa_F - 1) * self.mu:
                raise InfeasibleSpecError(
                    "epsilon must lie in [0, (kappa_F - 1) mu / 2] to keep the bounds")
        else:
            if not (self.m and self.n) or self.m < self.n or self.n < 1:
                raise MalformedProblemError(f"{self.kind} needs m >= n >= 1")
            cond = [("kappa_f", self.kappa_f), ("kappa_S", self.kappa_S)]
            if self.kind == "bilinear_saddle":
                cond.append(("kappa_g", self.kappa_g))
            for name, value in cond:
                if value < 1:
                    raise InfeasibleSpecError(f"{name}={value} < 1")
            if not (self.mu_f > 0 and self.mu_g > 0 and self.L_S > 0):
                raise InfeasibleSpecError("mu_f, mu_g and L_S must be positive")

    def to_dict(self):
        d = {k: v for k, v in asdict(self).items() if v is not None}
        if not d["paths"]:
            d.pop("paths")
        return d

    def key(self):
        """Stable hash used to key reports."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def random_orthogonal(n, rng):
    """Haar orthogonal matrix from the QR factorization of a Gaussian matrix."""
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def _conjugate(eigs, rng):
    Q = random_orthogonal(eigs.size, rng)
    H = (Q * eigs) @ Q.T
    return 0.5 * (H + H.T)


def random_skew(n, L_Bsym, rng):
    """Skew matrix from Gaussian strictly upper entries with ``||Bsym|| = L_Bsym``."""
    U = np.triu(rng.standard_normal((n, n)), 1)
    N = U - U.T
    if L_Bsym == 0 or n == 1:
        return np.zeros((n, n))
    B = np.tril(N, -1)
    scale = L_Bsym / spectral_norm_sym(B + B.T)
    return N * scale


def newton_solve(A, jacobian, x0, tol=NEWTON_TOL, max_iter=100):
    """Damped Newton on ``A(x) = 0`` with backtracking on ``||A(x)||``."""
    x = np.array(x0, dtype=float)
    r = A(x)
    rn = np.linalg.norm(r)
    for _ in range(max_iter):
        if rn <= tol:
            return x
        d = np.linalg.solve(jacobian(x), -r)
        t = 1.0
        while t > 1e-10:
            x_new = x + t * d
            r_new = A(x_new)
            if np.linalg.norm(r_new) < (1 - 1e-4 * t) * rn:
                break
            t *= 0.5
        x, r, rn = x_new, r_new, np.linalg.norm(r_new)
    if rn > tol:
        raise RuntimeError(f"Newton stalled at residual {rn:.3e}")
    return x


def _load(spec, key):
    if key not in spec.paths:
        return None
    from .io import read_matrix
    return read_matrix(spec.paths[key])


def _monotone(spec, rng):
    n, mu = spec.dim, spec.mu
    H = _load(spec, "H")
    if H is None:
        if spec.kind == "shifted_skew_linear":
            H = mu * np.eye(n)
        else:
            top = spec.kappa_F * mu - spec.epsilon
            H = _conjugate(np.geomspace(mu, top, n) if n > 1 else np.array([mu]), rng)
    else:
        H = _to_dense(H)
    N = _load(spec, "N")
    if N is None:
        N = random_skew(n, spec.kappa_Bsym * mu, rng)
    rhs = rng.standard_normal(n)
    if spec.epsilon == 0:
        return MonotoneProblem.quadratic(H, N, rhs)
    eps = spec.epsilon
    Nd = _to_dense(N)
    eig = np.linalg.eigvalsh(H)
    grad = lambda x: H @ x - rhs + eps * np.tanh(x)
    value = lambda x: 0.5 * x @ (H @ x) - rhs @ x + eps * np.sum(np.logaddexp(x, -x) - np.log(2))
    jac = lambda x: H + Nd + np.diag(eps / np.cosh(x) ** 2)
    x_star = newton_solve(lambda x: grad(x) + Nd @ x, jac, np.zeros(n),
                          tol=NEWTON_TOL * max(1.0, np.linalg.norm(rhs)))
    return MonotoneProblem(dim=n, grad_F=grad, N=N, mu=float(eig[0]),
                           L_F=float(eig[-1] + eps), F_value=value, x_star=x_star)


def _coupling(spec, rng):
    m, n = spec.m, spec.n
    B = _load(spec, "B")
    if B is not None:
        return _to_dense(B)
    sigma = np.sqrt(np.geomspace(spec.L_S / spec.kappa_S, spec.L_S, n))
    U = random_orthogonal(n, rng)
    V = random_orthogonal(m, rng)[:, :n]
    return (U * sigma) @ V.T


def _saddle(spec, rng):
    m, n = spec.m, spec.n
    H_f = _load(spec, "H_f")
    if H_f is None:
        H_f = _conjugate(np.geomspace(spec.mu_f, spec.kappa_f * spec.mu_f, m), rng)
    else:
        H_f = _to_dense(H_f)
    B = _coupling(spec, rng)
    I_Q = Metric.dense(B @ B.T) if spec.dual_metric == "schur" else None
    c_f = rng.standard_normal(m)
    if spec.kind == "constrained_qp":
        b = rng.standard_normal(n)
        return SaddleProblem.constrained_qp(H_f, c_f, B, b, I_Q=I_Q)
    H_g = _conjugate(np.geomspace(spec.mu_g, spec.kappa_g * spec.mu_g, n), rng)
    c_g = rng.standard_normal(n)
    return SaddleProblem.quadratic(H_f, c_f, H_g, c_g, B, I_Q=I_Q)


def generate(spec):
    """Build the instance described by ``spec``.

    Quadratic parts are orthogonal conjugations of geometric spectra, so
    ``mu`` and ``L`` are exact.  The skew part is scaled to the requested
    ``||Bsym||`` and the saddle coupling has singular values placed to give
    ``kappa_S`` exactly.  The solution is stored on the returned problem
    (``x_star`` or ``u_star``/``p_star``): a dense direct solve for quadratic
    data, damped Newton to a ``1e-12`` residual otherwise.

    Returns
    -------
    MonotoneProblem or SaddleProblem

    Raises
    ------
    InfeasibleSpecError
        Condition numbers below one or an ``epsilon`` that breaks the bounds.
    """
    if isinstance(spec, dict):
        spec = ProblemSpec(**spec)
    rng = np.random.default_rng(np.random.SeedSequence(int(spec.seed)))
    if spec.kind in ("shifted_skew_linear", "quadratic_plus_skew"):
        return _monotone(spec, rng)
    return _saddle(spec, rng)
