"""Dense reference implementations.

Each step is written as one dense linear solve of its defining system (or a
plain transcription of the explicit formulas), independent of the
substitution-based code under test.
"""

import numpy as np
import scipy.linalg as sla


def lower_part(N):
    """``B`` with ``B.T = triu(N)``, built from the definition."""
    return np.triu(N, 1).T


def aor_forward(N, mu, b, x, a):
    B = lower_part(N)
    Bsym = B + B.T
    n = len(x)
    return np.linalg.solve((1 + a * mu) * np.eye(n) - 2 * a * B, x - a * (Bsym @ x - b))


def aor_backward(N, mu, b, x, a):
    B = lower_part(N)
    Bsym = B + B.T
    n = len(x)
    return np.linalg.solve((1 + a * mu) * np.eye(n) + 2 * a * B.T, x + a * (Bsym @ x + b))


def gss_forward(grad, N, x, a):
    B = lower_part(N)
    return np.linalg.solve(np.eye(len(x)) - 2 * a * B, x - a * (grad(x) + (B + B.T) @ x))


def gss_backward(grad, N, x, a):
    B = lower_part(N)
    return np.linalg.solve(np.eye(len(x)) + 2 * a * B.T, x - a * (grad(x) - (B + B.T) @ x))


def imex_step(grad, N, mu, x, y, a):
    n = len(x)
    xh = (x + a * y) / (1 + a)
    y1 = np.linalg.solve((1 + a) * np.eye(n) + (a / mu) * N, y + a * xh - (a / mu) * grad(xh))
    return (x + a * y1) / (1 + a), y1


def inexact_step(grad, N, mu, x, y, a):
    """Exact inner solve, ``c1 = 1/2`` corrector."""
    n = len(x)
    xh = (x + a * y) / (1 + a)
    y1 = np.linalg.solve((1 + a) * np.eye(n) + (a / mu) * N, y + a * xh - (a / mu) * grad(xh))
    return (x + a * y1 - 0.5 * a * xh) / (1 + 0.5 * a), y1


def explicit_acc_step(grad, N, mu, x, y, a):
    n = len(x)
    B = lower_part(N)
    xh = (x + a * y) / (1 + a)
    rhs = y + a * xh - (a / mu) * (grad(xh) + (B + B.T) @ y)
    y1 = np.linalg.solve((1 + a) * np.eye(n) - (2 * a / mu) * B, rhs)
    return (x + a * y1 - 0.5 * a * xh) / (1 + 0.5 * a), y1


# ----------------------------------------------------------------- saddle


def _blocks(P):
    B = np.asarray(P.B)
    n, m = B.shape
    IV, IQ = P.I_V.matrix(), P.I_Q.matrix()
    Imu = sla.block_diag(P.mu_f * IV, P.mu_g * IQ)
    Nfull = np.block([[np.zeros((m, m)), B.T], [-B, np.zeros((n, n))]])
    Blow = np.block([[np.zeros((m, m)), np.zeros((m, n))], [B, np.zeros((n, n))]])
    return B, m, n, IV, IQ, Imu, Nfull, Blow


def saddle_explicit(P, x, y, a):
    """One dense solve with the lower block of the joint skew operator."""
    B, m, n, IV, IQ, Imu, Nfull, Blow = _blocks(P)
    xh = (x + a * y) / (1 + a)
    Bsym = Blow + Blow.T
    rhs = Imu @ (y + a * xh) - a * (P.grad_F(xh) + Bsym @ y)
    y1 = np.linalg.solve((1 + a) * Imu - 2 * a * Blow, rhs)
    return (x + a * y1 - 0.5 * a * xh) / (1 + 0.5 * a), y1


def saddle_imex(P, x, y, a):
    B, m, n, IV, IQ, Imu, Nfull, Blow = _blocks(P)
    xh = (x + a * y) / (1 + a)
    y1 = np.linalg.solve((1 + a) * Imu + a * Nfull, Imu @ (y + a * xh) - a * P.grad_F(xh))
    return (x + a * y1) / (1 + a), y1


def saddle_prox_quadratic(P, x, a):
    """Implicit form of the prox step for quadratic ``f`` and ``g``:
    ``(mu_f/a) I_V (u1 - u) + grad f(u1) + B.T p = 0`` and
    ``(mu_g/a) I_Q (p1 - p) + grad g(p1) - B (2 u1 - u) = 0``."""
    B, m, n, IV, IQ, *_ = _blocks(P)
    u, p = x[:m], x[m:]
    K = np.block([[P.mu_f / a * IV + P.H_f, np.zeros((m, n))],
                  [-2 * B, P.mu_g / a * IQ + P.H_g]])
    rhs = np.concatenate([P.mu_f / a * IV @ u + P.c_f - B.T @ p,
                          P.mu_g / a * IQ @ p + P.c_g - B @ u])
    return np.linalg.solve(K, rhs)


def schur(P):
    B = np.asarray(P.B)
    return B @ np.linalg.solve(P.I_V.matrix(), B.T)


def tpd(P, x, a):
    B, m, n, IV, IQ, *_ = _blocks(P)
    S = schur(P)
    u, p = x[:m], x[m:]
    u1 = u - a * np.linalg.solve(IV, P.grad_f(u) + B.T @ p)
    r = B @ np.linalg.solve(IV, P.grad_f(u1)) + P.grad_g(p) + S @ p - B @ (2 * u1 - u)
    return np.concatenate([u1, p - a * np.linalg.solve(IQ, r)])


def atpd(P, x, y, a):
    B, m, n, IV, IQ, *_ = _blocks(P)
    S = schur(P)
    xh = (x + a * y) / (1 + a)
    uh, ph = xh[:m], xh[m:]
    v, q = y[:m], y[m:]
    gf = P.grad_f(uh)
    # (v1 - v)/a = (uh - v1)/2 - ..., (q1 - q)/a = ph - q1 - ...
    v1 = (v + 0.5 * a * uh - (a / P.mu_f) * np.linalg.solve(IV, gf + B.T @ q)) / (1 + 0.5 * a)
    r = P.grad_g(ph) + S @ ph + B @ v - 2 * B @ v1 + B @ np.linalg.solve(IV, gf)
    q1 = (q + a * ph - a * np.linalg.solve(IQ, r)) / (1 + a)
    y1 = np.concatenate([v1, q1])
    # (x1 - xh)/a = (y1 - y) - (x1 - xh)/4
    return xh + (y1 - y) / (1 / a + 0.25), y1
