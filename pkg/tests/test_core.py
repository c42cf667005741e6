import math
import warnings

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from monosplit import (ConvergenceTrace, IndefiniteLyapunovWarning, MalformedProblemError,
                       MonotoneProblem, NumericalFailure, bregman, check_oracles,
                       condition_numbers, lyapunov_acc, lyapunov_acc_alphaB, lyapunov_alphaB,
                       lyapunov_alphaBD, lyapunov_Eq, skew_norm, spectral_norm_sym, split_skew)
from monosplit.harness import ProblemSpec, generate

import oracles


def skew_from(U):
    U = np.triu(U, 1)
    return U - U.T


def half_sq():
    return (lambda x: 0.5 * x @ x), (lambda x: np.asarray(x, dtype=float))


# ------------------------------------------------------------------ split


def test_split_two_by_two():
    s = split_skew(np.array([[0.0, 1.0], [-1.0, 0.0]]))
    np.testing.assert_array_equal(s.B, [[0, 0], [1, 0]])
    np.testing.assert_array_equal(s.Bsym, [[0, 1], [1, 0]])
    assert s.L_Bsym == pytest.approx(1.0, rel=1e-10)


def test_split_zero():
    s = split_skew(np.zeros((3, 3)))
    assert not s.B.any() and not s.Bsym.any()
    assert s.L_Bsym == 0.0


def test_split_three_by_three():
    N = np.array([[0.0, 1, 2], [-1, 0, 3], [-2, -3, 0]])
    s = split_skew(N)
    np.testing.assert_array_equal(s.B, [[0, 0, 0], [1, 0, 0], [2, 3, 0]])
    np.testing.assert_array_equal(s.Bsym, [[0, 1, 2], [1, 0, 3], [2, 3, 0]])
    dense = np.max(np.abs(np.linalg.eigvalsh(s.Bsym)))
    assert s.L_Bsym == pytest.approx(dense, rel=1e-10)


def test_split_sparse_matches_dense():
    rng = np.random.default_rng(0)
    N = skew_from(rng.standard_normal((80, 80)) * (rng.random((80, 80)) < 0.1))
    sd, ss = split_skew(N), split_skew(sp.csr_matrix(N))
    np.testing.assert_array_equal(ss.B.toarray(), sd.B)
    rhs = rng.standard_normal(80)
    np.testing.assert_allclose(ss.solve(1.3, -0.4, rhs), sd.solve(1.3, -0.4, rhs), rtol=1e-13)
    np.testing.assert_allclose(ss.solve(1.3, 0.4, rhs, upper=True),
                               sd.solve(1.3, 0.4, rhs, upper=True), rtol=1e-13)


@given(hnp.arrays(np.int64, st.tuples(st.integers(2, 12), st.just(12)),
                  elements=st.integers(-50, 50)))
def test_split_roundtrip_integer(U):
    n = U.shape[0]
    N = skew_from(U[:, :n].astype(float))
    s = split_skew(N)
    np.testing.assert_array_equal(s.Bsym - 2 * s.B, N)
    np.testing.assert_array_equal(2 * s.B.T - s.Bsym, N)


@given(st.integers(2, 40), st.integers(0, 2 ** 32 - 1))
def test_split_roundtrip_gaussian(n, seed):
    N = skew_from(np.random.default_rng(seed).standard_normal((n, n)))
    s = split_skew(N)
    scale = np.abs(N).max()
    assert np.abs(s.Bsym - 2 * s.B - N).max() <= 1e-15 * scale
    assert np.abs(2 * s.B.T - s.Bsym - N).max() <= 1e-15 * scale


def test_rejects_non_skew():
    with pytest.raises(MalformedProblemError):
        split_skew(np.array([[0.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(MalformedProblemError):
        split_skew(np.array([[1e-30, 1.0], [-1.0, 0.0]]))
    with pytest.raises(MalformedProblemError):
        split_skew(np.zeros((2, 3)))


def test_skew_tolerance_is_relative():
    N = np.array([[0.0, 1e6], [-1e6 + 1e-7, 0.0]])
    split_skew(N)
    with pytest.raises(MalformedProblemError):
        split_skew(np.array([[0.0, 1.0], [-1.0 + 1e-9, 0.0]]))


# ------------------------------------------------------------- norms


def test_spectral_norm_examples():
    assert spectral_norm_sym(np.array([[0.0, 1.0], [1.0, 0.0]])) == pytest.approx(1.0, rel=1e-10)
    assert spectral_norm_sym(np.diag([2.0, -3.0])) == pytest.approx(3.0, rel=1e-10)


def test_spectral_norm_random_50():
    M = np.random.default_rng(7).standard_normal((50, 50))
    M = M + M.T
    assert spectral_norm_sym(M) == pytest.approx(np.max(np.abs(np.linalg.eigvalsh(M))), rel=1e-8)


@given(st.integers(2, 60), st.integers(0, 2 ** 32 - 1))
def test_spectral_norm_property(n, seed):
    M = np.random.default_rng(seed).standard_normal((n, n))
    M = M + M.T
    assert spectral_norm_sym(M) == pytest.approx(np.max(np.abs(np.linalg.eigvalsh(M))), rel=1e-8)


def test_spectral_norm_deterministic():
    M = np.random.default_rng(3).standard_normal((30, 30))
    M = M + M.T
    assert spectral_norm_sym(M) == spectral_norm_sym(M)


def test_skew_norm_differs_from_bsym_in_general():
    N = np.array([[0.0, 1, 1], [-1, 0, 1], [-1, -1, 0]])
    assert skew_norm(N) == pytest.approx(math.sqrt(3), rel=1e-10)
    assert split_skew(N).L_Bsym == pytest.approx(2.0, rel=1e-10)


# ------------------------------------------------------------- Bregman


def test_bregman_examples():
    F, g = half_sq()
    assert bregman(F, g, np.array([1.0, 0.0]), np.zeros(2)) == 0.5
    H = np.diag([1.0, 4.0])
    assert bregman(lambda x: 0.5 * x @ H @ x, lambda x: H @ x, np.ones(2), np.zeros(2)) == 2.5
    x = np.array([0.3, -2.0])
    assert bregman(F, g, x, x) == 0.0


def test_bregman_bounds_generated():
    rng = np.random.default_rng(1)
    prob = generate(ProblemSpec("quadratic_plus_skew", dim=15, kappa_F=30.0, seed=4))
    for _ in range(200):
        x, y = rng.standard_normal((2, 15))
        d = bregman(prob.F_value, prob.grad_F, x, y)
        dd = float((x - y) @ (x - y))
        assert 0.5 * prob.mu * dd * (1 - 1e-10) <= d <= 0.5 * prob.L_F * dd * (1 + 1e-10)


@given(st.integers(0, 2 ** 16), st.sampled_from([0.0, 3.0]))
def test_bregman_three_term(seed, eps):
    prob = generate(ProblemSpec("quadratic_plus_skew", dim=8, kappa_F=20.0, epsilon=eps, seed=seed))
    x, y, z = np.random.default_rng(seed).standard_normal((3, 8)) * 2
    D = lambda a, b: bregman(prob.F_value, prob.grad_F, a, b)
    lhs = (prob.grad_F(x) - prob.grad_F(y)) @ (y - z)
    rhs = D(z, x) - D(z, y) - D(y, x)
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


@pytest.mark.parametrize("eps", [0.0, 2.0])
def test_gradient_matches_finite_differences(eps):
    prob = generate(ProblemSpec("quadratic_plus_skew", dim=10, kappa_F=10.0, epsilon=eps, seed=9))
    rng = np.random.default_rng(2)
    h = 1e-5
    for _ in range(5):
        x = rng.standard_normal(10)
        fd = np.array([(prob.F_value(x + h * e) - prob.F_value(x - h * e)) / (2 * h)
                       for e in np.eye(10)])
        g = prob.grad_F(x)
        assert np.linalg.norm(fd - g) <= 1e-6 * np.linalg.norm(g)


def test_check_oracles_catches_wrong_constants():
    prob = generate(ProblemSpec("quadratic_plus_skew", dim=6, kappa_F=10.0, seed=0))
    check_oracles(prob)
    bad = MonotoneProblem(dim=6, grad_F=prob.grad_F, N=prob.N, mu=prob.mu, L_F=prob.L_F / 5)
    with pytest.raises(MalformedProblemError):
        check_oracles(bad)


# ---------------------------------------------------------- Lyapunov


def test_lyapunov_eq_examples():
    xs = np.array([1.0, -2.0])
    assert lyapunov_Eq(xs, xs) == 0.0
    assert lyapunov_Eq(xs + [1, 1], xs) == 1.0
    assert lyapunov_Eq(xs + [3, 4], xs) == 12.5
    with pytest.raises(ValueError):
        lyapunov_Eq(np.zeros(3), xs)


def test_lyapunov_alphaB_examples():
    Bsym = np.array([[0.0, 1.0], [1.0, 0.0]])
    xs = np.zeros(2)
    assert lyapunov_alphaB(xs, xs, 0.5, Bsym) == 0.0
    assert lyapunov_alphaB(np.array([1.0, 0.0]), xs, 0.5, Bsym) == 0.5
    assert lyapunov_alphaB(np.array([1.0, 1.0]), xs, 0.5, Bsym) == 0.5


def test_lyapunov_alphaB_warns_past_bound():
    Bsym = np.array([[0.0, 1.0], [1.0, 0.0]])
    with pytest.warns(IndefiniteLyapunovWarning):
        lyapunov_alphaB(np.ones(2), np.zeros(2), 1.0, Bsym, L_Bsym=1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        lyapunov_alphaB(np.ones(2), np.zeros(2), 0.9, Bsym, L_Bsym=1.0)


def test_lyapunov_alphaBD_example():
    F, g = half_sq()
    xs = np.zeros(2)
    val = lyapunov_alphaBD(np.array([1.0, 0.0]), xs, 0.2, np.zeros((2, 2)), F, g)
    assert val == pytest.approx(0.4, abs=1e-15)
    assert lyapunov_alphaBD(xs, xs, 0.2, np.zeros((2, 2)), F, g) == 0.0


def test_lyapunov_acc_examples():
    F, g = half_sq()
    xs = np.zeros(2)
    assert lyapunov_acc(xs, xs, xs, F, g, 1.0) == 0.0
    assert lyapunov_acc(np.array([1.0, 0]), np.array([0, 1.0]), xs, F, g, 1.0) == 1.0
    x, y = np.array([0.3, 0.1]), np.array([-1.0, 2.0])
    assert lyapunov_acc_alphaB(x, y, xs, 0.3, np.zeros((2, 2)), F, g, 1.0) == lyapunov_acc(x, y, xs, F, g, 1.0)


def test_lyapunov_compositional_random():
    prob = generate(ProblemSpec("quadratic_plus_skew", dim=12, kappa_F=50.0, kappa_Bsym=5.0,
                                epsilon=1.0, seed=5))
    s = split_skew(prob.N)
    rng = np.random.default_rng(0)
    xs = prob.x_star
    for _ in range(20):
        x, y = rng.standard_normal((2, 12))
        a = 0.05
        e, ey = x - xs, y - xs
        bD = prob.F_value(xs) - prob.F_value(x) - prob.grad_F(x) @ (xs - x)
        ref = 0.5 * (e @ e - a * e @ s.Bsym @ e) - a * bD
        assert lyapunov_alphaBD(x, xs, a, s.Bsym, prob.F_value, prob.grad_F) == pytest.approx(ref, rel=1e-12, abs=1e-12)
        bx = prob.F_value(x) - prob.F_value(xs) - prob.grad_F(xs) @ (x - xs)
        ref = bx + 0.5 * prob.mu * ey @ ey
        assert lyapunov_acc(x, y, xs, prob.F_value, prob.grad_F, prob.mu) == pytest.approx(ref, rel=1e-12, abs=1e-12)
        ref = bx + 0.5 * (prob.mu * ey @ ey - a * ey @ s.Bsym @ ey)
        assert lyapunov_acc_alphaB(x, y, xs, a, s.Bsym, prob.F_value, prob.grad_F, prob.mu) == pytest.approx(ref, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("eps", [0.0, 1.5])
def test_lyapunov_alphaBD_nonnegative(eps):
    prob = generate(ProblemSpec("quadratic_plus_skew", dim=10, kappa_F=20.0, kappa_Bsym=8.0,
                                epsilon=eps, seed=11))
    s = split_skew(prob.N)
    a = 0.999 / max(2 * s.L_Bsym, 2 * prob.L_F)
    rng = np.random.default_rng(1)
    for _ in range(1000):
        x = prob.x_star + rng.standard_normal(10) * rng.uniform(1e-3, 10)
        assert lyapunov_alphaBD(x, prob.x_star, a, s.Bsym, prob.F_value, prob.grad_F) >= 0


# ----------------------------------------------------- condition numbers


def test_condition_numbers_examples():
    p = MonotoneProblem.quadratic(np.eye(2), np.zeros((2, 2)))
    c = condition_numbers(p, split_skew(p.N))
    assert (c.kappa_F, c.kappa_N, c.L_A) == (1.0, 0.0, 1.0)
    N = np.array([[0.0, 10.0], [-10.0, 0.0]])
    p = MonotoneProblem.quadratic(np.diag([1.0, 100.0]), N)
    c = condition_numbers(p, split_skew(N))
    assert c.kappa_F == 100.0
    assert c.kappa_N == pytest.approx(10.0, rel=1e-10)
    assert c.kappa_Bsym == pytest.approx(10.0, rel=1e-10)
    assert c.L_A == pytest.approx(110.0, rel=1e-10)


@given(st.integers(0, 2 ** 16))
def test_kappa_A_subadditive(seed):
    prob = generate(ProblemSpec("quadratic_plus_skew", dim=12, kappa_F=30.0, kappa_Bsym=7.0, seed=seed))
    c = condition_numbers(prob, split_skew(prob.N))
    A = prob.linear_operator()
    assert np.linalg.norm(A, 2) <= c.L_A * (1 + 1e-8)
    assert c.kappa_A <= c.kappa_F + c.kappa_N + 1e-8
    assert c.norm_N == pytest.approx(np.linalg.norm(prob.N, 2), rel=1e-8)


# ------------------------------------------------------------- problem


def test_problem_validation():
    with pytest.raises(MalformedProblemError):
        MonotoneProblem(dim=2, grad_F=lambda x: x, N=np.zeros((3, 3)), mu=1, L_F=1)
    with pytest.raises(MalformedProblemError):
        MonotoneProblem(dim=2, grad_F=lambda x: x, N=np.zeros((2, 2)), mu=2, L_F=1)
    with pytest.raises(MalformedProblemError):
        MonotoneProblem(dim=2, grad_F=lambda x: x, N=np.zeros((2, 2)), mu=0, L_F=1)


def test_quadratic_solution():
    N = np.array([[0.0, 1.0], [-1.0, 0.0]])
    p = MonotoneProblem.quadratic(np.eye(2), N, rhs=np.array([1.0, 0.0]))
    np.testing.assert_allclose(p.x_star, [0.5, 0.5], rtol=1e-15)
    assert p.residual(p.x_star) <= 1e-15


# --------------------------------------------------------------- trace


def test_trace_bookkeeping():
    t = ConvergenceTrace(theorem_rate=0.5)
    for k, v in enumerate([8.0, 4.0, 2.5, 1.0]):
        t.append(k, v)
    assert t.ratio_violations() == [2]
    np.testing.assert_allclose(t.ratios(), [0.5, 0.625, 0.4])
    with pytest.raises(ValueError):
        t.append(3, 0.5)
    with pytest.raises(NumericalFailure):
        t.append(5, float("nan"))


def test_trace_stride_uses_power_of_rate():
    t = ConvergenceTrace(theorem_rate=0.5)
    t.append(0, 16.0)
    t.append(3, 2.0)
    assert t.ratio_violations() == []
    t.append(5, 0.6)
    assert t.ratio_violations() == [5]


def test_trace_flags_negative():
    t = ConvergenceTrace()
    t.append(0, 1.0)
    t.append(1, -1e-14)
    assert "negative_lyapunov" not in t.flags
    t.append(2, -1e-6)
    assert "negative_lyapunov" in t.flags


def test_oracle_lower_part_convention():
    N = np.array([[0.0, 1, 2], [-1, 0, 3], [-2, -3, 0]])
    np.testing.assert_array_equal(oracles.lower_part(N), split_skew(N).B)
