import numpy as np
import pytest
from hypothesis import given, strategies as st

from monosplit import MalformedProblemError, MonotoneProblem, SaddleProblem
from monosplit.core import _to_dense
from monosplit.harness import InfeasibleSpecError, ProblemSpec, generate
from monosplit.harness.generate import newton_solve, random_orthogonal


def test_shifted_skew_is_byte_identical():
    spec = ProblemSpec("shifted_skew_linear", dim=2, seed=12345)
    a, b = generate(spec), generate(spec)
    assert _to_dense(a.N).tobytes() == _to_dense(b.N).tobytes()
    assert a.x_star.tobytes() == b.x_star.tobytes()


def test_different_seeds_differ():
    a = generate(ProblemSpec("quadratic_plus_skew", dim=5, seed=1))
    b = generate(ProblemSpec("quadratic_plus_skew", dim=5, seed=2))
    assert not np.array_equal(_to_dense(a.N), _to_dense(b.N))


def test_dict_spec_and_large_seed():
    p = generate({"kind": "shifted_skew_linear", "dim": 3, "seed": 2 ** 64 - 1})
    assert isinstance(p, MonotoneProblem)


def test_kappa_F_exact():
    p = generate(ProblemSpec("quadratic_plus_skew", dim=20, kappa_F=100.0, seed=3))
    ev = np.linalg.eigvalsh(p.hessian)
    assert ev[-1] / ev[0] == pytest.approx(100.0, rel=1e-12)
    assert (p.mu, p.L_F) == pytest.approx((1.0, 100.0), rel=1e-12)


@given(st.integers(2, 40), st.floats(0.0, 100.0), st.integers(0, 2 ** 32))
def test_skew_scaling_hits_target(dim, kB, seed):
    p = generate(ProblemSpec("quadratic_plus_skew", dim=dim, kappa_Bsym=kB, seed=seed))
    N = _to_dense(p.N)
    np.testing.assert_array_equal(N, -N.T)
    B = np.tril(N, -1)
    assert np.linalg.norm(B + B.T, 2) == pytest.approx(kB, rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("kind", ["shifted_skew_linear", "quadratic_plus_skew"])
def test_monotone_solution(kind):
    p = generate(ProblemSpec(kind, dim=30, kappa_F=50.0, kappa_Bsym=5.0, seed=0))
    assert np.linalg.norm(p.A(p.x_star)) <= 1e-10


def test_constrained_qp_kkt():
    p = generate(ProblemSpec("constrained_qp", m=40, n=20, seed=0))
    assert isinstance(p, SaddleProblem) and p.mu_g == 0
    assert p.kkt_residual(p.u_star, p.p_star) <= 1e-10
    np.testing.assert_allclose(p.B @ p.u_star, p.b_rhs, atol=1e-10)


def test_saddle_spectra_exact():
    p = generate(ProblemSpec("bilinear_saddle", m=40, n=20, kappa_f=30.0, kappa_g=7.0,
                             kappa_S=50.0, mu_f=2.0, mu_g=0.5, L_S=3.0, seed=4))
    sv = np.linalg.svd(p.B, compute_uv=False)
    assert sv[0] ** 2 == pytest.approx(3.0, rel=1e-12)
    assert sv[0] ** 2 / sv[-1] ** 2 == pytest.approx(50.0, rel=1e-10)
    ef, eg = np.linalg.eigvalsh(p.H_f), np.linalg.eigvalsh(p.H_g)
    assert ef[-1] / ef[0] == pytest.approx(30.0, rel=1e-10)
    assert eg[-1] / eg[0] == pytest.approx(7.0, rel=1e-10)
    assert p.kkt_residual(p.u_star, p.p_star) <= 1e-10


def test_schur_dual_metric():
    p = generate(ProblemSpec("constrained_qp", m=10, n=4, dual_metric="schur", seed=1))
    np.testing.assert_allclose(p.I_Q.matrix(), p.B @ p.B.T, rtol=1e-14)


def test_log_cosh_family():
    spec = ProblemSpec("quadratic_plus_skew", dim=15, kappa_F=20.0, kappa_Bsym=3.0,
                       epsilon=2.0, seed=5)
    p = generate(spec)
    assert np.linalg.norm(p.A(p.x_star)) <= 1e-11
    assert p.mu == pytest.approx(1.0, rel=1e-12) and p.L_F == pytest.approx(20.0, rel=1e-12)
    rng = np.random.default_rng(0)
    for _ in range(50):
        x, y = rng.standard_normal((2, 15)) * 3
        d = p.grad_F(x) - p.grad_F(y)
        assert d @ (x - y) >= p.mu * (x - y) @ (x - y) - 1e-10
        assert np.linalg.norm(d) <= p.L_F * np.linalg.norm(x - y) + 1e-10


@pytest.mark.parametrize("kw", [
    dict(kind="quadratic_plus_skew", dim=3, kappa_F=0.5),
    dict(kind="quadratic_plus_skew", dim=3, kappa_Bsym=-1.0),
    dict(kind="quadratic_plus_skew", dim=3, epsilon=100.0),
    dict(kind="quadratic_plus_skew", dim=3, mu=0.0),
    dict(kind="bilinear_saddle", m=4, n=2, kappa_g=0.9),
    dict(kind="constrained_qp", m=4, n=2, kappa_S=0.1),
    dict(kind="constrained_qp", m=4, n=2, L_S=0.0),
])
def test_infeasible_specs(kw):
    with pytest.raises(InfeasibleSpecError):
        ProblemSpec(**kw)


@pytest.mark.parametrize("kw", [
    dict(kind="nope", dim=3),
    dict(kind="quadratic_plus_skew"),
    dict(kind="bilinear_saddle", m=2, n=3),
    dict(kind="shifted_skew_linear", dim=2, seed=-1),
    dict(kind="constrained_qp", m=4, n=2, dual_metric="other"),
])
def test_malformed_specs(kw):
    with pytest.raises(MalformedProblemError):
        ProblemSpec(**kw)


def test_spec_key_stable():
    a = ProblemSpec("constrained_qp", m=4, n=2, seed=9)
    assert a.key() == ProblemSpec("constrained_qp", m=4, n=2, seed=9).key()
    assert a.key() != ProblemSpec("constrained_qp", m=4, n=2, seed=8).key()


def test_random_orthogonal():
    Q = random_orthogonal(7, np.random.default_rng(0))
    np.testing.assert_allclose(Q.T @ Q, np.eye(7), atol=1e-14)


def test_newton_stall_reported():
    with pytest.raises(RuntimeError):
        newton_solve(lambda x: x ** 2 + 1.0, lambda x: np.diag(2 * x + 1e-3), np.ones(1),
                     max_iter=20)
