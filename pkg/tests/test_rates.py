import numpy as np
import pytest
from hypothesis import given, strategies as st

from monosplit import EstimationError
from monosplit.harness import estimate_rate, slope_fit


def test_exact_geometric():
    E = 0.9 ** np.arange(220)
    assert E[-1] < 1e-10
    fit = estimate_rate(E)
    assert fit.rho_hat == pytest.approx(0.9, abs=1e-10)
    assert fit.r_squared == pytest.approx(1.0)


def test_constant_trace():
    assert estimate_rate(np.full(30, 2.5)).rho_hat == 1.0


def test_noisy_geometric():
    rng = np.random.default_rng(2024)
    k = np.arange(200)
    E = 0.9 ** k * (1 + 0.01 * rng.standard_normal(k.size))
    assert estimate_rate(E).rho_hat == pytest.approx(0.9, abs=0.005)


@given(st.floats(0.05, 0.999), st.integers(10, 300))
def test_geometric_property(rho, n):
    E = rho ** np.arange(n)
    if np.count_nonzero(E > 100 * np.finfo(float).eps) < 10:
        return
    assert estimate_rate(E).rho_hat == pytest.approx(rho, rel=1e-8)


def test_floor_excludes_saturation():
    E = np.concatenate([0.5 ** np.arange(60), np.full(100, 1e-20)])
    fit = estimate_rate(E)
    assert fit.rho_hat == pytest.approx(0.5, rel=1e-10)
    assert fit.window[1] <= 60


def test_window_is_tail():
    E = np.concatenate([0.5 ** np.arange(5), 0.5 ** 4 * 0.9 ** np.arange(1, 96)])
    fit = estimate_rate(E)
    assert fit.window == (40, 100)
    assert fit.rho_hat == pytest.approx(0.9, rel=1e-10)


def test_explicit_indices():
    k = np.arange(0, 300, 10)
    assert estimate_rate(0.99 ** k, k=k).rho_hat == pytest.approx(0.99, rel=1e-12)


@pytest.mark.parametrize("E", [np.ones(9), np.zeros(20), [], 1e-2 ** np.arange(30)])
def test_too_few_entries(E):
    with pytest.raises(EstimationError):
        estimate_rate(E)


def test_slope_fit_exact_and_ci():
    x = np.array([1e2, 1e3, 1e4])
    fit = slope_fit(x, 3 * x ** 0.5)
    assert fit.slope == pytest.approx(0.5) and fit.ci_low == pytest.approx(0.5)
    rng = np.random.default_rng(0)
    y = x ** 1.0 * np.exp(0.05 * rng.standard_normal(3))
    fit = slope_fit(x, y)
    assert fit.ci_low < fit.slope < fit.ci_high
    two = slope_fit([1, 10], [1, 100])
    assert two.slope == pytest.approx(2.0) and two.ci_high == np.inf
    with pytest.raises(EstimationError):
        slope_fit([1.0], [1.0])
