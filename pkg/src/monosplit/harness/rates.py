"""Contraction-rate and scaling-law fits."""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..core import EstimationError

__all__ = ["RateFit", "SlopeFit", "estimate_rate", "slope_fit", "MIN_ENTRIES",
           "TAIL_FRACTION", "FLOOR_FACTOR"]

MIN_ENTRIES = 10
TAIL_FRACTION = 0.6
FLOOR_FACTOR = 100.0


@dataclass(frozen=True)
class RateFit:
    """Fitted per-step contraction ``rho_hat`` over ``window = (start, stop)``
    (trace positions, ``stop`` exclusive)."""

    rho_hat: float
    r_squared: float
    window: tuple


@dataclass(frozen=True)
class SlopeFit:
    """Log-log least-squares slope with a two-sided confidence interval."""

    slope: float
    intercept: float
    ci_low: float
    ci_high: float
    r_squared: float
    confidence: float


def estimate_rate(trace, k=None, tail=TAIL_FRACTION, floor_factor=FLOOR_FACTOR):
    """Fit ``log E_k ~ a + k log rho`` over the tail of a trace.

    Entries are usable up to the first value at or below ``floor_factor *
    eps * E_0``; the fit uses the last ``tail`` fraction of them.

    Parameters
    ----------
    trace : ConvergenceTrace or array_like
        Lyapunov values; a trace also supplies its iteration indices.
    k : array_like, optional
        Iteration indices for a plain array (defaults to ``0, 1, ...``).

    Returns
    -------
    RateFit
        ``rho_hat = exp(slope)`` clipped to at most 1.

    Raises
    ------
    EstimationError
        Fewer than ten usable entries.
    """
    if hasattr(trace, "lyapunov"):
        E = np.asarray(trace.lyapunov, dtype=float)
        k = np.asarray(trace.k, dtype=float)
    else:
        E = np.asarray(trace, dtype=float)
        k = np.arange(E.size, dtype=float) if k is None else np.asarray(k, dtype=float)
    if E.size == 0 or not E[0] > 0:
        raise EstimationError("need a positive initial value")
    floor = floor_factor * np.finfo(float).eps * E[0]
    below = np.nonzero(~(E > floor))[0]
    usable = E.size if below.size == 0 else int(below[0])
    if usable < MIN_ENTRIES:
        raise EstimationError(f"{usable} usable entries; need {MIN_ENTRIES}")
    start = usable - max(2, int(round(tail * usable)))
    kk, y = k[start:usable], np.log(E[start:usable])
    slope, intercept = np.polyfit(kk, y, 1)
    resid = y - (slope * kk + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return RateFit(rho_hat=float(min(1.0, np.exp(slope))), r_squared=r2,
                   window=(start, usable))


def slope_fit(x, y, confidence=0.95):
    """Slope of ``log y`` against ``log x`` with a Student-t interval."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    if lx.size < 2:
        raise EstimationError("need at least two points")
    res = stats.linregress(lx, ly)
    dof = lx.size - 2
    half = stats.t.ppf(0.5 + confidence / 2, dof) * res.stderr if dof > 0 else np.inf
    return SlopeFit(slope=float(res.slope), intercept=float(res.intercept),
                    ci_low=float(res.slope - half), ci_high=float(res.slope + half),
                    r_squared=float(res.rvalue ** 2), confidence=confidence)
