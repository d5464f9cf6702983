"""Least-squares helpers for exponent fits on small nets.

Every asymptotic statement verified in this package ("grows at most like
``eps^{-N}``", "decays like ``omega^q``") is reduced to a straight-line
fit in log-log coordinates over a handful of net points.  Fitted
exponents are estimates with a residual, never exact constants.
"""

from __future__ import annotations

import numpy as np

from .errors import InsufficientDataError


def loglog_fit(x, y):
    """Fit ``log y = slope * log x + intercept`` by least squares.

    Returns ``(slope, intercept, rms_residual, rel_residual)`` where
    ``rms_residual`` is the root-mean-square residual in log space and
    ``rel_residual`` normalizes it by the larger of 1 and the spread of
    ``log y`` (so near-constant data report their absolute scatter).
    """
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    if lx.size < 2:
        raise InsufficientDataError("log-log fit needs at least two points")
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    res = ly - (slope * lx + intercept)
    rms = float(np.sqrt(np.mean(res**2)))
    spread = float(ly.max() - ly.min())
    rel = rms / max(1.0, spread)
    return slope, intercept, rms, rel


def fit_power_growth(eps, sups, min_points: int = 2):
    """Fitted exponent ``N`` in ``sup ~ C * eps^{-N}``.

    Returns ``(N, C, rel_residual)``.  Points with zero supremum are
    dropped; if fewer than ``min_points`` remain the fit is refused.
    """
    eps = np.asarray(eps, dtype=float)
    sups = np.asarray(sups, dtype=float)
    keep = sups > 0
    if keep.sum() < min_points:
        raise InsufficientDataError("not enough nonzero points for a growth fit")
    slope, intercept, _, rel = loglog_fit(1.0 / eps[keep], sups[keep])
    return slope, float(np.exp(intercept)), rel


def fit_power_decay(eps, errs, min_points: int = 2):
    """Fitted exponent ``q`` in ``err ~ C * eps^{q}``; returns ``(q, C, rel)``."""
    N, C, rel = fit_power_growth(eps, errs, min_points)
    return -N, C, rel
