"""Stress-life relations: Goodman mean-stress correction and Basquin's law."""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidInputError, UnderdeterminedError


def goodman(sigma_amp, sigma_mean, uts):
    """Equivalent fully reversed amplitude; ``inf`` once the mean reaches the UTS."""
    if sigma_mean >= uts:
        return math.inf
    return sigma_amp / (1.0 - sigma_mean / uts)


def basquin_cycles(sigma_ar, sigma_f, b):
    """Cycles to failure ``N = 0.5 (sigma_ar / sigma_f) ** (1 / b)``."""
    if sigma_ar <= 0:
        return math.inf
    if math.isinf(sigma_ar):
        return 0.0
    return 0.5 * (sigma_ar / sigma_f) ** (1.0 / b)


def basquin_amplitude(cycles, sigma_f, b):
    return sigma_f * (2.0 * cycles) ** b


def fit_basquin(sigma_ar, cycles, b=None):
    """Least squares of ``log sigma_ar`` on ``log 2N``; returns ``(sigma_f, b, residuals)``.

    With ``b`` given only the coefficient is fitted, so a single point is enough.
    """
    y = np.log(np.asarray(sigma_ar, dtype=float))
    x = np.log(2.0 * np.asarray(cycles, dtype=float))
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidInputError("S-N points must have positive finite amplitude and cycle count")
    if b is None:
        if len(x) < 2:
            raise UnderdeterminedError("need at least 2 failure points, or fix the exponent b")
        if np.ptp(x) == 0:
            raise UnderdeterminedError("all failure points share one life; fix the exponent b")
        A = np.column_stack([np.ones_like(x), x])
        (log_sf, b), *_ = np.linalg.lstsq(A, y, rcond=None)
        b = float(b)
    else:
        if len(x) < 1:
            raise UnderdeterminedError("need at least 1 failure point")
        log_sf = float(np.mean(y - b * x))
    residuals = y - (log_sf + b * x)
    return float(math.exp(log_sf)), b, residuals
