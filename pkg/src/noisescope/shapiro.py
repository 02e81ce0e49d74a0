"""Shapiro-Wilk normality test.

Implements the n <= 5000 approximation (Royston's extension): Blom-score
based weights with polynomial corrections for the two extreme weights, and a
normalizing transformation of ln(1 - W) for the p-value.  Valid for
3 <= n <= 5000; callers with more data subsample first.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import DegenerateInputError, TooFewSamplesError, TooManySamplesError

# Polynomial coefficients, ascending order.
_C1 = (0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056)   # in 1/sqrt(n)
_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)   # in 1/sqrt(n)
_C3 = (-1.5861, -0.31082, -0.083751, 0.0038915)                    # in ln(n), n >= 12
_C4 = (-0.4803, -0.082676, 0.0030302)                              # in ln(n), n >= 12
_C5 = (-2.273, 0.459)                                              # in n, 4 <= n <= 11
_C6 = (0.5440, -0.39978, 0.025054, -0.0006714)                     # in n, 4 <= n <= 11
_C7 = (1.3822, -0.77857, 0.062767, -0.0020322)                     # in n, 4 <= n <= 11


def _poly(coeffs: tuple[float, ...], x: float) -> float:
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _weights(n: int) -> np.ndarray:
    """Approximately optimal linear weights for the sorted sample."""
    if n == 3:
        return np.array([-math.sqrt(0.5), 0.0, math.sqrt(0.5)])
    m = ndtri((np.arange(1, n + 1) - 0.375) / (n + 0.25))
    ssq = float(np.dot(m, m))
    u = 1.0 / math.sqrt(n)
    a = np.empty(n)
    a_n = _poly(_C1, u) + m[-1] / math.sqrt(ssq)
    if n > 5:
        a_n1 = _poly(_C2, u) + m[-2] / math.sqrt(ssq)
        phi = (ssq - 2.0 * m[-1] ** 2 - 2.0 * m[-2] ** 2) / (1.0 - 2.0 * a_n ** 2 - 2.0 * a_n1 ** 2)
        a[2:-2] = m[2:-2] / math.sqrt(phi)
        a[-1], a[-2], a[0], a[1] = a_n, a_n1, -a_n, -a_n1
    else:
        phi = (ssq - 2.0 * m[-1] ** 2) / (1.0 - 2.0 * a_n ** 2)
        a[1:-1] = m[1:-1] / math.sqrt(phi)
        a[-1], a[0] = a_n, -a_n
    return a


def shapiro_wilk(samples) -> tuple[float, float]:
    """Return (W, p_value) for the null hypothesis of normality.

    Raises TooFewSamplesError (n < 3), TooManySamplesError (n > 5000) or
    DegenerateInputError when all values coincide.
    """
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if n < 3:
        raise TooFewSamplesError(f"need at least 3 samples, got {n}")
    if n > 5000:
        raise TooManySamplesError(f"approximation valid up to n = 5000, got {n}")
    y = np.sort(x)
    if y[0] == y[-1]:
        raise DegenerateInputError("all sample values identical")

    a = _weights(n)
    numer = float(np.dot(a, y)) ** 2
    denom = float(np.sum((y - y.mean()) ** 2))
    w = min(numer / denom, 1.0)

    if n == 3:
        p = 6.0 / math.pi * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        return w, min(max(p, 0.0), 1.0)

    one_minus_w = max(1.0 - w, 1e-16)
    if n <= 11:
        gamma = _poly(_C5, float(n))
        if gamma - math.log(one_minus_w) <= 0.0:
            return w, 0.0  # W beyond the transform's support: decisive rejection
        z_raw = -math.log(gamma - math.log(one_minus_w))
        mu = _poly(_C6, float(n))
        sd = math.exp(_poly(_C7, float(n)))
    else:
        log_n = math.log(n)
        z_raw = math.log(one_minus_w)
        mu = _poly(_C3, log_n)
        sd = math.exp(_poly(_C4, log_n))
    p = float(1.0 - ndtr((z_raw - mu) / sd))
    return w, min(max(p, 0.0), 1.0)
