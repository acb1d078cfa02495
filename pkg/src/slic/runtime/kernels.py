"""Numba kernels used by generated density code.

Each density kernel returns the log density followed by its partial
derivatives with respect to every argument.  Invalid parameters give
``-inf`` with zero partials; callers treat that as a rejected point.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)
LOG_PI = math.log(math.pi)
NINF = -np.inf


@njit(cache=True)
def inv_logit(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@njit(cache=True)
def log1p_exp(x):
    if x > 0:
        return x + math.log1p(math.exp(-x))
    if x < -745.0:
        return 0.0
    return math.log1p(math.exp(x))


@njit(cache=True)
def digamma(x):
    if np.isnan(x) or x == -np.inf:
        return np.nan
    if x == np.inf:
        return np.inf
    if x <= 0 and x == math.floor(x):
        return np.nan
    acc = 0.0
    if x < 0:
        acc = -math.pi / math.tan(math.pi * x)
        x = 1.0 - x
    while x < 6.0:
        acc -= 1.0 / x
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    series = inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 - inv2 * (1.0 / 240 - inv2 / 132))))
    return acc + math.log(x) - 0.5 * inv - series


@njit(cache=True)
def lgamma(x):
    if x <= 0 and x == math.floor(x):
        return np.inf
    return math.lgamma(x)


@njit(cache=True)
def safe_log(x):
    if x > 0:
        return math.log(x)
    if x == 0:
        return -np.inf
    return np.nan


@njit(cache=True)
def safe_exp(x):
    if x > 709.78:
        return np.inf
    return math.exp(x)


@njit(cache=True)
def safe_sqrt(x):
    if x >= 0:
        return math.sqrt(x)
    return np.nan


@njit(cache=True)
def safe_log1p(x):
    if x > -1:
        return math.log1p(x)
    if x == -1:
        return -np.inf
    return np.nan


@njit(cache=True)
def safe_pow(x, y):
    if x < 0 and y != math.floor(y):
        return np.nan
    if x == 0 and y < 0:
        return np.inf
    return x ** y


@njit(cache=True)
def pow_partials(x, y, p):
    dx = 0.0
    if y != 0:
        dx = y * safe_pow(x, y - 1.0)
    if x > 0:
        dy = p * math.log(x)
    elif p == 0:
        dy = 0.0
    else:
        dy = np.nan
    return dx, dy


@njit(cache=True)
def lse(v):
    m = -np.inf
    for x in v.flat:
        if x > m:
            m = x
    if m == -np.inf or m == np.inf or np.isnan(m):
        return m
    s = 0.0
    for x in v.flat:
        s += math.exp(x - m)
    return m + math.log(s)


@njit(cache=True)
def lse_tangent(v, g, total):
    """Tangent of log_sum_exp given value tangents ``g`` (one row per element)."""
    out = np.zeros(g.shape[1])
    if not np.isfinite(total):
        return out
    for i in range(v.shape[0]):
        w = math.exp(v[i] - total)
        if w != 0.0:
            out += w * g[i]
    return out


@njit(cache=True)
def colsum(g):
    out = np.zeros(g.shape[1])
    for i in range(g.shape[0]):
        out += g[i]
    return out


@njit(cache=True)
def softmax_tangent(s, g):
    n, p = g.shape
    avg = np.zeros(p)
    for i in range(n):
        avg += s[i] * g[i]
    out = np.empty((n, p))
    for i in range(n):
        out[i] = s[i] * (g[i] - avg)
    return out


@njit(cache=True)
def normal_lpdf(x, mu, s):
    if not (s > 0.0 and np.isfinite(s) and np.isfinite(mu)):
        return NINF, 0.0, 0.0, 0.0
    z = (x - mu) / s
    dx = -z / s
    return -0.5 * z * z - math.log(s) - HALF_LOG_2PI, dx, -dx, (z * z - 1.0) / s


@njit(cache=True)
def cauchy_lpdf(x, mu, s):
    if not (s > 0.0 and np.isfinite(s) and np.isfinite(mu)):
        return NINF, 0.0, 0.0, 0.0
    z = (x - mu) / s
    q = 1.0 + z * z
    dx = -2.0 * z / (s * q)
    return -LOG_PI - math.log(s) - math.log1p(z * z), dx, -dx, (-1.0 + 2.0 * z * z / q) / s


@njit(cache=True)
def logistic_lpdf(x, mu, s):
    if not (s > 0.0 and np.isfinite(s) and np.isfinite(mu)):
        return NINF, 0.0, 0.0, 0.0
    z = (x - mu) / s
    k = 1.0 - 2.0 * inv_logit(z)
    dx = k / s
    return -z - math.log(s) - 2.0 * log1p_exp(-z), dx, -dx, (-1.0 - z * k) / s


@njit(cache=True)
def uniform_lpdf(x, a, b):
    if not (np.isfinite(a) and np.isfinite(b) and a < b):
        return NINF, 0.0, 0.0, 0.0
    if x < a or x > b:
        return NINF, 0.0, 0.0, 0.0
    w = b - a
    return -math.log(w), 0.0, 1.0 / w, -1.0 / w


@njit(cache=True)
def gamma_lpdf(x, alpha, beta):
    if not (alpha > 0.0 and beta > 0.0 and np.isfinite(alpha) and np.isfinite(beta)):
        return NINF, 0.0, 0.0, 0.0
    if x < 0:
        return NINF, 0.0, 0.0, 0.0
    if x == 0:
        if alpha == 1.0:
            return math.log(beta), -beta, np.nan, 1.0 / beta
        if alpha < 1.0:
            return np.inf, np.nan, np.nan, np.nan
        return NINF, 0.0, 0.0, 0.0
    lx = math.log(x)
    lb = math.log(beta)
    lp = alpha * lb - math.lgamma(alpha) + (alpha - 1.0) * lx - beta * x
    return lp, (alpha - 1.0) / x - beta, lb - digamma(alpha) + lx, alpha / beta - x


@njit(cache=True)
def bernoulli_lpmf(k, p):
    if not (p >= 0.0 and p <= 1.0):
        return NINF, 0.0
    if k == 1:
        return safe_log(p), 1.0 / p
    if k == 0:
        return safe_log1p(-p), -1.0 / (1.0 - p)
    return NINF, 0.0


@njit(cache=True)
def binomial_lpmf(k, n, p):
    if not (p >= 0.0 and p <= 1.0) or n < 0:
        return NINF, 0.0
    if k < 0 or k > n:
        return NINF, 0.0
    lp = math.lgamma(n + 1.0) - math.lgamma(k + 1.0) - math.lgamma(n - k + 1.0)
    dp = 0.0
    if k > 0:
        lp += k * safe_log(p)
        dp += k / p
    if n - k > 0:
        lp += (n - k) * safe_log1p(-p)
        dp -= (n - k) / (1.0 - p)
    return lp, dp


@njit(cache=True)
def check_simplex(theta):
    s = 0.0
    for t in theta:
        if not t >= 0.0:
            return False
        s += t
    return abs(s - 1.0) <= 1e-8 and theta.shape[0] > 0


@njit(cache=True)
def categorical_lpmf(k, theta):
    """Log mass and the derivative with respect to ``theta[k]``."""
    if not check_simplex(theta):
        return NINF, 0.0
    if k < 1 or k > theta.shape[0]:
        return NINF, 0.0
    p = theta[k - 1]
    return safe_log(p), 1.0 / p
