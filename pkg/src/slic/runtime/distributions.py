"""Log densities (generic over float/Dual) and samplers for the built-in families.

Parameter conventions follow Stan: ``gamma(shape, rate)``, ``binomial(n, p)``,
``categorical(theta)`` with 1-based outcomes.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import DistributionError
from . import functions as F
from .dual import Dual

NEG_INF = -math.inf


def _v(x) -> float:
    return x.value if isinstance(x, Dual) else float(x)


def _positive(name, what, x):
    v = _v(x)
    if not v > 0 or math.isinf(v):
        raise DistributionError(f"{name}: {what} must be positive and finite, got {v}")


def _finite(name, what, x):
    v = _v(x)
    if not math.isfinite(v):
        raise DistributionError(f"{name}: {what} must be finite, got {v}")


def _prob(name, p):
    v = _v(p)
    if not 0.0 <= v <= 1.0:
        raise DistributionError(f"{name}: probability must lie in [0, 1], got {v}")


def _int_variate(name, k) -> int:
    v = _v(k)
    if isinstance(k, bool):
        return int(k)
    if v != math.floor(v):
        raise DistributionError(f"{name}: outcome must be an integer, got {v}")
    return int(v)


def normal_lpdf(x, mu, sigma):
    _finite("normal", "location", mu)
    _positive("normal", "scale", sigma)
    z = (x - mu) / sigma
    return -0.5 * z * z - F.log(sigma) - F.HALF_LOG_2PI


def cauchy_lpdf(x, mu, sigma):
    _finite("cauchy", "location", mu)
    _positive("cauchy", "scale", sigma)
    z = (x - mu) / sigma
    return -F.LOG_PI - F.log(sigma) - F.log1p(z * z)


def logistic_lpdf(x, mu, s):
    _finite("logistic", "location", mu)
    _positive("logistic", "scale", s)
    z = (x - mu) / s
    return -z - F.log(s) - 2.0 * F.log1p_exp(-z)


def uniform_lpdf(x, a, b):
    _finite("uniform", "lower bound", a)
    _finite("uniform", "upper bound", b)
    if not _v(a) < _v(b):
        raise DistributionError(f"uniform: lower bound must be below upper bound, got {_v(a)}, {_v(b)}")
    if not _v(a) <= _v(x) <= _v(b):
        return NEG_INF
    return -F.log(b - a)


def gamma_lpdf(x, alpha, beta):
    _positive("gamma", "shape", alpha)
    _positive("gamma", "rate", beta)
    if _v(x) < 0:
        return NEG_INF
    if _v(x) == 0:
        if _v(alpha) == 1:
            return F.log(beta)
        return math.inf if _v(alpha) < 1 else NEG_INF
    return alpha * F.log(beta) - F.lgamma(alpha) + (alpha - 1.0) * F.log(x) - beta * x


def bernoulli_lpmf(k, p):
    _prob("bernoulli", p)
    k = _int_variate("bernoulli", k)
    if k == 1:
        return F.log(p)
    if k == 0:
        return F.log1m(p)
    return NEG_INF


def binomial_lpmf(k, n, p):
    _prob("binomial", p)
    n = _int_variate("binomial", n)
    if n < 0:
        raise DistributionError(f"binomial: trial count must be non-negative, got {n}")
    k = _int_variate("binomial", k)
    if not 0 <= k <= n:
        return NEG_INF
    lchoose = math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
    out = lchoose
    if k:
        out = out + k * F.log(p)
    if n - k:
        out = out + (n - k) * F.log1m(p)
    return out


def _check_simplex(theta):
    vals = [_v(t) for t in theta]
    if not vals:
        raise DistributionError("categorical: empty probability vector")
    if any(not v >= 0 for v in vals) or abs(sum(vals) - 1.0) > 1e-8:
        raise DistributionError(f"categorical: probabilities must be non-negative and sum to 1, got {vals}")


def categorical_lpmf(k, theta):
    if not isinstance(theta, list):
        raise DistributionError("categorical: expected a probability array")
    _check_simplex(theta)
    k = _int_variate("categorical", k)
    if not 1 <= k <= len(theta):
        return NEG_INF
    return F.log(theta[k - 1])


LPDF = {
    "normal": normal_lpdf,
    "cauchy": cauchy_lpdf,
    "logistic": logistic_lpdf,
    "uniform": uniform_lpdf,
    "gamma": gamma_lpdf,
    "bernoulli": bernoulli_lpmf,
    "binomial": binomial_lpmf,
    "categorical": categorical_lpmf,
}

# -- sampling --------------------------------------------------------------------


def sample(name: str, args, rng: np.random.Generator):
    """Draw one value.  Arguments are validated exactly as the density would."""
    a = [(_v(x) if not isinstance(x, list) else [_v(t) for t in x]) for x in args]
    if name == "normal":
        _finite(name, "location", a[0]); _positive(name, "scale", a[1])
        return float(a[0] + a[1] * rng.standard_normal())
    if name == "cauchy":
        _finite(name, "location", a[0]); _positive(name, "scale", a[1])
        return float(a[0] + a[1] * rng.standard_cauchy())
    if name == "logistic":
        _finite(name, "location", a[0]); _positive(name, "scale", a[1])
        return float(rng.logistic(a[0], a[1]))
    if name == "uniform":
        uniform_lpdf(0.5 * (a[0] + a[1]), a[0], a[1])
        return float(rng.uniform(a[0], a[1]))
    if name == "gamma":
        _positive(name, "shape", a[0]); _positive(name, "rate", a[1])
        return float(rng.gamma(a[0], 1.0 / a[1]))
    if name == "bernoulli":
        _prob(name, a[0])
        return int(rng.random() < a[0])
    if name == "binomial":
        _prob(name, a[1])
        return int(rng.binomial(int(a[0]), a[1]))
    if name == "categorical":
        _check_simplex(a[0])
        u = rng.random()
        acc = 0.0
        for i, p in enumerate(a[0]):
            acc += p
            if u < acc:
                return i + 1
        # guard against rounding: last outcome with positive mass
        return max(i for i, p in enumerate(a[0]) if p > 0) + 1
    raise DistributionError(f"unknown distribution {name!r}")
