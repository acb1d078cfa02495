"""Built-in scalar and array functions over plain floats and :class:`Dual`.

Domain errors follow IEEE conventions (``log(0) = -inf``, ``log(-1) = nan``)
instead of raising; models routinely evaluate densities at boundaries.
"""

from __future__ import annotations

import math

from .dual import Dual

INF = math.inf
NAN = math.nan
LOG_PI = math.log(math.pi)
HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


def digamma(x: float) -> float:
    if math.isnan(x) or x == -INF:
        return NAN
    if x == INF:
        return INF
    if x <= 0 and x == math.floor(x):
        return NAN
    if x < 0:
        # reflection: psi(1 - x) - psi(x) = pi / tan(pi x)
        return digamma(1.0 - x) - math.pi / math.tan(math.pi * x)
    acc = 0.0
    while x < 6.0:
        acc -= 1.0 / x
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    series = inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 - inv2 * (1.0 / 240 - inv2 / 132))))
    return acc + math.log(x) - 0.5 * inv - series


# -- plain-float kernels ----------------------------------------------------------


def _log(x: float) -> float:
    if x > 0:
        return math.log(x)
    if x == 0:
        return -INF
    return NAN


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return INF


def _sqrt(x: float) -> float:
    return math.sqrt(x) if x >= 0 else NAN


def _log1p(x: float) -> float:
    if x > -1:
        return math.log1p(x)
    return -INF if x == -1 else NAN


def _pow(x: float, y: float) -> float:
    try:
        return math.pow(x, y)
    except ValueError:
        if x == 0 and y < 0:
            return INF
        return NAN
    except OverflowError:
        return INF if x > 0 or float(y).is_integer() and y % 2 == 0 else -INF


def _inv_logit(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _log1p_exp(x: float) -> float:
    if x > 0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x)) if x > -745 else 0.0


def _lgamma(x: float) -> float:
    try:
        return math.lgamma(x)
    except ValueError:
        return INF


# -- generic front ends ------------------------------------------------------------


def log(x):
    if isinstance(x, Dual):
        return x.chain(_log(x.value), 1.0 / x.value if x.value != 0 else INF)
    return _log(x)


def exp(x):
    if isinstance(x, Dual):
        e = _exp(x.value)
        return x.chain(e, e)
    return _exp(x)


def sqrt(x):
    if isinstance(x, Dual):
        r = _sqrt(x.value)
        return x.chain(r, 0.5 / r if r > 0 else INF)
    return _sqrt(x)


def log1p(x):
    if isinstance(x, Dual):
        return x.chain(_log1p(x.value), 1.0 / (1.0 + x.value) if x.value != -1 else INF)
    return _log1p(x)


def log1m(x):
    return log1p(-x)


def fabs(x):
    return abs(x)


def square(x):
    return x * x


def inv_logit(x):
    if isinstance(x, Dual):
        s = _inv_logit(x.value)
        return x.chain(s, s * (1.0 - s))
    return _inv_logit(x)


def log1p_exp(x):
    if isinstance(x, Dual):
        return x.chain(_log1p_exp(x.value), _inv_logit(x.value))
    return _log1p_exp(x)


def lgamma(x):
    if isinstance(x, Dual):
        return x.chain(_lgamma(x.value), digamma(x.value))
    return _lgamma(x)


def pow_(x, y):
    if isinstance(x, Dual) or isinstance(y, Dual):
        xv = x.value if isinstance(x, Dual) else x
        yv = y.value if isinstance(y, Dual) else y
        p = _pow(xv, yv)
        out = None
        if isinstance(x, Dual):
            dx = yv * _pow(xv, yv - 1.0) if yv != 0 else 0.0
            out = x.chain(p, dx)
        if isinstance(y, Dual):
            dy = p * _log(xv) if xv > 0 else (0.0 if p == 0 else NAN)
            t = y.chain(p, dy)
            out = t if out is None else Dual(p, out.tangent + t.tangent)
        return out
    return _pow(x, y)


def log_sum_exp(xs):
    vals = [x.value if isinstance(x, Dual) else x for x in xs]
    if not vals:
        return -INF
    m = max(vals)
    if m == -INF or math.isnan(m):
        lse = m
        weights = None
    elif m == INF:
        return INF
    else:
        exps = [math.exp(v - m) for v in vals]
        tot = sum(exps)
        lse = m + math.log(tot)
        weights = [e / tot for e in exps]
    duals = [x for x in xs if isinstance(x, Dual)]
    if not duals:
        return lse
    t = 0.0 * duals[0].tangent
    if weights is not None:
        for w, x in zip(weights, xs):
            if isinstance(x, Dual) and w != 0:
                t = t + w * x.tangent
    return Dual(lse, t)


def softmax(xs):
    lse = log_sum_exp(xs)
    return [exp(x - lse) for x in xs]


def sum_(xs):
    tot = 0
    for x in xs:
        tot = tot + x
    return tot


SCALAR = {
    "log": log,
    "exp": exp,
    "sqrt": sqrt,
    "pow": pow_,
    "log1p": log1p,
    "log1m": log1m,
    "fabs": fabs,
    "square": square,
    "inv_logit": inv_logit,
    "lgamma": lgamma,
    "log1p_exp": log1p_exp,
    "log_sum_exp": log_sum_exp,
    "sum": sum_,
    "softmax": softmax,
}
