"""Forward-mode dual numbers with a vector of tangents."""

from __future__ import annotations

import math

import numpy as np


class Dual:
    """``value + tangent·ε``; one tangent component per active input.

    Comparisons look at the value only, so control flow is unaffected by
    differentiation.
    """

    __slots__ = ("value", "tangent")

    def __init__(self, value: float, tangent: np.ndarray):
        self.value = float(value)
        self.tangent = tangent

    @classmethod
    def variable(cls, value: float, index: int, width: int) -> "Dual":
        t = np.zeros(width)
        t[index] = 1.0
        return cls(value, t)

    @classmethod
    def constant(cls, value: float, width: int) -> "Dual":
        return cls(value, np.zeros(width))

    def __repr__(self):
        return f"Dual({self.value!r}, {self.tangent!r})"

    def __float__(self):
        return self.value

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, o):
        if isinstance(o, Dual):
            return Dual(self.value + o.value, self.tangent + o.tangent)
        return Dual(self.value + o, self.tangent)

    __radd__ = __add__

    def __sub__(self, o):
        if isinstance(o, Dual):
            return Dual(self.value - o.value, self.tangent - o.tangent)
        return Dual(self.value - o, self.tangent)

    def __rsub__(self, o):
        return Dual(o - self.value, -self.tangent)

    def __mul__(self, o):
        if isinstance(o, Dual):
            return Dual(self.value * o.value, self.tangent * o.value + o.tangent * self.value)
        return Dual(self.value * o, self.tangent * o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, Dual):
            q = _fdiv(self.value, o.value)
            return Dual(q, _tdiv(self.tangent - o.tangent * q, o.value))
        return Dual(_fdiv(self.value, o), _tdiv(self.tangent, o))

    def __rtruediv__(self, o):
        q = _fdiv(o, self.value)
        return Dual(q, _tdiv(-q * self.tangent, self.value))

    def __neg__(self):
        return Dual(-self.value, -self.tangent)

    def __pos__(self):
        return self

    def __abs__(self):
        return self if self.value >= 0 else -self

    # -- comparisons (value only) ----------------------------------------------

    def __lt__(self, o):
        return self.value < _val(o)

    def __le__(self, o):
        return self.value <= _val(o)

    def __gt__(self, o):
        return self.value > _val(o)

    def __ge__(self, o):
        return self.value >= _val(o)

    def __eq__(self, o):
        return self.value == _val(o)

    def __ne__(self, o):
        return self.value != _val(o)

    def __hash__(self):
        return hash(self.value)

    def __bool__(self):
        return self.value != 0

    # -- elementary functions -----------------------------------------------

    def chain(self, value: float, deriv: float) -> "Dual":
        """Apply a unary function with value ``value`` and derivative ``deriv``."""
        if deriv == 0:
            return Dual(value, np.zeros_like(self.tangent))
        return Dual(value, self.tangent * deriv)


def _val(x):
    return x.value if isinstance(x, Dual) else x


def _fdiv(a: float, b: float) -> float:
    try:
        return a / b
    except ZeroDivisionError:
        if a == 0 or math.isnan(a):
            return math.nan
        return math.copysign(math.inf, a) * math.copysign(1.0, b)


def _tdiv(t: np.ndarray, b: float) -> np.ndarray:
    if b == 0:
        with np.errstate(divide="ignore", invalid="ignore"):
            return t / b
    return t / b


def value_of(x):
    """Strip tangents recursively (arrays are nested lists)."""
    if isinstance(x, Dual):
        return x.value
    if isinstance(x, list):
        return [value_of(v) for v in x]
    return x
