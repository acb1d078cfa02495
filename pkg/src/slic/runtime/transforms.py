"""Bijections from the real line onto constrained parameter domains."""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import functions as F


@dataclass(frozen=True)
class ParamInfo:
    name: str
    shape: tuple[int, ...]
    lower: float | None
    upper: float | None
    offset: int  # position of the first component in the unconstrained vector

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    @property
    def kind(self) -> str:
        if self.lower is None and self.upper is None:
            return "identity"
        if self.upper is None:
            return "lower"
        if self.lower is None:
            return "upper"
        return "interval"


def constrain(u, lower, upper):
    """``(theta, log|dtheta/du|)`` for one scalar; works on floats and duals."""
    if lower is None and upper is None:
        return u, 0.0
    if upper is None:
        return F.exp(u) + lower, u
    if lower is None:
        return upper - F.exp(u), u
    width = upper - lower
    s = F.inv_logit(u)
    # log(width) + log s + log(1 - s), written with softplus for stability
    return lower + width * s, math.log(width) - F.log1p_exp(-u) - F.log1p_exp(u)


def unconstrain(theta: float, lower, upper) -> float:
    if lower is None and upper is None:
        return float(theta)
    if upper is None:
        return math.log(theta - lower) if theta > lower else -math.inf
    if lower is None:
        return math.log(upper - theta) if theta < upper else -math.inf
    p = (theta - lower) / (upper - lower)
    if p <= 0:
        return -math.inf
    if p >= 1:
        return math.inf
    return math.log(p) - math.log1p(-p)


def reshape(flat: list, shape: tuple[int, ...]):
    """Row-major nested lists from a flat list."""
    if not shape:
        return flat[0]
    if len(shape) == 1:
        return list(flat)
    step = math.prod(shape[1:])
    return [reshape(flat[i * step:(i + 1) * step], shape[1:]) for i in range(shape[0])]


def flatten(value) -> list:
    if isinstance(value, list):
        out = []
        for v in value:
            out += flatten(v)
        return out
    return [value]
