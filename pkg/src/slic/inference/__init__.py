"""Samplers and optimisers for compiled models."""

from __future__ import annotations

import numpy as np

from .advi import Adam, AdviConfig, AdviResult, Guide, advi, elbo_estimate
from .hmc import Draws, HmcConfig, HmcState, hmc, interleaved_hmc, leapfrog, transition


def estimate_expectation(draws, f) -> float:
    """Monte Carlo average of ``f`` over draws (rows as dicts for ``Draws``)."""
    rows = draws.rows() if isinstance(draws, Draws) else iter(draws)
    vals = [float(f(r)) for r in rows]
    if not vals:
        raise ValueError("no draws")
    return float(np.mean(vals))


__all__ = [
    "Adam", "AdviConfig", "AdviResult", "Draws", "Guide", "HmcConfig", "HmcState",
    "advi", "elbo_estimate", "estimate_expectation", "hmc", "interleaved_hmc", "leapfrog", "transition",
]
