"""Mean-field Gaussian ADVI on the unconstrained scale."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import DiagnosticFailure


class Adam:
    """Adam ascent on a flat parameter vector."""

    def __init__(self, size: int, lr: float = 0.05, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.b1 * self.m + (1 - self.b1) * grad
        self.v = self.b2 * self.v + (1 - self.b2) * grad * grad
        mhat = self.m / (1 - self.b1 ** self.t)
        vhat = self.v / (1 - self.b2 ** self.t)
        return theta + self.lr * mhat / (np.sqrt(vhat) + self.eps)


@dataclass(frozen=True)
class AdviConfig:
    steps: int = 2000
    samples: int = 8
    lr: float = 0.05
    seed: int = 0
    average_tail: float = 0.25  # report the mean of the last quarter of iterates
    max_bad_steps: int = 50


@dataclass
class Guide:
    names: list[str]
    mean: np.ndarray  # unconstrained scale
    log_std: np.ndarray

    @property
    def std(self) -> np.ndarray:
        return np.exp(self.log_std)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.mean + self.std * rng.standard_normal((n, self.mean.size))

    def to_json(self, extra: dict | None = None) -> str:
        out = {
            "names": list(self.names),
            "mean": [float(x) for x in self.mean],
            "log_std": [float(x) for x in self.log_std],
        }
        out.update(extra or {})
        return json.dumps(out, indent=2, sort_keys=True) + "\n"


@dataclass
class AdviResult:
    guide: Guide
    elbo: list[float] = field(default_factory=list)
    config: AdviConfig = field(default_factory=AdviConfig)

    def elbo_csv(self) -> str:
        return "step,elbo\n" + "".join(f"{i},{e!r}\n" for i, e in enumerate(self.elbo))

    def config_dict(self) -> dict:
        return asdict(self.config)


def _entropy_const(dim: int) -> float:
    return 0.5 * dim * (1.0 + math.log(2 * math.pi))


def advi(model, data: dict | None = None, config: AdviConfig | None = None) -> AdviResult:
    """Maximise the reparameterised Monte Carlo ELBO over guide means and log-stddevs."""
    from .hmc import as_model

    cfg = config or AdviConfig()
    model = as_model(model, data)
    dim = model.dim
    rng = np.random.default_rng(cfg.seed)
    theta = np.zeros(2 * dim)
    opt = Adam(2 * dim, cfg.lr)
    trace: list[float] = []
    tail_start = int(cfg.steps * (1 - cfg.average_tail))
    acc = np.zeros(2 * dim)
    n_acc = 0
    bad = 0
    for step in range(cfg.steps):
        m, s = theta[:dim], theta[dim:]
        sd = np.exp(s)
        gm = np.zeros(dim)
        gs = np.zeros(dim)
        total = 0.0
        for _ in range(cfg.samples):
            eps = rng.standard_normal(dim)
            u = m + sd * eps
            try:
                lp, g = model.log_density_and_grad(u)
            except ArithmeticError:
                lp, g = -math.inf, np.zeros(dim)
            total += lp
            gm += g
            gs += g * eps * sd
        k = cfg.samples
        elbo = total / k + float(s.sum()) + _entropy_const(dim)
        grad = np.concatenate([gm / k, gs / k + 1.0])
        trace.append(float(elbo))
        if not (math.isfinite(elbo) and np.all(np.isfinite(grad))):
            bad += 1
            if bad >= cfg.max_bad_steps:
                raise DiagnosticFailure(f"ELBO non-finite for {bad} consecutive steps", trace)
            continue
        bad = 0
        theta = opt.step(theta, grad)
        if step >= tail_start:
            acc += theta
            n_acc += 1
    if n_acc:
        theta = acc / n_acc
    return AdviResult(Guide(model.param_names, theta[:dim].copy(), theta[dim:].copy()), trace, cfg)


def elbo_estimate(model, guide: Guide, n: int = 10000, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo ELBO with its standard error."""
    rng = np.random.default_rng(seed)
    draws = guide.sample(n, rng)
    vals = np.array([model.log_density(u) for u in draws])
    ent = float(guide.log_std.sum()) + _entropy_const(guide.mean.size)
    return float(vals.mean() + ent), float(vals.std(ddof=1) / math.sqrt(n))
