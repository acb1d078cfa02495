"""Fixed-step leapfrog HMC with unit mass and divergence flags."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InitializationError


@dataclass(frozen=True)
class HmcConfig:
    step_size: float = 0.1
    steps: int = 16
    iterations: int = 2000  # includes warmup
    warmup: int = 1000
    seed: int = 0
    max_delta_h: float = 1000.0
    init_radius: float = 2.0

    def __post_init__(self):
        if not (self.step_size > 0 and self.steps > 0 and self.iterations > 0 and self.max_delta_h > 0):
            raise ValueError("HMC settings must be positive")
        if not 0 <= self.warmup < self.iterations:
            raise ValueError("warmup must be below the iteration count")


@dataclass
class HmcState:
    position: np.ndarray
    momentum: np.ndarray
    potential: float  # -log density at position
    grad: np.ndarray  # gradient of the log density (not the potential)

    @property
    def kinetic(self) -> float:
        return 0.5 * float(self.momentum @ self.momentum)

    @property
    def hamiltonian(self) -> float:
        return self.potential + self.kinetic


@dataclass
class Draws:
    """Post-warmup draws on the constrained scale, one row per iteration."""

    names: list[str]
    values: np.ndarray  # rows x columns
    divergent: np.ndarray
    accept_stat: np.ndarray
    energy: np.ndarray = field(default_factory=lambda: np.zeros(0))
    n_params: int | None = None
    int_columns: frozenset = frozenset()

    def __len__(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]

    def mean(self) -> dict[str, float]:
        return dict(zip(self.names, self.values.mean(axis=0)))

    def std(self) -> dict[str, float]:
        return dict(zip(self.names, self.values.std(axis=0, ddof=1)))

    @property
    def divergences(self) -> int:
        return int(self.divergent.sum())

    def rows(self):
        for r in self.values:
            yield dict(zip(self.names, r))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.names + ["divergent__"])
        ints = [n in self.int_columns for n in self.names]
        for r, d in zip(self.values, self.divergent):
            w.writerow([str(int(x)) if is_int else repr(float(x)) for x, is_int in zip(r, ints)] + [int(d)])
        return buf.getvalue()

    @staticmethod
    def concat(chains: list["Draws"]) -> "Draws":
        first = chains[0]
        return Draws(
            list(first.names),
            np.vstack([c.values for c in chains]),
            np.concatenate([c.divergent for c in chains]),
            np.concatenate([c.accept_stat for c in chains]),
            np.concatenate([c.energy for c in chains]),
            first.n_params, first.int_columns,
        )


def _density(model):
    def f(u):
        lp, g = model.log_density_and_grad(u)
        return float(lp), np.asarray(g, dtype=float)

    return f


def initial_point(density, dim: int, rng: np.random.Generator, radius: float = 2.0, tries: int = 10):
    """A uniform(-radius, radius) start with finite density and gradient."""
    for _ in range(tries):
        u = rng.uniform(-radius, radius, size=dim)
        try:
            lp, g = density(u)
        except ArithmeticError:
            continue
        if math.isfinite(lp) and np.all(np.isfinite(g)):
            return u, lp, g
    raise InitializationError(f"no finite starting point after {tries} attempts")


def leapfrog(density, q, p, grad, eps: float, steps: int):
    """``steps`` leapfrog steps; returns (q, p, lp, grad), stopping early on non-finite values."""
    q = q.copy()
    p = p + 0.5 * eps * grad
    lp = math.nan
    for i in range(steps):
        q = q + eps * p
        lp, grad = density(q)
        if not math.isfinite(lp):
            return q, p, -math.inf, grad
        if i != steps - 1:
            p = p + eps * grad
    p = p + 0.5 * eps * grad
    return q, p, lp, grad


def _safe(density):
    def f(q):
        try:
            return density(q)
        except ArithmeticError:
            return -math.inf, np.zeros_like(q)
        except Exception as e:  # evaluation errors reject the proposal
            from ..errors import EvalError

            if isinstance(e, EvalError):
                return -math.inf, np.zeros_like(q)
            raise

    return f


def transition(density, state: HmcState, cfg: HmcConfig, rng: np.random.Generator):
    """One HMC step; returns (new state, divergent?, acceptance statistic)."""
    p0 = rng.standard_normal(state.position.size)
    h0 = state.potential + 0.5 * float(p0 @ p0)
    q, p, lp, g = leapfrog(density, state.position, p0, state.grad, cfg.step_size, cfg.steps)
    h1 = -lp + 0.5 * float(p @ p) if math.isfinite(lp) else math.inf
    delta = h1 - h0
    divergent = not math.isfinite(delta) or delta > cfg.max_delta_h
    accept = 0.0 if not math.isfinite(delta) else min(1.0, math.exp(-delta))
    if math.isfinite(delta) and math.log(rng.uniform()) < -delta:
        return HmcState(q, p, -lp, g), divergent, accept
    return HmcState(state.position, p0, state.potential, state.grad), divergent, accept


class Chain:
    """Shared bookkeeping for single and interleaved samplers."""

    def __init__(self, model, cfg: HmcConfig):
        self.model = model
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.gq_rng = np.random.default_rng([cfg.seed, 1])
        self.names = list(model.param_names)
        self.n_params = len(self.names)
        self.gq_names: list[str] | None = None
        self.int_columns: set[str] = set()
        self.rows: list[np.ndarray] = []

    def record(self, u) -> None:
        row = list(self.model.constrained_vector(u))
        if self.model.blocked.genquant_decls:
            vals = self.model.run_genquant(u, self.gq_rng)
            if self.gq_names is None:
                self.gq_names = self.model.genquant_names(vals)
                for d in self.model.blocked.genquant_decls:
                    if d.type.base != "real":
                        self.int_columns |= {n for n in self.gq_names if n == d.name or n.startswith(d.name + "[")}
            from ..runtime.transforms import flatten

            for d in self.model.blocked.genquant_decls:
                row += [float(x) for x in flatten(vals[d.name])]
        self.rows.append(np.asarray(row, dtype=float))

    def draws(self, divergent, accept, energy) -> Draws:
        names = self.names + (self.gq_names or [])
        values = np.vstack(self.rows) if self.rows else np.zeros((0, len(names)))
        return Draws(names, values, np.asarray(divergent, dtype=bool), np.asarray(accept), np.asarray(energy),
                     self.n_params, frozenset(self.int_columns))


def as_model(model, data: dict | None = None):
    """Accept either a compiled Model or a program plus its data."""
    from ..runtime.model import Model

    if isinstance(model, Model):
        if data is not None:
            raise ValueError("data is already bound into the Model")
        return model
    return Model(model, data)


def hmc(model, data: dict | None = None, config: HmcConfig | None = None) -> Draws:
    """Sample ``model`` (a Model, or a program with ``data``)."""
    cfg = config or HmcConfig()
    model = as_model(model, data)
    chain = Chain(model, cfg)
    density = _safe(_density(model))
    div, acc, energy = [], [], []
    if model.dim == 0:
        for it in range(cfg.iterations):
            if it >= cfg.warmup:
                chain.record(np.zeros(0))
                div.append(False)
                acc.append(1.0)
                energy.append(0.0)
        return chain.draws(div, acc, energy)
    u, lp, g = initial_point(_density(model), model.dim, chain.rng, cfg.init_radius)
    state = HmcState(u, np.zeros(model.dim), -lp, g)
    for it in range(cfg.iterations):
        state, d, a = transition(density, state, cfg, chain.rng)
        if it >= cfg.warmup:
            chain.record(state.position)
            div.append(d)
            acc.append(a)
            energy.append(state.hamiltonian)
    return chain.draws(div, acc, energy)


def interleaved_hmc(program, data: dict | None = None, config: HmcConfig | None = None,
                    names: list[str] | None = None) -> Draws:
    """Alternate a centred and a non-centred transition each iteration (reported centred)."""
    from .. import reparam
    from ..runtime.model import Model

    if isinstance(program, Model):
        program, data = program.program, program.data
    cfg = config or HmcConfig()
    if not reparam.sites(program) and names is None:
        return hmc(program, data, cfg)
    cp, ncp_model, bij = reparam.bijection(program, data, names)
    chain = Chain(cp, cfg)
    f_cp = _safe(_density(cp))
    f_ncp = _safe(_density(ncp_model))
    u, lp, g = initial_point(_density(cp), cp.dim, chain.rng, cfg.init_radius)
    state = HmcState(u, np.zeros(cp.dim), -lp, g)
    div, acc, energy = [], [], []
    for it in range(cfg.iterations):
        state, d1, a1 = transition(f_cp, state, cfg, chain.rng)
        v = bij.forward(state.position)
        lp, g = f_ncp(v)
        alt, d2, a2 = transition(f_ncp, HmcState(v, state.momentum, -lp, g), cfg, chain.rng)
        u = bij.inverse(alt.position)
        lp, g = f_cp(u)
        state = HmcState(u, alt.momentum, -lp, g)
        if it >= cfg.warmup:
            chain.record(u)
            div.append(d1 or d2)
            acc.append(0.5 * (a1 + a2))
            energy.append(state.hamiltonian)
    return chain.draws(div, acc, energy)
