"""Source-to-source reparameterisation of location-scale sites.

``ncp`` rewrites ``z ~ f(mu, sigma)`` into ``z_raw ~ f(0, 1); z = mu + sigma * z_raw;``.
``vip`` interpolates between the two with a per-site (or per-element) weight
``lam``: ``z_tilde ~ normal(lam * mu, sigma^lam); z = mu + sigma^(1-lam) * (z_tilde - lam * mu)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DiagnosticFailure, IneligibleSite
from .frontend import ast as A
from .levels import Level, TypedProgram, infer


@dataclass(frozen=True)
class EligibleSite:
    name: str
    stmt: A.Stmt  # the Tilde, or a Decl carrying ``~``
    family: str
    loc: A.Expr
    scale: A.Expr


class LambdaMap(dict):
    """name -> lam in [0, 1]; a float, or nested lists matching the array shape."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        for name, v in self.items():
            for x in _flat(v):
                if not (isinstance(x, (int, float)) and 0.0 <= x <= 1.0):
                    raise ValueError(f"lambda for {name!r} must lie in [0, 1], got {x!r}")

    def to_json(self) -> str:
        return json.dumps(dict(sorted(self.items())), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "LambdaMap":
        return cls(json.loads(text))


def _flat(v) -> list:
    if isinstance(v, list):
        return [x for item in v for x in _flat(item)]
    return [v]


def _is_const(e: A.Expr, value: float) -> bool:
    return isinstance(e, (A.IntLit, A.RealLit)) and float(e.value) == value


# -- site discovery ------------------------------------------------------------------


def _tilde_sites(program: A.Program, name: str):
    """(statement, guarded?) for every ``~`` on ``name``."""

    def visit(stmts, guarded):
        for s in stmts:
            if isinstance(s, A.Decl) and s.name == name and s.dist is not None:
                yield s, guarded
            elif isinstance(s, A.Tilde) and A.lvalue_name(s.lhs) == name:
                yield s, guarded
            elif isinstance(s, A.If):
                yield from visit(s.then, True)
                yield from visit(s.orelse, True)
            elif isinstance(s, A.For):
                yield from visit(s.body, guarded)

    return list(visit(program.stmts, False))


def site_problem(typed: TypedProgram, name: str) -> str | None:
    """Why ``name`` cannot be reparameterised, or None when it can."""
    prog = typed.program
    try:
        d = prog.decl(name)
    except KeyError:
        return f"{name!r} is not declared"
    if d.level == "data" or typed.levels.get(name) == Level.DATA:
        return f"{name!r} is observed data"
    if typed.levels.get(name) != Level.MODEL:
        return f"{name!r} is not a model-level parameter"
    if name in prog.assigned_names:
        return f"{name!r} is assigned, not sampled"
    if d.type.base != "real":
        return f"{name!r} is not real-valued"
    if d.type.lower is not None or d.type.upper is not None:
        return f"{name!r} has bounds; only unconstrained parameters can be reparameterised"
    found = _tilde_sites(prog, name)
    if not found:
        return f"{name!r} is never sampled"
    for s, guarded in found:
        dist = s.dist
        if guarded:
            return f"{name!r} is sampled under a conditional"
        if dist.name not in A.LOCATION_SCALE:
            return f"{name!r} ~ {dist.name} is not a location-scale family"
        if name in A.free_vars(dist.args[0]) | A.free_vars(dist.args[1]):
            return f"the location or scale of {name!r} refers to {name!r} itself"
    return None


def sites(program: A.Program, typed: TypedProgram | None = None) -> dict[str, list[EligibleSite]]:
    """Eligible sites grouped by variable, in declaration order."""
    typed = typed or infer(program)
    out = {}
    for d in program.decls:
        if site_problem(typed, d.name) is None:
            out[d.name] = [
                EligibleSite(d.name, s, s.dist.name, s.dist.args[0], s.dist.args[1])
                for s, _ in _tilde_sites(program, d.name)
            ]
    return out


def _chosen(program: A.Program, names, typed: TypedProgram | None = None,
            family: str | None = None) -> tuple[TypedProgram, list[str]]:
    typed = typed or infer(program)
    if names is None:
        names = list(sites(program, typed))
    for n in names:
        why = site_problem(typed, n)
        if why is not None:
            raise IneligibleSite(why, _decl_span(program, n))
        if family is not None:
            for s, _ in _tilde_sites(program, n):
                if s.dist.name != family:
                    raise IneligibleSite(f"{n!r} ~ {s.dist.name}: only {family} sites are supported here", s.span)
    return typed, list(names)


def _decl_span(program, name):
    try:
        return program.decl(name).span
    except KeyError:
        return None


# -- rewriting -----------------------------------------------------------------------------


def _taken(program: A.Program) -> set[str]:
    out = {d.name for d in program.decls}
    return out | {s.var for s in A.walk_stmts(program.stmts) if isinstance(s, A.For)}


def _fresh(taken: set[str], base: str) -> str:
    name, k = base, 2
    while name in taken:
        name, k = f"{base}{k}", k + 1
    taken.add(name)
    return name


def _reroot(lhs: A.Expr, name: str) -> A.Expr:
    if isinstance(lhs, A.Index):
        return replace(lhs, base=_reroot(lhs.base, name))
    return A.Var(name, lhs.span)


def _add(a: A.Expr, b: A.Expr) -> A.Expr:
    if _is_const(a, 0.0):
        return b
    return A.Binary("+", a, b)


def _mul(a: A.Expr, b: A.Expr) -> A.Expr:
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return A.RealLit(0.0)
    return A.Binary("*", a, b)


def _pow(base: A.Expr, e: A.Expr) -> A.Expr:
    if _is_const(base, 1.0) or _is_const(e, 0.0):
        return A.RealLit(1.0)
    if _is_const(e, 1.0):
        return base
    return A.Call("pow", (base, e))


def _rewrite(stmts, handle) -> tuple[A.Stmt, ...]:
    out: list[A.Stmt] = []
    for s in stmts:
        r = handle(s)
        if r is not None:
            out += r
        elif isinstance(s, A.If):
            out.append(replace(s, then=_rewrite(s.then, handle), orelse=_rewrite(s.orelse, handle)))
        elif isinstance(s, A.For):
            out.append(replace(s, body=_rewrite(s.body, handle)))
        else:
            out.append(s)
    return tuple(out)


def _site_rewriter(rules: dict, new_name: dict[str, str], prelude: dict[str, list[A.Decl]] | None = None):
    """Dispatch a per-site rewrite; also declares the new variable next to the original."""
    prelude = prelude or {}

    def handle(s):
        if isinstance(s, A.Decl) and s.name in rules:
            bare = replace(s, init=None, dist=None)
            out = list(prelude.get(s.name, ())) + [bare, replace(bare, name=new_name[s.name])]
            if s.dist is not None:
                out += rules[s.name](A.Var(s.name, s.span), s.dist, s)
            return out
        if isinstance(s, A.Tilde) and A.lvalue_name(s.lhs) in rules:
            return rules[A.lvalue_name(s.lhs)](s.lhs, s.dist, s)
        return None

    return handle


def _ncp_rule(raw: str):
    def rule(lhs, dist, s):
        loc, scale = dist.args
        raw_lhs = _reroot(lhs, raw)
        return [
            A.Tilde(raw_lhs, A.DistCall(dist.name, (A.RealLit(0.0), A.RealLit(1.0)), dist.span), s.span),
            A.Assign(lhs, _add(loc, _mul(scale, raw_lhs)), s.span),
        ]

    return rule


def ncp_with_names(program: A.Program, names: list[str] | None = None) -> tuple[A.Program, dict[str, str]]:
    """``ncp`` plus the name of the standardised variable introduced for each site."""
    _, names = _chosen(program, names)
    taken = _taken(program)
    raw = {n: _fresh(taken, f"{n}_raw") for n in names}
    rules = {n: _ncp_rule(raw[n]) for n in names}
    return A.Program(_rewrite(program.stmts, _site_rewriter(rules, raw))), raw


def ncp(program: A.Program, names: list[str] | None = None) -> A.Program:
    """Non-centre every chosen site (all eligible sites by default)."""
    return ncp_with_names(program, names)[0]


def _vip_rule(tilde_name: str, lam_of):
    def rule(lhs, dist, s):
        loc, scale = dist.args
        lam = lam_of(lhs)
        if isinstance(lam, A.RealLit):
            one_minus = A.RealLit(1.0 - lam.value)
        else:
            one_minus = A.Binary("-", A.RealLit(1.0), lam)
        t_lhs = _reroot(lhs, tilde_name)
        shifted = _mul(lam, loc)
        recon = _mul(_pow(scale, one_minus), t_lhs if _is_const(shifted, 0.0) else A.Binary("-", t_lhs, shifted))
        return [
            A.Tilde(t_lhs, A.DistCall("normal", (shifted, _pow(scale, lam)), dist.span), s.span),
            A.Assign(lhs, _add(loc, recon), s.span),
        ]

    return rule


def _array_lit(v) -> A.Expr:
    if isinstance(v, list):
        return A.ArrayLit(tuple(_array_lit(x) for x in v))
    return A.RealLit(float(v))


def vip(program: A.Program, lam: LambdaMap | dict | float, symbolic: bool = False) -> A.Program:
    """Partially non-centre normal sites.

    ``lam`` maps site names to weights (a single float applies to every
    eligible site).  Weight 1 leaves a site centred and weight 0 gives the
    ``ncp`` form.  With ``symbolic=True`` every weight becomes a data input
    named ``<site>_lambda`` so gradients with respect to it are available.
    """
    typed = infer(program)
    if isinstance(lam, (int, float)):
        lam = {n: float(lam) for n in sites(program, typed)}
    lam = LambdaMap(lam)
    _, names = _chosen(program, list(lam), typed, family="normal")
    taken = _taken(program)
    rules, new_names, prelude = {}, {}, {}
    ncp_names = []
    for n in names:
        flat = _flat(lam[n])
        d = program.decl(n)
        if not symbolic and all(x == 1.0 for x in flat):
            continue
        if not symbolic and all(x == 0.0 for x in flat):
            ncp_names.append(n)
            continue
        new_names[n] = _fresh(taken, f"{n}_tilde")
        if symbolic or (d.type.dims and len(set(flat)) > 1):
            lname = _fresh(taken, f"{n}_lambda")
            init = None if symbolic else _array_lit(lam[n])
            prelude[n] = [A.Decl(A.TypeSpec("real", 0, 1, d.type.dims), lname, "data", init=init)]

            def lam_of(lhs, lname=lname):
                e: A.Expr = A.Var(lname)
                for i in A.lvalue_indices(lhs):
                    e = A.Index(e, i)
                return e
        else:
            value = A.RealLit(float(flat[0]))
            lam_of = lambda lhs, value=value: value
        rules[n] = _vip_rule(new_names[n], lam_of)
    out = A.Program(_rewrite(program.stmts, _site_rewriter(rules, new_names, prelude)))
    if ncp_names:
        out = ncp(out, ncp_names)
    return out


# -- maps between parameterisations ------------------------------------------------------------


class SiteBijection:
    """Maps unconstrained states between a centred model and its ``ncp`` image."""

    def __init__(self, cp_model, ncp_model, names: list[str], raw_names: dict[str, str]):
        from .runtime.interp import compile_stmts

        self.cp = cp_model
        self.ncp = ncp_model
        self.names = names
        self.raw = raw_names
        rules = {n: self._inverse_rule(raw_names[n]) for n in names}
        stmts = _rewrite(cp_model.blocked.model, _site_rewriter(rules, raw_names))
        raw_decls = [replace(cp_model.program.decl(n), name=raw_names[n], init=None, dist=None, level="model")
                     for n in names]
        types = dict(cp_model.types)
        for d in raw_decls:
            types[d.name] = d.type
        self._to_raw = compile_stmts(raw_decls + list(cp_model.blocked.model_decls) + list(stmts), types)

    @staticmethod
    def _inverse_rule(raw: str):
        def rule(lhs, dist, s):
            loc, scale = dist.args
            return [A.Assign(_reroot(lhs, raw), A.Binary("/", A.Binary("-", lhs, loc), scale), s.span)]

        return rule

    def forward(self, u_cp) -> np.ndarray:
        store = self.cp._run_model([float(x) for x in u_cp])
        self._to_raw(store)
        return self.ncp.unconstrain(store.values)

    def inverse(self, u_ncp) -> np.ndarray:
        store = self.ncp._run_model([float(x) for x in u_ncp])
        return self.cp.unconstrain(store.values)


def bijection(program: A.Program, data: dict | None = None, names: list[str] | None = None):
    """(centred model, ncp model, SiteBijection) for the chosen sites."""
    from .runtime.model import Model

    out, raw = ncp_with_names(program, names)
    cp_m = Model(program, data)
    ncp_m = Model(out, data)
    return cp_m, ncp_m, SiteBijection(cp_m, ncp_m, list(raw), raw)


# -- lambda selection ---------------------------------------------------------------------------


@dataclass
class VipConfig:
    steps: int = 1000
    samples: int = 8
    lr: float = 0.05
    seed: int = 0
    warmup: int = 50  # steps before a non-finite ELBO is treated as fatal


@dataclass
class VipResult:
    lam: LambdaMap
    mean: np.ndarray
    log_std: np.ndarray
    param_names: list[str]
    elbo: list[float] = field(default_factory=list)
    config: VipConfig = field(default_factory=VipConfig)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def vip_optimize(program: A.Program, data: dict | None = None, config: VipConfig | None = None) -> VipResult:
    """Jointly fit a mean-field guide and the VIP weights by stochastic ELBO ascent.

    The weights enter the transformed program as data inputs, so their
    gradients come from the same density code as the parameter gradients.
    """
    from .inference.advi import Adam
    from .runtime.model import Model
    from .runtime.transforms import reshape

    cfg = config or VipConfig()
    typed = infer(program)
    chosen = [n for n, ss in sites(program, typed).items() if all(s.family == "normal" for s in ss)]
    cp = Model(program, data, typed=typed, fast=False)
    shapes = {p.name: p.shape for p in cp.params}
    prog = vip(program, {n: 1.0 for n in chosen}, symbolic=True) if chosen else program
    originals = {d.name for d in program.decls}
    lam_names = tuple(d.name for d in prog.decls if d.level == "data" and d.name not in originals)
    sizes = [math.prod(shapes[n]) for n in chosen]
    n_lam = sum(sizes)

    def unpack(flat) -> dict:
        out, k = {}, 0
        for n, size in zip(chosen, sizes):
            out[n] = reshape([float(x) for x in flat[k:k + size]], shapes[n])
            k += size
        return out

    def data_with(lmb) -> dict:
        vals = unpack(lmb)
        return dict(data or {}) | {ln: vals[n] for n, ln in zip(chosen, lam_names)}

    model = Model(prog, data_with(np.full(n_lam, 0.5)))
    dens = model.density_wrt(lam_names)
    dim = model.dim
    rng = np.random.default_rng(cfg.seed)
    theta = np.zeros(2 * dim + n_lam)
    opt = Adam(theta.size, cfg.lr)
    trace: list[float] = []
    bad = 0
    const = 0.5 * dim * (1.0 + math.log(2 * math.pi))
    for step in range(cfg.steps):
        m, s, eta = theta[:dim], theta[dim:2 * dim], theta[2 * dim:]
        lmb = _sigmoid(eta)
        gm, gs, ge = np.zeros(dim), np.zeros(dim), np.zeros(n_lam)
        total = 0.0
        for _ in range(cfg.samples):
            eps = rng.standard_normal(dim)
            u = m + np.exp(s) * eps
            lp, g = dens(u, lmb)
            total += lp
            gm += g[:dim]
            gs += g[:dim] * eps * np.exp(s)
            ge += g[dim:]
        k = cfg.samples
        elbo = total / k + float(np.sum(s)) + const
        grad = np.concatenate([gm / k, gs / k + 1.0, ge / k * lmb * (1.0 - lmb)])
        trace.append(float(elbo))
        if not (np.isfinite(elbo) and np.all(np.isfinite(grad))):
            bad += 1
            if step >= cfg.warmup or bad >= 50:
                raise DiagnosticFailure("ELBO became non-finite during VIP optimisation", trace)
            continue
        bad = 0
        theta = opt.step(theta, grad)
    lam = LambdaMap(unpack(_sigmoid(theta[2 * dim:])))
    return VipResult(lam, theta[:dim].copy(), theta[dim:2 * dim].copy(), model.param_names, trace, cfg)
