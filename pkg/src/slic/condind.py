"""Marginalising finite discrete parameters by typed slicing + variable elimination.

For an eliminand ``z`` the model block is split three ways: statements that
must run before the factor on ``z`` (``s1``), the factor statements that
mention ``z`` or values computed from it (``s2``), and everything else
(``s3``).  The transform replaces ``s2`` by generated loops that tabulate
``log sum_z exp(s2)`` over the remaining discrete neighbours of ``z``, and
prepends generated-quantity code that re-draws ``z`` from its conditional.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NotEliminable, SupportTooLarge
from .frontend import ast as A
from .levels import Level, TypedProgram, event_reads, events, infer
from .shredder import BlockedProgram, shred

NEG_LARGE = -1e30
DEFAULT_CAP = 10 ** 6


class CiLevel(int):
    """L1 < L2 < L3: before the factor on z, the factor itself, independent of z."""


L1, L2, L3 = CiLevel(1), CiLevel(2), CiLevel(3)


@dataclass(frozen=True)
class Support:
    name: str
    lo: int
    hi: int

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    def values(self) -> range:
        return range(self.lo, self.hi + 1)


@dataclass
class FactorTable:
    """Log weights over the joint support of ``scope`` in row-major order."""

    scope: list[Support]
    values: np.ndarray

    def __post_init__(self):
        n = math.prod(s.size for s in self.scope)
        if self.values.size != n:
            raise ValueError(f"factor over {[s.name for s in self.scope]} needs {n} entries")

    def __getitem__(self, assignment: dict[str, int]) -> float:
        flat = 0
        for s in self.scope:
            flat = flat * s.size + (assignment[s.name] - s.lo)
        return float(self.values.flat[flat])


@dataclass
class EliminationPlan:
    order: list[str]
    blankets: list[set[str]] = field(default_factory=list)


@dataclass
class CiSlice:
    s1: list[A.Stmt]
    s2: list[A.Stmt]
    s3: list[A.Stmt]
    tainted: set[str]  # z plus every variable whose value depends on it
    blocked: BlockedProgram

    def level_of(self, s) -> CiLevel:
        if any(s is t for t in self.s1):
            return L1
        if any(s is t for t in self.s2):
            return L2
        return L3


# -- read/write summaries ------------------------------------------------------------


def _rw(s: A.Stmt, generative: set[str] = frozenset()) -> tuple[set[str], set[str], bool]:
    reads: set[str] = set()
    writes: set[str] = set()
    accum = False
    for ev in events([s]):
        a = ev.stmt
        reads |= event_reads(ev)
        if isinstance(a, A.Assign):
            writes.add(A.lvalue_name(a.lhs))
        elif isinstance(a, A.Tilde) and A.lvalue_name(a.lhs) in generative:
            writes.add(A.lvalue_name(a.lhs))
        else:
            accum = True
    return reads, writes, accum


def _commute(a, b) -> bool:
    ra, wa, _ = a
    rb, wb, _ = b
    return not (wa & (rb | wb)) and not (wb & ra)


# -- support and eligibility -----------------------------------------------------------


def support_of(typed: TypedProgram, z: str) -> Support:
    try:
        d = typed.program.decl(z)
    except KeyError:
        raise NotEliminable(f"{z!r} is not declared") from None
    t = d.type
    if t.base != "int":
        raise NotEliminable(f"{z!r} is not discrete", d.span)
    if t.dims:
        raise NotEliminable(f"{z!r} is an array; only scalar discrete parameters can be eliminated", d.span)
    if t.lower is None or t.upper is None:
        raise NotEliminable(f"{z!r} needs both lower and upper bounds to have finite support", d.span)
    if typed.levels.get(z) != Level.MODEL:
        raise NotEliminable(f"{z!r} is {typed.levels.get(z)}, not a model-level parameter", d.span)
    if z in typed.program.assigned_names:
        raise NotEliminable(f"{z!r} is assigned, not sampled", d.span)
    if d.level == "data":
        raise NotEliminable(f"{z!r} is data", d.span)
    return Support(z, int(t.lower), int(t.upper))


def discrete_parameters(typed: TypedProgram) -> list[str]:
    """Bounded scalar int MODEL-level parameters, in declaration order."""
    prog = typed.program
    out = []
    for d in prog.decls:
        t = d.type
        if (t.base == "int" and not t.dims and t.lower is not None and t.upper is not None
                and typed.levels.get(d.name) == Level.MODEL and d.name not in prog.assigned_names
                and d.level != "data"):
            out.append(d.name)
    return out


def _check_top_level_tildes(blocked: BlockedProgram, z: str) -> None:
    for s in blocked.model:
        if isinstance(s, (A.If, A.For)):
            for t in A.walk_stmts([s]):
                if isinstance(t, A.Tilde) and A.lvalue_name(t.lhs) == z:
                    raise NotEliminable(f"{z!r} is sampled under control flow; cannot eliminate it", t.span)


# -- slicing --------------------------------------------------------------------------


def ci_slice(typed: TypedProgram, z: str) -> CiSlice:
    support_of(typed, z)
    blocked = shred(typed, allow_discrete=True)
    _check_top_level_tildes(blocked, z)
    stmts = blocked.model
    rws = [_rw(s) for s in stmts]
    tainted = {z}
    in2 = [False] * len(stmts)
    changed = True
    while changed:
        changed = False
        for i, (r, w, _) in enumerate(rws):
            if not in2[i] and (r | w) & tainted:
                in2[i] = True
                tainted |= w
                changed = True
    needed: set[str] = set()
    for i, (r, _, _) in enumerate(rws):
        if in2[i]:
            needed |= r - tainted
    in1 = [False] * len(stmts)
    changed = True
    while changed:
        changed = False
        for i, (r, w, _) in enumerate(rws):
            if not in2[i] and not in1[i] and w & needed:
                in1[i] = True
                needed |= r
                changed = True
    role = [2 if in2[i] else 1 if in1[i] else 3 for i in range(len(stmts))]
    # The output order is s1 ; s2 ; s3.  Any pair that swaps must commute.
    for i, j in itertools.combinations(range(len(stmts)), 2):
        if role[i] > role[j] and not _commute(rws[i], rws[j]):
            raise NotEliminable(
                f"eliminating {z!r} would reorder dependent statements",
                stmts[j].span, related=stmts[i].span,
            )
    pick = lambda k: [s for s, r in zip(stmts, role) if r == k]
    return CiSlice(pick(1), pick(2), pick(3), tainted, blocked)


def _is_random(typed: TypedProgram, name: str) -> bool:
    return name in typed.program.tilde_names


def markov_blanket(typed: TypedProgram, z: str) -> set[str]:
    """Random variables sharing a factor with ``z`` (data observations included)."""
    sl = ci_slice(typed, z)
    reads: set[str] = set()
    for s in sl.s2:
        reads |= _rw(s)[0]
    return {v for v in reads - sl.tainted if _is_random(typed, v)}


# -- code generation helpers --------------------------------------------------------------


def _offset_index(var: A.Expr, lo: int) -> A.Expr:
    """1-based table index ``var - lo + 1`` (folded when ``lo == 1``)."""
    shift = 1 - lo
    if shift == 0:
        return var
    if shift > 0:
        return A.Binary("+", var, A.IntLit(shift))
    return A.Binary("-", var, A.IntLit(-shift))


def _index(base: A.Expr, idx: list[A.Expr]) -> A.Expr:
    for i in idx:
        base = A.Index(base, i)
    return base


def _accumulate(s: A.Stmt, acc: A.Expr) -> A.Stmt | None:
    """Turn density contributions into ``acc = acc + contribution``."""
    if isinstance(s, A.Tilde):
        fn = A.density_function_name(s.dist.name)
        return A.Assign(acc, A.Binary("+", acc, A.Call(fn, (s.lhs,) + tuple(s.dist.args))), s.span)
    if isinstance(s, A.TargetPlus):
        return A.Assign(acc, A.Binary("+", acc, s.expr), s.span)
    if isinstance(s, A.If):
        return replace(s, then=tuple(_accumulate(t, acc) for t in s.then),
                       orelse=tuple(_accumulate(t, acc) for t in s.orelse))
    if isinstance(s, A.For):
        return replace(s, body=tuple(_accumulate(t, acc) for t in s.body))
    return s


def _deterministic_part(s: A.Stmt) -> A.Stmt | None:
    if isinstance(s, (A.Tilde, A.TargetPlus)):
        return None
    if isinstance(s, A.If):
        then = tuple(x for x in map(_deterministic_part, s.then) if x is not None)
        orelse = tuple(x for x in map(_deterministic_part, s.orelse) if x is not None)
        return replace(s, then=then, orelse=orelse) if then or orelse else None
    if isinstance(s, A.For):
        body = tuple(x for x in map(_deterministic_part, s.body) if x is not None)
        return replace(s, body=body) if body else None
    return s


def _subst_stmt(s: A.Stmt, mapping: dict[str, A.Expr]) -> A.Stmt:
    return A.map_stmt_exprs(s, lambda e: A.substitute(e, mapping))


def _fresh(taken: set[str], name: str) -> str:
    if name not in taken:
        taken.add(name)
        return name
    for k in itertools.count(2):
        cand = f"{name}{k}"
        if cand not in taken:
            taken.add(cand)
            return cand
    raise AssertionError


def _names_in(blocked: BlockedProgram) -> set[str]:
    out = {d.name for d in blocked.all_decls}
    for s in A.walk_stmts(blocked.tdata + blocked.model + blocked.genquant):
        if isinstance(s, A.For):
            out.add(s.var)
    return out


def _typed_decl(d: A.Decl, level: Level, name: str | None = None) -> A.Decl:
    return replace(d, name=name or d.name, level=str(level), init=None, dist=None)


# -- elimination ---------------------------------------------------------------------------


def eliminate_one(typed: TypedProgram, z: str, cap: int = DEFAULT_CAP) -> tuple[TypedProgram, set[str]]:
    """Marginalise one discrete parameter; returns the re-typed program and its blanket."""
    sup = support_of(typed, z)
    sl = ci_slice(typed, z)
    b = sl.blocked
    discrete = set(discrete_parameters(typed)) - {z}
    reads: set[str] = set()
    for s in sl.s2:
        reads |= _rw(s)[0]
    blanket = {v for v in reads - sl.tainted if _is_random(typed, v)}
    order = [d.name for d in typed.program.decls]
    scope = [support_of(typed, v) for v in order if v in blanket and v in discrete]
    entries = math.prod(s.size for s in scope)
    if entries > cap:
        raise SupportTooLarge(
            f"eliminating {z!r} needs a table of {entries} entries over {[s.name for s in scope]} "
            f"(cap {cap})"
        )

    taken = _names_in(b)
    decls = {d.name: d for d in b.all_decls}
    zv = _fresh(taken, f"{z}__v")
    loopvar = {s.name: _fresh(taken, f"{s.name}__v") for s in scope}
    w = _fresh(taken, f"w__{z}")
    wg = _fresh(taken, f"wg__{z}")
    zidx = _fresh(taken, f"{z}__idx")
    phi = _fresh(taken, f"phi__{z}")
    det = sorted(sl.tainted - {z}, key=order.index)
    rename = {x: _fresh(taken, f"{x}__e{z}") for x in det}

    # Model block: table of log-sum-exp factors over the remaining discrete scope.
    w_slot = A.Index(A.Var(w), _offset_index(A.Var(zv), sup.lo))
    subst = {z: A.Var(zv)} | {s.name: A.Var(loopvar[s.name]) for s in scope}
    inner: list[A.Stmt] = [A.Assign(w_slot, A.RealLit(0.0))]
    for s in sl.s2:
        t = _accumulate(s, w_slot)
        t = _subst_stmt(t, subst)
        t = A.rename_vars(t, {x: rename[x] for x in det})
        inner.append(t)
    z_loop = A.For(zv, A.IntLit(sup.lo), A.IntLit(sup.hi), tuple(inner))
    new_model_decls = [
        A.Decl(A.TypeSpec("real", dims=(A.IntLit(sup.size),)), w, "model"),
    ]
    for x in det:
        new_model_decls.append(_typed_decl(decls[x], Level.MODEL, rename[x]))
    if scope:
        new_model_decls.append(A.Decl(A.TypeSpec("real", dims=tuple(A.IntLit(s.size) for s in scope)), phi, "model"))
        cell = _index(A.Var(phi), [_offset_index(A.Var(loopvar[s.name]), s.lo) for s in scope])
        body_seq = (z_loop, A.Assign(cell, A.Call("log_sum_exp", (A.Var(w),))))
        for s in reversed(scope):
            body_seq = (A.For(loopvar[s.name], A.IntLit(s.lo), A.IntLit(s.hi), tuple(body_seq)),)
        use = _index(A.Var(phi), [_offset_index(A.Var(s.name), s.lo) for s in scope])
        factor = list(body_seq) + [A.TargetPlus(use)]
    else:
        factor = [z_loop, A.TargetPlus(A.Call("log_sum_exp", (A.Var(w),)))]

    # Generated quantities: conditional weights, categorical draw, then recompute dependants.
    wg_slot = A.Index(A.Var(wg), _offset_index(A.Var(zv), sup.lo))
    g_inner: list[A.Stmt] = [A.Assign(wg_slot, A.RealLit(0.0))]
    for s in sl.s2:
        g_inner.append(_subst_stmt(_accumulate(s, wg_slot), {z: A.Var(zv)}))
    redraw: list[A.Stmt] = [
        A.For(zv, A.IntLit(sup.lo), A.IntLit(sup.hi), tuple(g_inner)),
        A.Tilde(A.Var(zidx), A.DistCall("categorical", (A.Call("softmax", (A.Var(wg),)),))),
    ]
    shift = sup.lo - 1
    z_value = A.Var(zidx) if shift == 0 else A.Binary("+" if shift > 0 else "-", A.Var(zidx), A.IntLit(abs(shift)))
    redraw.append(A.Assign(A.Var(z), z_value))
    for s in sl.s2:
        t = _deterministic_part(s)
        if t is not None:
            redraw.append(t)
    gq_decls = [
        A.Decl(A.TypeSpec("real", dims=(A.IntLit(sup.size),)), wg, "genquant"),
        A.Decl(A.TypeSpec("int", 1, sup.size), zidx, "genquant"),
        _typed_decl(decls[z], Level.GENQUANT),
    ] + [_typed_decl(decls[x], Level.GENQUANT) for x in det]

    moved = {z} | set(det)
    out = BlockedProgram(
        data=list(b.data),
        tdata_decls=list(b.tdata_decls),
        tdata=list(b.tdata),
        parameters=[d for d in b.parameters if d.name not in moved],
        model_decls=[d for d in b.model_decls if d.name not in moved] + new_model_decls,
        model=sl.s1 + factor + sl.s3,
        genquant_decls=gq_decls + list(b.genquant_decls),
        genquant=redraw + list(b.genquant),
    )
    return infer(out.as_program()), blanket


def auto_order(typed: TypedProgram, names: list[str] | None = None) -> EliminationPlan:
    """Greedy min-degree order on the discrete interaction graph (declaration-order ties)."""
    names = list(discrete_parameters(typed) if names is None else names)
    for z in names:
        support_of(typed, z)
    decl_order = {d.name: i for i, d in enumerate(typed.program.decls)}
    pool = set(names)
    adj = {z: set() for z in names}
    for z in names:
        for v in markov_blanket(typed, z):
            if v in pool and v != z:
                adj[z].add(v)
                adj[v].add(z)
    order = []
    remaining = set(names)
    while remaining:
        z = min(remaining, key=lambda v: (len(adj[v] & remaining), decl_order[v]))
        nbrs = adj[z] & remaining
        for a in nbrs:
            adj[a] |= nbrs - {a}
        remaining.discard(z)
        order.append(z)
    return EliminationPlan(order)


def elim_gen(typed: TypedProgram, plan: EliminationPlan | list[str] | None = None,
             cap: int = DEFAULT_CAP) -> TypedProgram:
    """Eliminate every plan variable in order (``None`` picks all discretes with ``auto_order``)."""
    return marginalize(typed, plan, cap)[0]


def marginalize(typed: TypedProgram, plan: EliminationPlan | list[str] | None = None,
                cap: int = DEFAULT_CAP) -> tuple[TypedProgram, EliminationPlan]:
    if plan is None:
        plan = auto_order(typed)
    elif not isinstance(plan, EliminationPlan):
        names = list(plan)
        if len(set(names)) != len(names):
            raise NotEliminable("elimination plan lists a variable twice")
        plan = EliminationPlan(names)
    out = EliminationPlan(list(plan.order))
    for z in plan.order:
        typed, blanket = eliminate_one(typed, z, cap)
        out.blankets.append(blanket)
    return typed, out


# -- oracles ---------------------------------------------------------------------------------


def enumerate_log_target(program: A.Program, values: dict, discrete: list[Support]):
    """``{assignment: log target}`` by running the density on every joint discrete value."""
    from .runtime.interp import Store, run_program

    out = {}
    for combo in itertools.product(*[s.values() for s in discrete]):
        vals = dict(values)
        vals.update({s.name: v for s, v in zip(discrete, combo)})
        store = run_program(program, Store(vals))
        out[combo] = float(store.target)
    return out


def log_sum_exp(xs) -> float:
    xs = list(xs)
    m = max(xs)
    if m == -math.inf:
        return m
    return m + math.log(sum(math.exp(x - m) for x in xs))
