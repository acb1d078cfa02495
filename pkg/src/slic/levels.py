"""Information-flow level inference over DATA < MODEL < GENQUANT.

Constraints all have the shape ``a <= b`` where each side is a variable or a
constant level.  Solving is two-phase: the least fixpoint in lattice order, then
every variable that the fixpoint put at MODEL and that is not forced to stay at
or below MODEL is lifted to GENQUANT, which is cheaper to run (once per draw
instead of once per leapfrog step).
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator

from .errors import LevelError, ShreddableError, Span
from .frontend import ast as A


class Level(enum.IntEnum):
    DATA = 0
    MODEL = 1
    GENQUANT = 2

    def __str__(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, text: str) -> "Level":
        return cls[text.upper()]


# Execution cost: data runs once, genquant once per draw, model once per gradient.
COST = {Level.DATA: 0, Level.GENQUANT: 1, Level.MODEL: 2}
BY_COST = sorted(Level, key=COST.__getitem__)


@dataclass(frozen=True)
class LevelConstraint:
    """``lo <= hi``; each endpoint is a variable name or a constant Level."""

    lo: str | Level
    hi: str | Level
    span: Span | None = field(default=None, compare=False)
    why: str = field(default="", compare=False)

    @property
    def kind(self) -> str:
        a = "const" if isinstance(self.lo, Level) else "var"
        b = "const" if isinstance(self.hi, Level) else "var"
        return f"{a}<={b}"

    def __str__(self) -> str:
        where = f"{self.span}: " if self.span else ""
        return f"{where}{self.lo} <= {self.hi}" + (f" ({self.why})" if self.why else "")


@dataclass
class ConstraintSet:
    names: list[str]  # declaration order
    constraints: list[LevelConstraint]
    decl_spans: dict[str, Span | None]

    def with_extra(self, extra) -> "ConstraintSet":
        return ConstraintSet(self.names, self.constraints + list(extra), self.decl_spans)


# -- statement walking ---------------------------------------------------------


def atomic_form(s: A.Stmt) -> A.Stmt | None:
    """The assignment/tilde a declaration performs, or ``s`` itself if atomic."""
    if isinstance(s, A.Decl):
        return A.desugar_decl(s)[1]
    if isinstance(s, A.ATOMIC):
        return s
    return None


@dataclass(frozen=True)
class Event:
    stmt: A.Stmt  # Assign | Tilde | TargetPlus (declarations already desugared)
    context: frozenset  # variables read by enclosing guards and loop bounds
    loops: tuple  # enclosing loop variable names
    origin: A.Stmt = field(compare=False, default=None)


def events(stmts, context=frozenset(), loops=()) -> Iterator[Event]:
    for s in stmts:
        if isinstance(s, A.If):
            ctx = context | (A.free_vars(s.cond) - set(loops))
            yield from events(s.then, ctx, loops)
            yield from events(s.orelse, ctx, loops)
        elif isinstance(s, A.For):
            ctx = context | ((A.free_vars(s.lo) | A.free_vars(s.hi)) - set(loops))
            yield from events(s.body, ctx, loops + (s.var,))
        else:
            a = atomic_form(s)
            if a is not None:
                yield Event(a, context, loops, s)


def event_reads(ev: Event) -> set[str]:
    return (A.stmt_reads(ev.stmt) | set(ev.context)) - set(ev.loops)


def tilde_sites(program: A.Program) -> dict[str, int]:
    out: dict[str, int] = {}
    for ev in events(program.stmts):
        if isinstance(ev.stmt, A.Tilde):
            n = A.lvalue_name(ev.stmt.lhs)
            out[n] = out.get(n, 0) + 1
    return out


def generative_eligible(program: A.Program) -> set[str]:
    """Variables that could be drawn ancestrally: one tilde site, never assigned, not data."""
    sites = tilde_sites(program)
    assigned = program.assigned_names
    return {
        d.name for d in program.decls
        if sites.get(d.name) == 1 and d.name not in assigned and d.level != "data"
    }


# -- constraint collection -----------------------------------------------------


def collect_constraints(program: A.Program) -> ConstraintSet:
    names = [d.name for d in program.decls]
    spans = {d.name: d.span for d in program.decls}
    cs: list[LevelConstraint] = []
    eligible = generative_eligible(program)
    defined = program.assigned_names | program.tilde_names

    for d in program.decls:
        if d.level is not None:
            lv = Level.parse(d.level)
            why = f"{d.name} annotated {lv}"
            cs.append(LevelConstraint(lv, d.name, d.span, why))
            cs.append(LevelConstraint(d.name, lv, d.span, why))
        elif d.name not in defined:
            why = f"{d.name} is never defined, so it is an input"
            cs.append(LevelConstraint(d.name, Level.DATA, d.span, why))
        for v in sorted(set().union(*[A.free_vars(e) for e in d.type.dims]) if d.type.dims else ()):
            cs.append(LevelConstraint(v, Level.DATA, d.span, f"array size of {d.name}"))

    for ev in events(program.stmts):
        s = ev.stmt
        reads = sorted(event_reads(ev))
        if isinstance(s, A.Assign):
            x = A.lvalue_name(s.lhs)
            for v in reads:
                if v != x:
                    cs.append(LevelConstraint(v, x, s.span, f"{v} flows into {x}"))
        elif isinstance(s, A.Tilde):
            x = A.lvalue_name(s.lhs)
            if x in eligible:
                cs.append(LevelConstraint(Level.MODEL, x, s.span, f"{x} is random"))
                for v in reads:
                    if v != x:
                        cs.append(LevelConstraint(v, x, s.span, f"{v} flows into {x}"))
            else:
                cs.append(LevelConstraint(x, Level.MODEL, s.span, f"{x} appears in a density factor"))
                for v in reads:
                    if v != x:
                        cs.append(LevelConstraint(v, Level.MODEL, s.span, f"{v} appears in a density factor"))
                if x not in program.assigned_names and not _data_annotated(program, x):
                    cs.append(LevelConstraint(Level.MODEL, x, s.span, f"{x} is random"))
        elif isinstance(s, A.TargetPlus):
            for v in reads:
                cs.append(LevelConstraint(v, Level.MODEL, s.span, f"{v} appears in target +="))
    return ConstraintSet(names, cs, spans)


def _data_annotated(program: A.Program, name: str) -> bool:
    try:
        return program.decl(name).level == "data"
    except KeyError:
        return False


# -- solving -------------------------------------------------------------------


def _graph(cs: ConstraintSet):
    lower = {n: Level.DATA for n in cs.names}
    lower_why: dict[str, LevelConstraint] = {}
    upper = {n: Level.GENQUANT for n in cs.names}
    upper_why: dict[str, LevelConstraint] = {}
    succ: dict[str, list[LevelConstraint]] = {n: [] for n in cs.names}
    pred: dict[str, list[LevelConstraint]] = {n: [] for n in cs.names}
    for c in cs.constraints:
        lo_c, hi_c = isinstance(c.lo, Level), isinstance(c.hi, Level)
        for end in (c.lo, c.hi):
            if not isinstance(end, Level) and end not in lower:
                raise LevelError(f"constraint on undeclared variable {end!r}", c.span)
        if lo_c and hi_c:
            if c.lo > c.hi:
                raise LevelError(f"unsatisfiable constant constraint {c}", c.span)
        elif lo_c:
            if c.lo > lower[c.hi]:
                lower[c.hi] = c.lo
                lower_why[c.hi] = c
        elif hi_c:
            if c.hi < upper[c.lo]:
                upper[c.lo] = c.hi
                upper_why[c.lo] = c
        else:
            succ[c.lo].append(c)
            pred[c.hi].append(c)
    return lower, lower_why, upper, upper_why, succ, pred


def least_fixpoint(cs: ConstraintSet) -> dict[str, Level]:
    lower, _, _, _, succ, _ = _graph(cs)
    lev = dict(lower)
    work = deque(cs.names)
    while work:
        x = work.popleft()
        for c in succ[x]:
            if lev[x] > lev[c.hi]:
                lev[c.hi] = lev[x]
                work.append(c.hi)
    return lev


def _conflict_chain(cs: ConstraintSet, x: str, need: Level) -> list[str]:
    """Shortest chain of constraints forcing ``x`` to at least ``need``."""
    lower, lower_why, _, _, _, pred = _graph(cs)
    prev: dict[str, LevelConstraint | None] = {x: None}
    q = deque([x])
    while q:
        y = q.popleft()
        if lower[y] >= need:
            chain = [str(lower_why[y])] if y in lower_why else []
            while prev[y] is not None:
                c = prev[y]
                chain.append(str(c))
                y = c.hi
            return chain
        for c in pred[y]:
            if c.lo not in prev:
                prev[c.lo] = c
                q.append(c.lo)
    return []


def solve_levels(cs: ConstraintSet, pins: dict[str, Level] | None = None) -> dict[str, Level]:
    """Minimum-cost assignment satisfying every constraint (plus optional pins)."""
    if pins:
        extra = []
        for n, lv in pins.items():
            extra += [LevelConstraint(lv, n, cs.decl_spans.get(n), f"{n} promoted to {lv}"),
                      LevelConstraint(n, lv, cs.decl_spans.get(n), f"{n} promoted to {lv}")]
        cs = cs.with_extra(extra)
    lev = least_fixpoint(cs)
    _, _, upper, upper_why, _, pred = _graph(cs)
    for n in cs.names:
        if lev[n] > upper[n]:
            chain = _conflict_chain(cs, n, lev[n]) + [str(upper_why[n])]
            raise LevelError(
                f"{n!r} must be at least {lev[n]} but at most {upper[n]}",
                upper_why[n].span, chain=chain,
            )
    # Phase 2: lift unblocked MODEL variables to GENQUANT.
    blocked = {n for n in cs.names if upper[n] <= Level.MODEL}
    work = deque(blocked)
    while work:
        y = work.popleft()
        for c in pred[y]:
            if c.lo not in blocked:
                blocked.add(c.lo)
                work.append(c.lo)
    return {
        n: (Level.GENQUANT if lev[n] == Level.MODEL and n not in blocked else lev[n])
        for n in cs.names
    }


def satisfies(cs: ConstraintSet, levels: dict[str, Level]) -> bool:
    def val(e):
        return e if isinstance(e, Level) else levels[e]

    return all(val(c.lo) <= val(c.hi) for c in cs.constraints)


def cost(levels: dict[str, Level]) -> int:
    return sum(COST[v] for v in levels.values())


# -- typed programs ------------------------------------------------------------


@dataclass
class TypedProgram:
    program: A.Program
    levels: dict[str, Level]

    def level(self, name: str) -> Level:
        return self.levels[name]

    def tag(self, s: A.Stmt) -> Level:
        """Level at which an atomic statement (or initialising declaration) executes."""
        a = atomic_form(s) if isinstance(s, A.Decl) else s
        if a is None:
            return self.levels[s.name]
        if isinstance(a, A.Assign):
            return self.levels[A.lvalue_name(a.lhs)]
        if isinstance(a, A.Tilde):
            lv = self.levels[A.lvalue_name(a.lhs)]
            return Level.GENQUANT if lv == Level.GENQUANT else Level.MODEL
        if isinstance(a, A.TargetPlus):
            return Level.MODEL
        raise TypeError(type(s).__name__)

    def is_generative(self, s: A.Tilde) -> bool:
        return self.levels[A.lvalue_name(s.lhs)] == Level.GENQUANT

    def stmt_levels(self, s: A.Stmt) -> set[Level]:
        """Levels of the atomic statements contained in ``s``."""
        return {self.tag(ev.stmt) for ev in events([s])}

    def describe(self) -> str:
        return "\n".join(f"{n}: {self.levels[n]}" for n in (d.name for d in self.program.decls))


@dataclass(frozen=True)
class Violation:
    name: str
    read: A.Stmt  # statement that read ``name`` at a higher level
    write: A.Stmt  # later statement that mutated it

    def message(self, levels) -> str:
        return (
            f"{self.name!r} (level {levels[self.name]}) is assigned after being read at level "
            f"{_tag_of(levels, self.read)}; variables become immutable once read at a higher level"
        )


def _tag_of(levels, s):
    return TypedProgram(A.Program(), levels).tag(s)


def check_shreddable(typed: TypedProgram) -> Violation | None:
    """First mutation of a variable that follows a strictly-higher-level read of it."""
    levels = typed.levels

    def writes(s) -> str | None:
        if isinstance(s, A.Assign):
            return A.lvalue_name(s.lhs)
        if isinstance(s, A.Tilde) and levels[A.lvalue_name(s.lhs)] == Level.GENQUANT:
            return A.lvalue_name(s.lhs)
        return None

    def scan(stmts, state, ctx, loops):
        for s in stmts:
            if isinstance(s, A.If):
                c = ctx | (A.free_vars(s.cond) - set(loops))
                left = dict(state)
                right = dict(state)
                v = scan(s.then, left, c, loops) or scan(s.orelse, right, c, loops)
                if v:
                    return v
                for k in set(left) | set(right):
                    a, b = left.get(k), right.get(k)
                    state[k] = a if b is None else b if a is None else (a if a[0] >= b[0] else b)
            elif isinstance(s, A.For):
                c = ctx | ((A.free_vars(s.lo) | A.free_vars(s.hi)) - set(loops))
                for _ in range(2):  # a second pass catches reads in iteration k vs writes in k+1
                    v = scan(s.body, state, c, loops + (s.var,))
                    if v:
                        return v
            else:
                a = atomic_form(s)
                if a is None:
                    continue
                tag = typed.tag(a)
                w = writes(a)
                if w is not None and w in state and state[w][0] > levels[w]:
                    return Violation(w, state[w][1], a)
                ev = Event(a, ctx, loops)
                for r in event_reads(ev):
                    if r in levels and (r not in state or state[r][0] < tag):
                        state[r] = (tag, a)
        return None

    return scan(typed.program.stmts, {}, frozenset(), ())


def _promotion_target(cs, pins, name, current) -> Level | None:
    for lv in BY_COST:
        if COST[lv] <= COST[current]:
            continue
        trial = dict(pins)
        trial[name] = lv
        try:
            solve_levels(cs, trial)
        except LevelError:
            continue
        return lv
    return None


def infer(program: A.Program) -> TypedProgram:
    """Collect, solve, and repair shreddability violations by promoting levels."""
    cs = collect_constraints(program)
    pins: dict[str, Level] = {}
    levels = solve_levels(cs)
    while True:
        typed = TypedProgram(program, levels)
        v = check_shreddable(typed)
        if v is None:
            return typed
        candidates = []
        reader = v.read
        if isinstance(reader, (A.Assign, A.Tilde)):
            candidates.append(A.lvalue_name(reader.lhs))
        candidates.append(v.name)
        for name in candidates:
            target = _promotion_target(cs, pins, name, levels[name])
            if target is not None:
                pins[name] = target
                levels = solve_levels(cs, pins)
                break
        else:
            raise ShreddableError(v.message(levels), v.write.span, related=v.read.span)


def check_levels(program: A.Program, levels: dict[str, Level]) -> TypedProgram:
    """Validate a given full assignment (used by transforms that fix levels themselves)."""
    cs = collect_constraints(program)
    if not satisfies(cs, levels):
        bad = next(c for c in cs.constraints if not satisfies(ConstraintSet(cs.names, [c], {}), levels))
        raise LevelError(f"level assignment violates {bad}", bad.span)
    typed = TypedProgram(program, dict(levels))
    v = check_shreddable(typed)
    if v is not None:
        raise ShreddableError(v.message(levels), v.write.span, related=v.read.span)
    return typed
