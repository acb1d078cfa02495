"""Reference interpreter: statements are compiled once into Python closures.

Values are Python ``int``/``float``/``bool``, :class:`Dual`, or nested lists for
arrays.  A tilde statement is generative (draws and binds its left-hand side)
when its variable is in the ``generative`` set, and otherwise adds its log
density to the store's target.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from ..errors import DimensionError, EvalError, SlicError
from ..frontend import ast as A
from ..frontend.printer import stmt_lines
from . import distributions as D
from . import functions as F
from .dual import Dual


class Store:
    """Variable values, accumulated log target, RNG, and a statement counter."""

    __slots__ = ("values", "target", "rng", "steps", "observer")

    def __init__(self, values: dict | None = None, rng: np.random.Generator | None = None):
        self.values = {k: copy_value(v) for k, v in (values or {}).items()}
        self.target = 0.0
        self.rng = rng
        self.steps = 0
        self.observer: Callable | None = None

    def fork(self) -> "Store":
        s = Store.__new__(Store)
        s.values = dict(self.values)
        s.target = self.target
        s.rng = self.rng
        s.steps = 0
        s.observer = self.observer
        return s


def copy_value(v):
    if isinstance(v, list):
        return [copy_value(x) for x in v]
    return v


def default_value(base: str, dims: list[int]):
    if dims:
        if dims[0] < 0:
            raise DimensionError(f"negative array size {dims[0]}")
        return [default_value(base, dims[1:]) for _ in range(dims[0])]
    return {"real": math.nan, "int": 0, "bool": False}[base]


def _to_real(v):
    if isinstance(v, list):
        return [_to_real(x) for x in v]
    if isinstance(v, bool):
        return float(v)
    if isinstance(v, int):
        return float(v)
    return v


def _describe(s: A.Stmt) -> str:
    text = stmt_lines(s)[0].strip()
    where = f" at {s.span}" if s.span is not None else ""
    return f"`{text}`{where}"


# -- expressions -----------------------------------------------------------------


def _div(a, b):
    try:
        return a / b
    except ZeroDivisionError:
        a = float(a)
        if a == 0 or math.isnan(a):
            return math.nan
        return math.copysign(math.inf, a) * math.copysign(1.0, float(b))


def _index(a, i):
    if not isinstance(a, list):
        raise DimensionError("indexing a non-array value")
    if isinstance(i, float) or not 1 <= i <= len(a):
        raise DimensionError(f"index {i} out of range 1..{len(a)}")
    return a[i - 1]


_BINOPS = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _div,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}


def compile_expr(e: A.Expr) -> Callable[[dict], object]:
    if isinstance(e, (A.IntLit, A.RealLit, A.BoolLit)):
        c = e.value
        return lambda v: c
    if isinstance(e, A.Var):
        name = e.name

        def var(v):
            try:
                return v[name]
            except KeyError:
                raise EvalError(f"variable {name!r} has no value") from None

        return var
    if isinstance(e, A.Index):
        base, idx = compile_expr(e.base), compile_expr(e.index)
        return lambda v: _index(base(v), idx(v))
    if isinstance(e, A.Unary):
        o = compile_expr(e.operand)
        if e.op == "-":
            return lambda v: -o(v)
        return lambda v: not o(v)
    if isinstance(e, A.Binary):
        l, r = compile_expr(e.left), compile_expr(e.right)
        if e.op == "&&":
            return lambda v: bool(l(v)) and bool(r(v))
        if e.op == "||":
            return lambda v: bool(l(v)) or bool(r(v))
        if e.op == "+":
            return lambda v: l(v) + r(v)
        if e.op == "-":
            return lambda v: l(v) - r(v)
        if e.op == "*":
            return lambda v: l(v) * r(v)
        op = _BINOPS[e.op]
        return lambda v: op(l(v), r(v))
    if isinstance(e, A.Cond):
        c, t, f = compile_expr(e.cond), compile_expr(e.then), compile_expr(e.orelse)
        return lambda v: t(v) if c(v) else f(v)
    if isinstance(e, A.Call):
        args = [compile_expr(a) for a in e.args]
        if e.name in A.DENSITY_FUNCTIONS:
            fn = D.LPDF[A.DENSITY_FUNCTIONS[e.name]]
        else:
            fn = F.SCALAR[e.name]
        if len(args) == 1:
            a0 = args[0]
            return lambda v: fn(a0(v))
        if len(args) == 2:
            a0, a1 = args
            return lambda v: fn(a0(v), a1(v))
        return lambda v: fn(*[a(v) for a in args])
    if isinstance(e, A.ArrayLit):
        items = [compile_expr(x) for x in e.items]
        return lambda v: [copy_value(i(v)) for i in items]
    raise TypeError(type(e).__name__)


# -- statements ------------------------------------------------------------------


def _setter(lhs: A.Expr, real: bool):
    """Closure ``set(values, x)`` writing through an lvalue (Var or Index chain)."""
    name = A.lvalue_name(lhs)
    idx = [compile_expr(i) for i in A.lvalue_indices(lhs)]
    conv = _to_real if real else (lambda x: x)
    if not idx:
        def set_var(v, x):
            v[name] = conv(copy_value(x))

        return set_var

    head, last = idx[:-1], idx[-1]

    def set_elem(v, x):
        a = v[name]
        for i in head:
            a = _index(a, i(v))
        k = last(v)
        if not isinstance(a, list):
            raise DimensionError("indexing a non-array value")
        if isinstance(k, float) or not 1 <= k <= len(a):
            raise DimensionError(f"index {k} out of range 1..{len(a)}")
        a[k - 1] = conv(copy_value(x))

    return set_elem


def _guard(run, s: A.Stmt):
    """Attach the offending statement to any failure raised while running it."""

    def guarded(store):
        try:
            run(store)
        except SlicError as err:
            if err.span is None:
                err.span = s.span
                err.message = f"{err.message} in {_describe(s)}"
                err.args = (err.message,)
            raise
        except (TypeError, ValueError, KeyError, ZeroDivisionError, OverflowError, IndexError) as err:
            raise EvalError(f"{type(err).__name__}: {err} in {_describe(s)}", s.span) from err

    return guarded


class Compiler:
    def __init__(self, types: dict[str, A.TypeSpec], generative: set[str] | frozenset = frozenset()):
        self.types = types
        self.generative = generative

    def block(self, stmts) -> Callable[[Store], None]:
        runs = [self.stmt(s) for s in stmts]
        if len(runs) == 1:
            return runs[0]

        def run_all(store):
            for r in runs:
                r(store)

        return run_all

    def _is_real(self, lhs) -> bool:
        t = self.types.get(A.lvalue_name(lhs))
        return t is not None and t.base == "real"

    def stmt(self, s: A.Stmt) -> Callable[[Store], None]:
        if isinstance(s, A.Decl):
            dims = [compile_expr(d) for d in s.type.dims]
            name, base = s.name, s.type.base

            def declare(store):
                v = store.values
                if name not in v:
                    v[name] = default_value(base, [d(v) for d in dims])

            declare = _guard(declare, s)
            _, a = A.desugar_decl(s)
            if a is None:
                return declare
            rest = self.stmt(a)

            def decl_and_init(store):
                declare(store)
                rest(store)

            return decl_and_init
        if isinstance(s, A.Assign):
            rhs = compile_expr(s.rhs)
            put = _setter(s.lhs, self._is_real(s.lhs))

            def assign(store):
                store.steps += 1
                put(store.values, rhs(store.values))

            return _guard(assign, s)
        if isinstance(s, A.Tilde):
            args = [compile_expr(a) for a in s.dist.args]
            dname = s.dist.name
            if A.lvalue_name(s.lhs) in self.generative:
                put = _setter(s.lhs, self._is_real(s.lhs))

                def draw(store):
                    store.steps += 1
                    v = store.values
                    x = D.sample(dname, [a(v) for a in args], store.rng)
                    put(v, x)

                return _guard(draw, s)
            lhs = compile_expr(s.lhs)
            fn = D.LPDF[dname]
            if len(args) == 2:
                a0, a1 = args

                def observe2(store):
                    store.steps += 1
                    v = store.values
                    lp = fn(lhs(v), a0(v), a1(v))
                    if store.observer is not None:
                        store.observer(s, lp)
                    store.target = store.target + lp

                return _guard(observe2, s)

            def observe(store):
                store.steps += 1
                v = store.values
                lp = fn(lhs(v), *[a(v) for a in args])
                if store.observer is not None:
                    store.observer(s, lp)
                store.target = store.target + lp

            return _guard(observe, s)
        if isinstance(s, A.TargetPlus):
            e = compile_expr(s.expr)

            def target_plus(store):
                store.steps += 1
                store.target = store.target + e(store.values)

            return _guard(target_plus, s)
        if isinstance(s, A.If):
            c = compile_expr(s.cond)
            then, orelse = self.block(s.then), self.block(s.orelse)
            def run_if(store):
                try:
                    flag = c(store.values)
                except SlicError:
                    raise
                except Exception as err:
                    raise EvalError(f"{type(err).__name__}: {err} in {_describe(s)}", s.span) from err
                if flag:
                    then(store)
                else:
                    orelse(store)

            return run_if
        if isinstance(s, A.For):
            lo, hi = compile_expr(s.lo), compile_expr(s.hi)
            body = self.block(s.body)
            var = s.var

            def run_for(store):
                v = store.values
                a, b = lo(v), hi(v)
                if not (isinstance(a, int) and isinstance(b, int)):
                    raise EvalError(f"loop bounds must be integers in {_describe(s)}", s.span)
                for k in range(a, b + 1):
                    v[var] = k
                    body(store)
                v.pop(var, None)

            return run_for
        raise TypeError(type(s).__name__)


def compile_stmts(stmts, types: dict[str, A.TypeSpec], generative=frozenset()) -> Callable[[Store], None]:
    if not stmts:
        return lambda store: None
    return Compiler(types, generative).block(stmts)


def decl_types(program: A.Program) -> dict[str, A.TypeSpec]:
    return {d.name: d.type for d in program.decls}


def run_program(program: A.Program, store: Store, generative=frozenset()) -> Store:
    compile_stmts(program.stmts, decl_types(program), generative)(store)
    return store


def exec_stmts(stmts, store: Store, types=None, generative=frozenset()) -> Store:
    """Convenience: compile and run ``stmts`` once."""
    if types is None:
        types = {s.name: s.type for s in stmts if isinstance(s, A.Decl)}
    compile_stmts(list(stmts), types, generative)(store)
    return store


def exec_typed(typed, store: Store) -> Store:
    """Run a level-typed program with GENQUANT tildes generative."""
    from ..levels import Level

    gen = {n for n, lv in typed.levels.items() if lv == Level.GENQUANT}
    return run_program(typed.program, store, gen)


def as_float(v):
    if isinstance(v, Dual):
        return v.value
    return v
