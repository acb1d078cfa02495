"""Immutable AST for the blockless modelling language.

Nodes are frozen dataclasses so structural equality (and hashing) come for free;
source spans are carried along but excluded from comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator, Union

from ..errors import Span

DISTRIBUTIONS: dict[str, int] = {
    "normal": 2,
    "cauchy": 2,
    "logistic": 2,
    "uniform": 2,
    "gamma": 2,
    "bernoulli": 1,
    "categorical": 1,
    "binomial": 2,
}
DISCRETE_DISTRIBUTIONS = frozenset({"bernoulli", "categorical", "binomial"})
LOCATION_SCALE = frozenset({"normal", "cauchy", "logistic"})

# name -> (arity or None for "array argument", result kind)
FUNCTIONS: dict[str, int] = {
    "log": 1,
    "exp": 1,
    "sqrt": 1,
    "pow": 2,
    "log1p": 1,
    "log1m": 1,
    "fabs": 1,
    "square": 1,
    "inv_logit": 1,
    "lgamma": 1,
    "log1p_exp": 1,
    "log_sum_exp": 1,
    "sum": 1,
    "softmax": 1,
}
ARRAY_FUNCTIONS = frozenset({"log_sum_exp", "sum", "softmax"})


def density_function_name(dist: str) -> str:
    return f"{dist}_lpmf" if dist in DISCRETE_DISTRIBUTIONS else f"{dist}_lpdf"


DENSITY_FUNCTIONS = {density_function_name(d): d for d in DISTRIBUTIONS}


def _span() -> Span | None:
    return field(default=None, compare=False, repr=False)


# -- expressions ----------------------------------------------------------------


@dataclass(frozen=True)
class IntLit:
    value: int
    span: Span | None = _span()


@dataclass(frozen=True)
class RealLit:
    value: float
    span: Span | None = _span()


@dataclass(frozen=True)
class BoolLit:
    value: bool
    span: Span | None = _span()


@dataclass(frozen=True)
class Var:
    name: str
    span: Span | None = _span()


@dataclass(frozen=True)
class Index:
    base: "Expr"
    index: "Expr"
    span: Span | None = _span()


@dataclass(frozen=True)
class Unary:
    op: str  # "-" or "!"
    operand: "Expr"
    span: Span | None = _span()


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    span: Span | None = _span()


@dataclass(frozen=True)
class Cond:
    cond: "Expr"
    then: "Expr"
    orelse: "Expr"
    span: Span | None = _span()


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Expr", ...]
    span: Span | None = _span()


@dataclass(frozen=True)
class ArrayLit:
    items: tuple["Expr", ...]
    span: Span | None = _span()


Expr = Union[IntLit, RealLit, BoolLit, Var, Index, Unary, Binary, Cond, Call, ArrayLit]


@dataclass(frozen=True)
class DistCall:
    name: str
    args: tuple[Expr, ...]
    span: Span | None = _span()


# -- types ----------------------------------------------------------------------


@dataclass(frozen=True)
class TypeSpec:
    base: str  # "int" | "real" | "bool"
    lower: float | int | None = None
    upper: float | int | None = None
    dims: tuple[Expr, ...] = ()

    @property
    def is_discrete_bounded(self) -> bool:
        return self.base == "int" and self.lower is not None and self.upper is not None


# -- statements -----------------------------------------------------------------


@dataclass(frozen=True)
class Decl:
    type: TypeSpec
    name: str
    level: str | None = None  # "data" | "model" | "genquant"
    init: Expr | None = None
    dist: DistCall | None = None
    span: Span | None = _span()


@dataclass(frozen=True)
class Assign:
    lhs: Expr  # Var or Index chain
    rhs: Expr
    span: Span | None = _span()


@dataclass(frozen=True)
class Tilde:
    lhs: Expr
    dist: DistCall
    span: Span | None = _span()


@dataclass(frozen=True)
class TargetPlus:
    expr: Expr
    span: Span | None = _span()


@dataclass(frozen=True)
class If:
    cond: Expr
    then: tuple["Stmt", ...]
    orelse: tuple["Stmt", ...] = ()
    span: Span | None = _span()


@dataclass(frozen=True)
class For:
    var: str
    lo: Expr
    hi: Expr
    body: tuple["Stmt", ...]
    span: Span | None = _span()


Stmt = Union[Decl, Assign, Tilde, TargetPlus, If, For]
ATOMIC = (Assign, Tilde, TargetPlus)


@dataclass(frozen=True)
class Program:
    stmts: tuple[Stmt, ...] = ()

    @property
    def decls(self) -> tuple[Decl, ...]:
        return tuple(s for s in self.stmts if isinstance(s, Decl))

    def decl(self, name: str) -> Decl:
        for d in self.decls:
            if d.name == name:
                return d
        raise KeyError(name)

    @property
    def assigned_names(self) -> frozenset[str]:
        out = set()
        for s in walk_stmts(self.stmts):
            if isinstance(s, Decl) and s.init is not None:
                out.add(s.name)
            elif isinstance(s, Assign):
                out.add(lvalue_name(s.lhs))
        return frozenset(out)

    @property
    def tilde_names(self) -> frozenset[str]:
        out = set()
        for s in walk_stmts(self.stmts):
            if isinstance(s, Decl) and s.dist is not None:
                out.add(s.name)
            elif isinstance(s, Tilde):
                out.add(lvalue_name(s.lhs))
        return frozenset(out)

    @property
    def data_names(self) -> tuple[str, ...]:
        """Data-annotated declarations that are never assigned: the program's inputs."""
        assigned = self.assigned_names
        return tuple(d.name for d in self.decls if d.level == "data" and d.name not in assigned)

    @property
    def sampled_names(self) -> tuple[str, ...]:
        assigned, tilded = self.assigned_names, self.tilde_names
        return tuple(
            d.name for d in self.decls
            if d.level != "data" and d.name in tilded and d.name not in assigned
        )

    @property
    def deterministic_names(self) -> tuple[str, ...]:
        assigned = self.assigned_names
        return tuple(d.name for d in self.decls if d.name in assigned)


# -- generic helpers ------------------------------------------------------------


def walk_stmts(stmts) -> Iterator[Stmt]:
    """Pre-order traversal over statements, descending into if/for bodies."""
    for s in stmts:
        yield s
        if isinstance(s, If):
            yield from walk_stmts(s.then)
            yield from walk_stmts(s.orelse)
        elif isinstance(s, For):
            yield from walk_stmts(s.body)


def sub_exprs(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, Index):
        return (e.base, e.index)
    if isinstance(e, Unary):
        return (e.operand,)
    if isinstance(e, Binary):
        return (e.left, e.right)
    if isinstance(e, Cond):
        return (e.cond, e.then, e.orelse)
    if isinstance(e, (Call, ArrayLit)):
        return e.args if isinstance(e, Call) else e.items
    return ()


def free_vars(e: Expr | None) -> set[str]:
    if e is None:
        return set()
    if isinstance(e, Var):
        return {e.name}
    out: set[str] = set()
    for c in sub_exprs(e):
        out |= free_vars(c)
    return out


def lvalue_name(e: Expr) -> str:
    while isinstance(e, Index):
        e = e.base
    if not isinstance(e, Var):
        raise ValueError(f"not an lvalue: {e!r}")
    return e.name


def lvalue_indices(e: Expr) -> list[Expr]:
    out = []
    while isinstance(e, Index):
        out.append(e.index)
        e = e.base
    return out[::-1]


def stmt_reads(s: Stmt) -> set[str]:
    """Names read by an atomic statement (its own expressions only, no context)."""
    if isinstance(s, Assign):
        out = free_vars(s.rhs)
        for i in lvalue_indices(s.lhs):
            out |= free_vars(i)
        return out
    if isinstance(s, Tilde):
        out = free_vars(s.lhs)
        for a in s.dist.args:
            out |= free_vars(a)
        return out
    if isinstance(s, TargetPlus):
        return free_vars(s.expr)
    raise TypeError(f"not atomic: {type(s).__name__}")


def map_expr(e: Expr, fn) -> Expr:
    """Bottom-up rebuild; ``fn`` sees each node after its children were rebuilt."""
    if isinstance(e, Index):
        e = replace(e, base=map_expr(e.base, fn), index=map_expr(e.index, fn))
    elif isinstance(e, Unary):
        e = replace(e, operand=map_expr(e.operand, fn))
    elif isinstance(e, Binary):
        e = replace(e, left=map_expr(e.left, fn), right=map_expr(e.right, fn))
    elif isinstance(e, Cond):
        e = replace(e, cond=map_expr(e.cond, fn), then=map_expr(e.then, fn), orelse=map_expr(e.orelse, fn))
    elif isinstance(e, Call):
        e = replace(e, args=tuple(map_expr(a, fn) for a in e.args))
    elif isinstance(e, ArrayLit):
        e = replace(e, items=tuple(map_expr(a, fn) for a in e.items))
    return fn(e)


def substitute(e: Expr, mapping: dict[str, Expr]) -> Expr:
    if not mapping:
        return e
    return map_expr(e, lambda n: mapping.get(n.name, n) if isinstance(n, Var) else n)


def map_stmt_exprs(s: Stmt, fn) -> Stmt:
    """Apply an expression rewrite to every expression of a statement, recursively."""
    if isinstance(s, Decl):
        dims = tuple(fn(d) for d in s.type.dims)
        dist = None if s.dist is None else replace(s.dist, args=tuple(fn(a) for a in s.dist.args))
        init = None if s.init is None else fn(s.init)
        return replace(s, type=replace(s.type, dims=dims), init=init, dist=dist)
    if isinstance(s, Assign):
        return replace(s, lhs=fn(s.lhs), rhs=fn(s.rhs))
    if isinstance(s, Tilde):
        return replace(s, lhs=fn(s.lhs), dist=replace(s.dist, args=tuple(fn(a) for a in s.dist.args)))
    if isinstance(s, TargetPlus):
        return replace(s, expr=fn(s.expr))
    if isinstance(s, If):
        return replace(
            s, cond=fn(s.cond),
            then=tuple(map_stmt_exprs(t, fn) for t in s.then),
            orelse=tuple(map_stmt_exprs(t, fn) for t in s.orelse),
        )
    if isinstance(s, For):
        return replace(s, lo=fn(s.lo), hi=fn(s.hi), body=tuple(map_stmt_exprs(t, fn) for t in s.body))
    raise TypeError(type(s).__name__)


def rename_vars(s: Stmt, mapping: dict[str, str]) -> Stmt:
    """Rename variables (including lvalue roots) throughout a statement."""
    if not mapping:
        return s

    def fn(e):
        return map_expr(e, lambda n: replace(n, name=mapping[n.name]) if isinstance(n, Var) and n.name in mapping else n)

    out = map_stmt_exprs(s, fn)
    if isinstance(out, Decl) and out.name in mapping:
        out = replace(out, name=mapping[out.name])
    return out


def strip_spans(node):
    """Copy of ``node`` with every span cleared (handy for debugging reprs)."""
    if isinstance(node, tuple):
        return tuple(strip_spans(n) for n in node)
    if not hasattr(node, "__dataclass_fields__"):
        return node
    kwargs = {}
    for name in node.__dataclass_fields__:
        v = getattr(node, name)
        kwargs[name] = None if name == "span" else strip_spans(v)
    return type(node)(**kwargs)


def desugar_decl(d: Decl) -> tuple[Decl, Stmt | None]:
    """Split ``T x = e;`` / ``T x ~ d(...);`` into a bare declaration plus a statement."""
    bare = replace(d, init=None, dist=None)
    if d.init is not None:
        return bare, Assign(Var(d.name, d.span), d.init, d.span)
    if d.dist is not None:
        return bare, Tilde(Var(d.name, d.span), d.dist, d.span)
    return bare, None
