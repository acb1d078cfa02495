"""Name resolution and base-type checking (int / real / bool, array ranks)."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import BaseTypeError, DuplicateDeclaration, ParseError, UseBeforeDeclaration
from . import ast as A

RESERVED = frozenset({"target"})


@dataclass(frozen=True)
class Shape:
    base: str  # "int" | "real" | "bool"
    rank: int = 0

    def __str__(self):
        return self.base + "[]" * self.rank


INT, REAL, BOOL = Shape("int"), Shape("real"), Shape("bool")


def _numeric(s: Shape) -> bool:
    return s.rank == 0 and s.base in ("int", "real")


def _truthy(s: Shape) -> bool:
    return s.rank == 0 and s.base in ("int", "bool")


def assignable(dst: Shape, src: Shape) -> bool:
    if dst.rank != src.rank:
        return False
    return dst.base == src.base or (dst.base == "real" and src.base == "int")


class TypeEnv:
    """Declared types plus the loop variables currently in scope."""

    def __init__(self):
        self.decls: dict[str, A.TypeSpec] = {}
        self.loops: list[str] = []

    def shape(self, name: str) -> Shape | None:
        if name in self.loops:
            return INT
        t = self.decls.get(name)
        return None if t is None else Shape(t.base, len(t.dims))


def expr_shape(e: A.Expr, env: TypeEnv) -> Shape:
    if isinstance(e, A.IntLit):
        return INT
    if isinstance(e, A.RealLit):
        return REAL
    if isinstance(e, A.BoolLit):
        return BOOL
    if isinstance(e, A.Var):
        s = env.shape(e.name)
        if s is None:
            raise UseBeforeDeclaration(f"{e.name!r} used before declaration", e.span)
        return s
    if isinstance(e, A.Index):
        b = expr_shape(e.base, env)
        i = expr_shape(e.index, env)
        if b.rank == 0:
            raise BaseTypeError(f"cannot index a scalar of type {b}", e.span)
        if i != INT:
            raise BaseTypeError(f"array index must be int, got {i}", e.span)
        return Shape(b.base, b.rank - 1)
    if isinstance(e, A.Unary):
        s = expr_shape(e.operand, env)
        if e.op == "-":
            if not _numeric(s):
                raise BaseTypeError(f"unary '-' needs a numeric scalar, got {s}", e.span)
            return s
        if not _truthy(s):
            raise BaseTypeError(f"'!' needs a bool or int, got {s}", e.span)
        return BOOL
    if isinstance(e, A.Binary):
        l, r = expr_shape(e.left, env), expr_shape(e.right, env)
        op = e.op
        if op in ("&&", "||"):
            if not (_truthy(l) and _truthy(r)):
                raise BaseTypeError(f"{op!r} needs bool operands, got {l} and {r}", e.span)
            return BOOL
        if op in ("==", "!="):
            if l.rank or r.rank or ((l.base == "bool") != (r.base == "bool")):
                raise BaseTypeError(f"cannot compare {l} with {r}", e.span)
            return BOOL
        if not (_numeric(l) and _numeric(r)):
            raise BaseTypeError(f"{op!r} needs numeric scalars, got {l} and {r}", e.span)
        if op in ("<", "<=", ">", ">="):
            return BOOL
        if op == "/":
            return REAL
        return INT if l == INT and r == INT else REAL
    if isinstance(e, A.Cond):
        c = expr_shape(e.cond, env)
        if not _truthy(c):
            raise BaseTypeError(f"condition must be bool, got {c}", e.span)
        t, f = expr_shape(e.then, env), expr_shape(e.orelse, env)
        if assignable(t, f):
            return t
        if assignable(f, t):
            return f
        raise BaseTypeError(f"branches have incompatible types {t} and {f}", e.span)
    if isinstance(e, A.ArrayLit):
        shapes = [expr_shape(x, env) for x in e.items]
        out = shapes[0]
        for s in shapes[1:]:
            if assignable(out, s):
                continue
            if assignable(s, out):
                out = s
            else:
                raise BaseTypeError(f"array literal mixes {out} and {s}", e.span)
        return Shape(out.base, out.rank + 1)
    if isinstance(e, A.Call):
        args = [expr_shape(a, env) for a in e.args]
        if e.name in A.DENSITY_FUNCTIONS:
            dist = A.DENSITY_FUNCTIONS[e.name]
            _check_dist_args(dist, args[1:], e.span)
            _check_variate(dist, args[0], e.span)
            return REAL
        if e.name in A.ARRAY_FUNCTIONS:
            a = args[0]
            if a.rank != 1 or a.base == "bool":
                raise BaseTypeError(f"{e.name} needs a 1-d numeric array, got {a}", e.span)
            if e.name == "softmax":
                return Shape("real", 1)
            if e.name == "sum":
                return Shape(a.base)
            return REAL
        for a in args:
            if not _numeric(a):
                raise BaseTypeError(f"{e.name} needs numeric scalar arguments, got {a}", e.span)
        return REAL
    raise TypeError(type(e).__name__)


def _check_dist_args(dist: str, args: list[Shape], span) -> None:
    if dist == "categorical":
        if args[0].rank != 1 or args[0].base == "bool":
            raise BaseTypeError(f"categorical needs a probability array, got {args[0]}", span)
        return
    for a in args:
        if not _numeric(a):
            raise BaseTypeError(f"{dist} parameters must be numeric scalars, got {a}", span)
    if dist == "binomial" and args[0] != INT:
        raise BaseTypeError("binomial trial count must be int", span)


def _check_variate(dist: str, s: Shape, span) -> None:
    if s.rank != 0:
        raise BaseTypeError(f"{dist} variate must be a scalar, got {s}", span)
    if dist in A.DISCRETE_DISTRIBUTIONS:
        if s.base not in ("int", "bool"):
            raise BaseTypeError(f"{dist} variate must be int, got {s}", span)
    elif s.base == "bool":
        raise BaseTypeError(f"{dist} variate must be real, got {s}", span)


def _check_lvalue(lhs: A.Expr, env: TypeEnv, span) -> Shape:
    name = A.lvalue_name(lhs)
    if name in env.loops:
        raise ParseError(f"loop variable {name!r} cannot be assigned", span)
    return expr_shape(lhs, env)


def _check_stmt(s: A.Stmt, env: TypeEnv) -> None:
    if isinstance(s, A.Decl):
        if s.name in RESERVED:
            raise ParseError(f"{s.name!r} is reserved", s.span)
        if s.name in env.decls or s.name in env.loops:
            raise DuplicateDeclaration(f"{s.name!r} is already declared", s.span)
        for d in s.type.dims:
            if expr_shape(d, env) != INT:
                raise BaseTypeError("array sizes must be int", s.span)
        shape = Shape(s.type.base, len(s.type.dims))
        if s.init is not None and not assignable(shape, expr_shape(s.init, env)):
            raise BaseTypeError(f"cannot initialise {shape} {s.name!r} from {expr_shape(s.init, env)}", s.span)
        if s.dist is not None:
            _check_dist_args(s.dist.name, [expr_shape(a, env) for a in s.dist.args], s.span)
            _check_variate(s.dist.name, shape, s.span)
        env.decls[s.name] = s.type
    elif isinstance(s, A.Assign):
        dst = _check_lvalue(s.lhs, env, s.span)
        src = expr_shape(s.rhs, env)
        if not assignable(dst, src):
            raise BaseTypeError(f"cannot assign {src} to {dst}", s.span)
    elif isinstance(s, A.Tilde):
        if A.lvalue_name(s.lhs) in env.loops:
            raise ParseError("loop variable cannot be sampled", s.span)
        v = expr_shape(s.lhs, env)
        _check_dist_args(s.dist.name, [expr_shape(a, env) for a in s.dist.args], s.span)
        _check_variate(s.dist.name, v, s.span)
    elif isinstance(s, A.TargetPlus):
        if not _numeric(expr_shape(s.expr, env)):
            raise BaseTypeError("target += needs a numeric scalar", s.span)
    elif isinstance(s, A.If):
        if not _truthy(expr_shape(s.cond, env)):
            raise BaseTypeError("if condition must be bool", s.span)
        for t in s.then + s.orelse:
            _check_stmt(t, env)
    elif isinstance(s, A.For):
        if expr_shape(s.lo, env) != INT or expr_shape(s.hi, env) != INT:
            raise BaseTypeError("loop bounds must be int", s.span)
        if s.var in env.decls or s.var in env.loops or s.var in RESERVED:
            raise DuplicateDeclaration(f"loop variable {s.var!r} shadows an existing name", s.span)
        env.loops.append(s.var)
        try:
            for t in s.body:
                _check_stmt(t, env)
        finally:
            env.loops.pop()
    else:
        raise TypeError(type(s).__name__)


def typecheck(program: A.Program) -> TypeEnv:
    env = TypeEnv()
    for s in program.stmts:
        _check_stmt(s, env)
    return env
