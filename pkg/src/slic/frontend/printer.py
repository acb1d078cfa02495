"""Pretty-printer whose output re-parses to a structurally equal AST."""

from __future__ import annotations

from . import ast as A

_PREC = {"||": 1, "&&": 2, "==": 3, "!=": 3, "<": 4, "<=": 4, ">": 4, ">=": 4, "+": 5, "-": 5, "*": 6, "/": 6}
_UNARY = 7
_ATOM = 9


def _num(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    r = repr(float(v))
    if r in ("inf", "-inf", "nan"):
        raise ValueError(f"cannot print non-finite literal {r}")
    return r


def _prec(e: A.Expr) -> int:
    if isinstance(e, A.Cond):
        return 0
    if isinstance(e, A.Binary):
        return _PREC[e.op]
    if isinstance(e, A.Unary):
        return _UNARY
    if isinstance(e, (A.IntLit, A.RealLit)) and e.value < 0:
        return _UNARY
    return _ATOM


def _wrap(e: A.Expr, need: int) -> str:
    s = expr(e)
    return f"({s})" if _prec(e) < need else s


def expr(e: A.Expr) -> str:
    if isinstance(e, (A.IntLit, A.RealLit, A.BoolLit)):
        return _num(e.value)
    if isinstance(e, A.Var):
        return e.name
    if isinstance(e, A.Index):
        return f"{_wrap(e.base, _ATOM)}[{expr(e.index)}]"
    if isinstance(e, A.Unary):
        inner = _wrap(e.operand, _UNARY + 1)
        if isinstance(e.operand, (A.IntLit, A.RealLit)) and e.operand.value >= 0:
            inner = f"({inner})"
        return f"{e.op}{inner}"
    if isinstance(e, A.Binary):
        p = _PREC[e.op]
        return f"{_wrap(e.left, p)} {e.op} {_wrap(e.right, p + 1)}"
    if isinstance(e, A.Cond):
        return f"{_wrap(e.cond, 1)} ? {_wrap(e.then, 1)} : {expr(e.orelse)}"
    if isinstance(e, A.Call):
        args = [expr(a) for a in e.args]
        if e.name in A.DENSITY_FUNCTIONS:
            rest = ", ".join(args[1:])
            return f"{e.name}({args[0]} | {rest})"
        return f"{e.name}({', '.join(args)})"
    if isinstance(e, A.ArrayLit):
        return "{" + ", ".join(expr(x) for x in e.items) + "}"
    raise TypeError(type(e).__name__)


def dist(d: A.DistCall) -> str:
    return f"{d.name}({', '.join(expr(a) for a in d.args)})"


def type_spec(t: A.TypeSpec, old_style: bool = False) -> str:
    out = t.base
    bounds = []
    if t.lower is not None:
        bounds.append(f"lower={_num(t.lower)}")
    if t.upper is not None:
        bounds.append(f"upper={_num(t.upper)}")
    if bounds:
        out += "<" + ", ".join(bounds) + ">"
    if t.dims and not old_style:
        out += "[" + ", ".join(expr(d) for d in t.dims) + "]"
    return out


def decl(d: A.Decl) -> str:
    head = f"{d.level} " if d.level else ""
    out = f"{head}{type_spec(d.type)} {d.name}"
    if d.init is not None:
        out += f" = {expr(d.init)}"
    elif d.dist is not None:
        out += f" ~ {dist(d.dist)}"
    return out + ";"


def stmt_lines(s: A.Stmt, indent: int = 0) -> list[str]:
    pad = "  " * indent
    if isinstance(s, A.Decl):
        return [pad + decl(s)]
    if isinstance(s, A.Assign):
        return [f"{pad}{expr(s.lhs)} = {expr(s.rhs)};"]
    if isinstance(s, A.Tilde):
        return [f"{pad}{expr(s.lhs)} ~ {dist(s.dist)};"]
    if isinstance(s, A.TargetPlus):
        return [f"{pad}target += {expr(s.expr)};"]
    if isinstance(s, A.If):
        lines = [f"{pad}if ({expr(s.cond)}) {{"]
        for t in s.then:
            lines += stmt_lines(t, indent + 1)
        if s.orelse:
            lines.append(f"{pad}}} else {{")
            for t in s.orelse:
                lines += stmt_lines(t, indent + 1)
        lines.append(pad + "}")
        return lines
    if isinstance(s, A.For):
        lines = [f"{pad}for ({s.var} in {expr(s.lo)}:{expr(s.hi)}) {{"]
        for t in s.body:
            lines += stmt_lines(t, indent + 1)
        lines.append(pad + "}")
        return lines
    raise TypeError(type(s).__name__)


def pretty(program: A.Program) -> str:
    lines: list[str] = []
    for s in program.stmts:
        lines += stmt_lines(s)
    return "\n".join(lines)
