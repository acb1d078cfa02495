"""Generate numba-compiled forward-mode code for a model's log density.

The model block (plus the unconstraining transforms) is translated into one
Python function over numpy values.  Every real-valued model quantity carries a
tangent array with one column per parameter component; data stays passive.
Generated modules are written to a cache directory so numba can reuse its
compiled machine code across processes.
"""

from __future__ import annotations

import hashlib
import importlib.util
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from ..frontend import ast as A

_LPDF_ARITY = {"normal": 2, "cauchy": 2, "logistic": 2, "uniform": 2, "gamma": 2}
_COMPILED: dict[str, object] = {}


class Unsupported(Exception):
    """Construct outside the fast-path subset; the caller falls back to duals."""


def _cache_dir() -> Path:
    root = os.environ.get("SLICC_CACHE") or os.path.join(os.path.expanduser("~"), ".cache", "slic")
    p = Path(root) / "codegen"
    try:
        p.mkdir(parents=True, exist_ok=True)
        return p
    except OSError:
        return Path(tempfile.mkdtemp(prefix="slic-codegen-"))


class _Val:
    """A generated value: code for the value, optional tangent code, and its rank."""

    __slots__ = ("v", "g", "rank", "fresh")

    def __init__(self, v: str, g: str | None = None, rank: int = 0, fresh: bool = False):
        self.v, self.g, self.rank, self.fresh = v, g, rank, fresh


class Generator:
    def __init__(self, P: int, kinds: dict, shapes: dict, types: dict):
        self.P = P
        self.kinds = kinds  # name -> "data" | "active" | "passive" | "loop"
        self.shapes = shapes  # name -> tuple dims
        self.types = types  # name -> TypeSpec
        self.lines: list[str] = []
        self.depth = 1
        self.count = 0

    # -- low level --------------------------------------------------------------

    def emit(self, line: str) -> None:
        self.lines.append("    " * self.depth + line)

    def tmp(self, prefix: str = "t") -> str:
        self.count += 1
        return f"{prefix}{self.count}"

    def zeros(self) -> str:
        return f"np.zeros({self.P})"

    def bind(self, v: str, g: str | None = None, rank: int = 0) -> _Val:
        t = self.tmp()
        self.emit(f"{t} = {v}")
        if g is None:
            return _Val(t, None, rank)
        gt = self.tmp("g")
        self.emit(f"{gt} = {g}")
        return _Val(t, gt, rank, True)

    def tangent(self, x: _Val) -> str:
        return x.g if x.g is not None else self.zeros()

    # -- expressions ------------------------------------------------------------

    def expr(self, e: A.Expr) -> _Val:
        if isinstance(e, A.BoolLit):
            return _Val("True" if e.value else "False")
        if isinstance(e, A.IntLit):
            return _Val(f"({e.value})")
        if isinstance(e, A.RealLit):
            if not math.isfinite(e.value):
                raise Unsupported("non-finite literal")
            return _Val(f"({e.value!r})")
        if isinstance(e, A.Var):
            kind = self.kinds.get(e.name)
            rank = len(self.shapes.get(e.name, ()))
            if kind == "loop":
                return _Val(f"i_{e.name}")
            if kind == "data":
                return _Val(f"d_{e.name}", None, rank)
            if kind == "active":
                return _Val(f"v_{e.name}", f"g_{e.name}", rank)
            if kind == "passive":
                return _Val(f"v_{e.name}", None, rank)
            raise Unsupported(f"unknown variable {e.name}")
        if isinstance(e, A.Index):
            base = self.expr(e.base)
            if base.rank == 0:
                raise Unsupported("indexing a scalar")
            idx = self.expr(e.index)
            if idx.g is not None:
                raise Unsupported("active index")
            i = self.tmp("i")
            self.emit(f"{i} = {idx.v}")
            self.emit(f"if {i} < 1 or {i} > {base.v}.shape[0]:")
            self.emit("    raise IndexError('array index out of range')")
            g = None if base.g is None else f"{base.g}[{i} - 1]"
            return _Val(f"{base.v}[{i} - 1]", g, base.rank - 1)
        if isinstance(e, A.Unary):
            o = self.expr(e.operand)
            if e.op == "!":
                return _Val(f"(not {o.v})")
            if o.g is None:
                return _Val(f"(-{o.v})")
            return self.bind(f"-{o.v}", f"-{o.g}")
        if isinstance(e, A.Binary):
            return self.binary(e)
        if isinstance(e, A.Cond):
            return self.cond(e)
        if isinstance(e, A.Call):
            return self.call(e)
        if isinstance(e, A.ArrayLit):
            items = [self.expr(x) for x in e.items]
            if any(x.rank for x in items):
                raise Unsupported("nested array literal")
            t = self.tmp("a")
            self.emit(f"{t} = np.empty({len(items)})")
            for k, x in enumerate(items):
                self.emit(f"{t}[{k}] = {x.v}")
            if all(x.g is None for x in items):
                return _Val(t, None, 1)
            gt = self.tmp("ga")
            self.emit(f"{gt} = np.zeros(({len(items)}, {self.P}))")
            for k, x in enumerate(items):
                if x.g is not None:
                    self.emit(f"{gt}[{k}, :] = {x.g}")
            return _Val(t, gt, 1, True)
        raise Unsupported(type(e).__name__)

    def binary(self, e: A.Binary) -> _Val:
        op = e.op
        if op in ("&&", "||"):
            left = self.expr(e.left)
            t = self.tmp("b")
            self.emit(f"{t} = bool({left.v})")
            self.emit(f"if {'' if op == '&&' else 'not '}{t}:")
            self.depth += 1
            right = self.expr(e.right)
            self.emit(f"{t} = bool({right.v})")
            self.depth -= 1
            return _Val(t)
        l, r = self.expr(e.left), self.expr(e.right)
        if l.rank or r.rank:
            raise Unsupported("array arithmetic")
        if op in ("<", "<=", ">", ">=", "==", "!="):
            return _Val(f"({l.v} {op} {r.v})")
        if op == "/":
            v = f"({l.v} / {r.v})" if (l.g or r.g) else f"(float({l.v}) / {r.v})"
        else:
            v = f"({l.v} {op} {r.v})"
        if l.g is None and r.g is None:
            return _Val(v)
        if op == "+":
            g = l.g if r.g is None else r.g if l.g is None else f"{l.g} + {r.g}"
            return self._bind_alias(v, g, l.g is not None and r.g is not None)
        if op == "-":
            g = l.g if r.g is None else f"-{r.g}" if l.g is None else f"{l.g} - {r.g}"
            return self._bind_alias(v, g, r.g is not None)
        if op == "*":
            parts = []
            if l.g is not None:
                parts.append(f"{l.g} * {r.v}")
            if r.g is not None:
                parts.append(f"{r.g} * {l.v}")
            return self.bind(v, " + ".join(parts))
        if op == "/":
            q = self.bind(v)
            if r.g is None:
                g = f"{l.g} / {r.v}"
            elif l.g is None:
                g = f"-{q.v} * {r.g} / {r.v}"
            else:
                g = f"({l.g} - {q.v} * {r.g}) / {r.v}"
            gt = self.tmp("g")
            self.emit(f"{gt} = {g}")
            return _Val(q.v, gt, 0, True)
        raise Unsupported(op)

    def _bind_alias(self, v, g, fresh):
        t = self.tmp()
        self.emit(f"{t} = {v}")
        if fresh:
            gt = self.tmp("g")
            self.emit(f"{gt} = {g}")
            return _Val(t, gt, 0, True)
        return _Val(t, g, 0, False)

    def cond(self, e: A.Cond) -> _Val:
        c = self.expr(e.cond)
        t, gt = self.tmp(), self.tmp("g")
        self.emit(f"if {c.v}:")
        self.depth += 1
        a = self.expr(e.then)
        self.depth -= 1
        # Generate the else branch into a scratch buffer first to learn whether it is active.
        saved, self.lines = self.lines, []
        self.depth += 1
        b = self.expr(e.orelse)
        self.depth -= 1
        else_lines, self.lines = self.lines, saved
        if a.rank or b.rank:
            raise Unsupported("array-valued conditional")
        active = a.g is not None or b.g is not None
        self.depth += 1
        self.emit(f"{t} = {a.v}")
        if active:
            self.emit(f"{gt} = {self.tangent(a)}")
        self.depth -= 1
        self.emit("else:")
        self.lines += else_lines
        self.depth += 1
        self.emit(f"{t} = {b.v}")
        if active:
            self.emit(f"{gt} = {self.tangent(b)}")
        self.depth -= 1
        return _Val(t, gt if active else None, 0, False)

    _UNARY = {
        # name: (value code, derivative code in terms of x and value t)
        "log": ("K.safe_log({x})", "1.0 / {x}"),
        "exp": ("K.safe_exp({x})", "{t}"),
        "sqrt": ("K.safe_sqrt({x})", "0.5 / {t}"),
        "log1p": ("K.safe_log1p({x})", "1.0 / (1.0 + {x})"),
        "log1m": ("K.safe_log1p(-{x})", "-1.0 / (1.0 - {x})"),
        "fabs": ("abs({x})", "(1.0 if {x} >= 0 else -1.0)"),
        "square": ("({x} * {x})", "2.0 * {x}"),
        "inv_logit": ("K.inv_logit({x})", "{t} * (1.0 - {t})"),
        "lgamma": ("K.lgamma({x})", "K.digamma({x})"),
        "log1p_exp": ("K.log1p_exp({x})", "K.inv_logit({x})"),
    }

    def call(self, e: A.Call) -> _Val:
        name = e.name
        if name in A.DENSITY_FUNCTIONS:
            return self.density(A.DENSITY_FUNCTIONS[name], e.args)
        args = [self.expr(a) for a in e.args]
        if name in self._UNARY:
            (x,) = args
            if x.rank:
                raise Unsupported(f"{name} on an array")
            vcode, dcode = self._UNARY[name]
            xv = self.bind(x.v).v if x.g is not None else x.v
            if x.g is None:
                return _Val(vcode.format(x=xv))
            t = self.bind(vcode.format(x=xv)).v
            gt = self.tmp("g")
            self.emit(f"{gt} = ({dcode.format(x=xv, t=t)}) * {x.g}")
            return _Val(t, gt, 0, True)
        if name == "pow":
            x, y = args
            if x.rank or y.rank:
                raise Unsupported("pow on arrays")
            t = self.bind(f"K.safe_pow(float({x.v}), float({y.v}))").v
            if x.g is None and y.g is None:
                return _Val(t)
            dx, dy = self.tmp("d"), self.tmp("d")
            self.emit(f"{dx}, {dy} = K.pow_partials(float({x.v}), float({y.v}), {t})")
            parts = []
            if x.g is not None:
                parts.append(f"{dx} * {x.g}")
            if y.g is not None:
                parts.append(f"{dy} * {y.g}")
            gt = self.tmp("g")
            self.emit(f"{gt} = " + " + ".join(parts))
            return _Val(t, gt, 0, True)
        (x,) = args
        if x.rank != 1:
            raise Unsupported(f"{name} needs a 1-d array")
        xv = self.bind(f"np.asarray({x.v}, dtype=np.float64)").v
        if name == "log_sum_exp":
            t = self.bind(f"K.lse({xv})").v
            if x.g is None:
                return _Val(t)
            gt = self.tmp("g")
            self.emit(f"{gt} = K.lse_tangent({xv}, {x.g}, {t})")
            return _Val(t, gt, 0, True)
        if name == "sum":
            t = self.bind(f"np.sum({xv})").v
            if x.g is None:
                return _Val(t)
            gt = self.tmp("g")
            self.emit(f"{gt} = K.colsum({x.g})")
            return _Val(t, gt, 0, True)
        if name == "softmax":
            t = self.bind(f"np.exp({xv} - K.lse({xv}))").v
            if x.g is None:
                return _Val(t, None, 1)
            gt = self.tmp("g")
            self.emit(f"{gt} = K.softmax_tangent({t}, {x.g})")
            return _Val(t, gt, 1, True)
        raise Unsupported(name)

    def density(self, dist: str, arg_exprs) -> _Val:
        vals = [self.expr(a) for a in arg_exprs]
        if dist in _LPDF_ARITY:
            if any(v.rank for v in vals):
                raise Unsupported("array density argument")
            parts = [self.tmp("d") for _ in range(3)]
            lp = self.tmp("lp")
            self.emit(f"{lp}, {', '.join(parts)} = K.{dist}_lpdf({', '.join(f'float({v.v})' for v in vals)})")
            terms = [f"{d} * {v.g}" for d, v in zip(parts, vals) if v.g is not None]
        elif dist in ("bernoulli", "binomial"):
            if vals[0].g is not None:
                raise Unsupported("active discrete variate")
            lp, dp = self.tmp("lp"), self.tmp("d")
            pargs = [f"int({v.v})" for v in vals[:-1]] + [f"float({vals[-1].v})"]
            self.emit(f"{lp}, {dp} = K.{dist}_lpmf({', '.join(pargs)})")
            terms = [f"{dp} * {vals[-1].g}"] if vals[-1].g is not None else []
        elif dist == "categorical":
            k, theta = vals
            if k.g is not None or theta.rank != 1:
                raise Unsupported("categorical form")
            lp, dp, kk = self.tmp("lp"), self.tmp("d"), self.tmp("k")
            th = self.bind(f"np.asarray({theta.v}, dtype=np.float64)").v
            self.emit(f"{kk} = int({k.v})")
            self.emit(f"{lp}, {dp} = K.categorical_lpmf({kk}, {th})")
            terms = []
            if theta.g is not None:
                self.emit(f"if {kk} < 1 or {kk} > {th}.shape[0]:")
                self.emit(f"    {dp} = 0.0")
                self.emit(f"    {kk} = 1")
                terms = [f"{dp} * {theta.g}[{kk} - 1]"]
        else:
            raise Unsupported(dist)
        if not terms:
            return _Val(lp)
        gt = self.tmp("g")
        self.emit(f"{gt} = " + " + ".join(terms))
        return _Val(lp, gt, 0, True)

    # -- statements ---------------------------------------------------------------

    def block(self, stmts) -> None:
        start = len(self.lines)
        for s in stmts:
            self.stmt(s)
        if len(self.lines) == start:
            self.emit("pass")

    def add_target(self, x: _Val) -> None:
        self.emit(f"lp += {x.v}")
        if x.g is not None:
            self.emit(f"glp += {x.g}")

    def stmt(self, s: A.Stmt) -> None:
        if isinstance(s, A.Decl):
            self.declare(s)
            _, a = A.desugar_decl(s)
            if a is not None:
                self.stmt(a)
            return
        if isinstance(s, A.Assign):
            self.assign(s.lhs, self.expr(s.rhs))
            return
        if isinstance(s, A.Tilde):
            self.add_target(self.density(s.dist.name, (s.lhs,) + tuple(s.dist.args)))
            return
        if isinstance(s, A.TargetPlus):
            x = self.expr(s.expr)
            self.add_target(x)
            return
        if isinstance(s, A.If):
            c = self.expr(s.cond)
            self.emit(f"if {c.v}:")
            self.depth += 1
            self.block(s.then)
            self.depth -= 1
            if s.orelse:
                self.emit("else:")
                self.depth += 1
                self.block(s.orelse)
                self.depth -= 1
            return
        if isinstance(s, A.For):
            lo, hi = self.expr(s.lo), self.expr(s.hi)
            if lo.g is not None or hi.g is not None:
                raise Unsupported("active loop bound")
            self.kinds[s.var] = "loop"
            self.emit(f"for i_{s.var} in range(int({lo.v}), int({hi.v}) + 1):")
            self.depth += 1
            self.block(s.body)
            self.depth -= 1
            del self.kinds[s.var]
            return
        raise Unsupported(type(s).__name__)

    def declare(self, d: A.Decl) -> None:
        shape = self.shapes[d.name]
        kind = self.kinds[d.name]
        if kind == "active":
            if shape:
                self.emit(f"v_{d.name} = np.full({shape}, np.nan)")
                self.emit(f"g_{d.name} = np.zeros({shape + (self.P,)})")
            else:
                self.emit(f"v_{d.name} = np.nan")
                self.emit(f"g_{d.name} = np.zeros({self.P})")
        else:
            dtype = "np.int64" if d.type.base == "int" else "np.bool_"
            zero = "0" if d.type.base == "int" else "False"
            if shape:
                self.emit(f"v_{d.name} = np.zeros({shape}, dtype={dtype})")
            else:
                self.emit(f"v_{d.name} = {zero}")

    def assign(self, lhs: A.Expr, x: _Val) -> None:
        name = A.lvalue_name(lhs)
        kind = self.kinds.get(name)
        if kind not in ("active", "passive"):
            raise Unsupported(f"assignment to {kind} variable {name}")
        idx = A.lvalue_indices(lhs)
        shape = self.shapes[name]
        base = self.types[name].base
        if x.rank != len(shape) - len(idx):
            raise Unsupported("rank mismatch in assignment")
        conv = {"real": "float", "int": "int", "bool": "bool"}[base]
        if not idx:
            if shape:
                dtype = {"real": "np.float64", "int": "np.int64", "bool": "np.bool_"}[base]
                self.emit(f"v_{name} = np.asarray({x.v}).astype({dtype})")
                if kind == "active":
                    g = f"{x.g}.copy()" if x.g is not None else f"np.zeros({shape + (self.P,)})"
                    self.emit(f"g_{name} = {g}")
                return
            self.emit(f"v_{name} = {conv}({x.v})")
            if kind == "active":
                if x.g is None:
                    self.emit(f"g_{name} = {self.zeros()}")
                else:
                    self.emit(f"g_{name} = {x.g}" + ("" if x.fresh else ".copy()"))
            return
        ivars = []
        for k, i in enumerate(idx):
            iv = self.expr(i)
            if iv.g is not None:
                raise Unsupported("active index")
            t = self.tmp("i")
            self.emit(f"{t} = {iv.v}")
            self.emit(f"if {t} < 1 or {t} > v_{name}.shape[{k}]:")
            self.emit("    raise IndexError('array index out of range')")
            ivars.append(f"{t} - 1")
        sub = ", ".join(ivars)
        self.emit(f"v_{name}[{sub}] = {conv + '(' + x.v + ')' if x.rank == 0 else x.v}")
        if kind == "active":
            self.emit(f"g_{name}[{sub}] = {x.g if x.g is not None else 0.0}")


def _kinds_for(model, wrt: tuple[str, ...]):
    b = model.blocked
    types = dict(model.types)
    kinds: dict[str, str] = {}
    shapes: dict[str, tuple] = {}
    for p in model.params:
        kinds[p.name] = "active"
        shapes[p.name] = p.shape
    env = dict(model.base_values)
    for d in b.data + b.tdata_decls:
        kinds[d.name] = "active" if d.name in wrt else "data"
        shapes[d.name] = _shape(env[d.name])
    from .interp import compile_expr

    for d in b.model_decls:
        shapes[d.name] = tuple(compile_expr(x)(env) for x in d.type.dims)
        kinds[d.name] = "active" if d.type.base == "real" else "passive"
    return kinds, shapes, types


def _shape(v) -> tuple:
    out = []
    while isinstance(v, list):
        out.append(len(v))
        v = v[0] if v else None
    return tuple(out)


def generate_source(model, wrt: tuple[str, ...] = ()) -> tuple[str, list[str]]:
    """Source of ``lp_grad(u, extra, *data)`` plus the ordered data argument names."""
    b = model.blocked
    kinds, shapes, types = _kinds_for(model, wrt)
    n_extra = 0
    extra_offsets = {}
    for name in wrt:
        extra_offsets[name] = model.dim + n_extra
        n_extra += math.prod(shapes[name])
    P = model.dim + n_extra
    model_stmts = b.model_decls + b.model
    used = set()
    for s in A.walk_stmts(model_stmts):
        if isinstance(s, A.Decl):
            for d in s.type.dims:
                used |= A.free_vars(d)
        a = s if isinstance(s, A.ATOMIC) else (A.desugar_decl(s)[1] if isinstance(s, A.Decl) else None)
        if a is not None:
            used |= A.stmt_reads(a)
        if isinstance(s, A.If):
            used |= A.free_vars(s.cond)
        if isinstance(s, A.For):
            used |= A.free_vars(s.lo) | A.free_vars(s.hi)
    data_args = [d.name for d in b.data + b.tdata_decls if d.name in used and d.name not in wrt]
    g = Generator(P, kinds, shapes, types)
    g.emit("lp = 0.0")
    g.emit(f"glp = np.zeros({P})")
    for p in model.params:
        _unpack_param(g, p)
    for name, off in extra_offsets.items():
        shape = shapes[name]
        n = math.prod(shape)
        if shape:
            g.emit(f"v_{name} = extra[{off - model.dim}:{off - model.dim + n}].copy().reshape({shape})")
            g.emit(f"g_{name} = np.zeros(({n}, {P}))")
            g.emit(f"for j in range({n}):")
            g.emit(f"    g_{name}[j, {off} + j] = 1.0")
            g.emit(f"g_{name} = g_{name}.reshape({shape + (P,)})")
        else:
            g.emit(f"v_{name} = extra[{off - model.dim}]")
            g.emit(f"g_{name} = np.zeros({P})")
            g.emit(f"g_{name}[{off}] = 1.0")
    g.block(model_stmts)
    g.emit("return lp, glp")
    args = ", ".join(["u", "extra"] + [f"d_{n}" for n in data_args])
    header = [
        "import math",
        "import numpy as np",
        "from numba import njit",
        "from slic.runtime import kernels as K",
        "",
        "",
        "@njit(cache=True, error_model='numpy')",
        f"def lp_grad({args}):",
    ]
    return "\n".join(header + g.lines) + "\n", data_args


def _unpack_param(g: Generator, p) -> None:
    n, off, P = p.size, p.offset, g.P
    shape = p.shape
    name = p.name
    u = f"u[{off}:{off + n}]"
    g.emit(f"uu = {u}.copy()")
    if p.kind == "identity":
        g.emit("vv = uu.copy()")
        g.emit(f"dd = np.ones({n})")
    elif p.kind == "lower":
        g.emit("ee = np.exp(uu)")
        g.emit(f"vv = ee + {float(p.lower)!r}")
        g.emit("dd = ee")
        g.emit("lp += np.sum(uu)")
        g.emit(f"for j in range({n}):")
        g.emit(f"    glp[{off} + j] += 1.0")
    elif p.kind == "upper":
        g.emit("ee = np.exp(uu)")
        g.emit(f"vv = {float(p.upper)!r} - ee")
        g.emit("dd = -ee")
        g.emit("lp += np.sum(uu)")
        g.emit(f"for j in range({n}):")
        g.emit(f"    glp[{off} + j] += 1.0")
    else:
        lo, hi = float(p.lower), float(p.upper)
        w = hi - lo
        g.emit(f"ss = np.empty({n})")
        g.emit(f"for j in range({n}):")
        g.emit("    ss[j] = K.inv_logit(uu[j])")
        g.emit(f"    lp += {math.log(w)!r} - K.log1p_exp(-uu[j]) - K.log1p_exp(uu[j])")
        g.emit(f"    glp[{off} + j] += 1.0 - 2.0 * ss[j]")
        g.emit(f"vv = {lo!r} + {w!r} * ss")
        g.emit(f"dd = {w!r} * ss * (1.0 - ss)")
    g.emit(f"gg = np.zeros(({n}, {P}))")
    g.emit(f"for j in range({n}):")
    g.emit(f"    gg[j, {off} + j] = dd[j]")
    if shape:
        g.emit(f"v_{name} = vv.reshape({shape})")
        g.emit(f"g_{name} = gg.reshape({shape + (P,)})")
    else:
        g.emit(f"v_{name} = vv[0]")
        g.emit(f"g_{name} = gg[0].copy()")


def _to_numpy(v, base):
    if isinstance(v, list):
        dtype = {"real": np.float64, "int": np.int64, "bool": np.bool_}[base]
        return np.ascontiguousarray(np.array(v, dtype=dtype))
    if base == "real":
        return float(v)
    if base == "int":
        return int(v)
    return bool(v)


def _load(source: str):
    key = hashlib.sha256(source.encode()).hexdigest()[:24]
    if key in _COMPILED:
        return _COMPILED[key]
    path = _cache_dir() / f"slic_gen_{key}.py"
    if not path.exists():
        tmp = path.with_suffix(f".{os.getpid()}.tmp")
        tmp.write_text(source)
        os.replace(tmp, path)
    spec = importlib.util.spec_from_file_location(f"slic_gen_{key}", path)
    mod = importlib.util.module_from_spec(spec)
    sys.modules[spec.name] = mod
    spec.loader.exec_module(mod)
    _COMPILED[key] = mod.lp_grad
    return mod.lp_grad


class FastDensity:
    """Callable ``u -> (log density, gradient)`` backed by generated numba code."""

    def __init__(self, model, wrt: tuple[str, ...] = ()):
        self.source, names = generate_source(model, wrt)
        self.fn = _load(self.source)
        self.args = tuple(_to_numpy(model.base_values[n], model.types[n].base) for n in names)
        self.wrt = wrt
        self.dim = model.dim
        self._empty = np.zeros(0)

    def __call__(self, u: np.ndarray, extra: np.ndarray | None = None):
        e = self._empty if extra is None else np.asarray(extra, dtype=np.float64)
        lp, g = self.fn(np.ascontiguousarray(u, dtype=np.float64), e, *self.args)
        return float(lp), g


def compile_model(model, wrt: tuple[str, ...] = ()) -> FastDensity | None:
    """Fast density for ``model``, or None if it uses features outside the generated subset."""
    if os.environ.get("SLICC_NO_JIT"):
        return None
    try:
        return FastDensity(model, wrt)
    except Unsupported:
        return None
