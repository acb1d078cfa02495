"""Random well-typed programs for the preservation and noninterference checks.

Programs are produced as source text and then parsed and level-inferred;
candidates the type system rejects are discarded by ``well_typed_programs``.
"""

from __future__ import annotations

import numpy as np

from slic.errors import StaticError
from slic.frontend import parse
from slic.levels import Level, infer
from slic.runtime.interp import compile_expr
from slic.runtime.transforms import flatten
from slic.shredder import shred

FAMILIES = ("normal", "cauchy", "logistic")


class _Gen:
    def __init__(self, rng: np.random.Generator, max_stmts: int):
        self.rng = rng
        self.budget = max_stmts
        self.lines: list[str] = []
        self.reals: list[str] = []  # readable real scalars
        self.det: list[str] = []  # assignable deterministic scalars
        self.obs: list[str] = []  # unassigned real data scalars
        self.bools: list[str] = []
        self.arrays: list[str] = []  # real[n] arrays
        self.has_n = False
        self.k = 0

    def fresh(self, prefix: str) -> str:
        self.k += 1
        return f"{prefix}{self.k}"

    def pick(self, xs):
        return xs[int(self.rng.integers(len(xs)))]

    # -- expressions --

    def expr(self, depth: int = 2, loop: str | None = None) -> str:
        r = self.rng.random()
        if depth == 0 or r < 0.3:
            atoms = list(self.reals)
            if loop:
                atoms += [loop] + [f"{a}[{loop}]" for a in self.arrays]
            atoms += [f"{a}[1]" for a in self.arrays]
            if atoms and self.rng.random() < 0.75:
                return self.pick(atoms)
            return repr(round(float(self.rng.uniform(-2, 2)), 2))
        if r < 0.75:
            op = self.pick(["+", "-", "*"])
            return f"({self.expr(depth - 1, loop)} {op} {self.expr(depth - 1, loop)})"
        if r < 0.85 and self.bools:
            return f"({self.pick(self.bools)} ? {self.expr(depth - 1, loop)} : {self.expr(depth - 1, loop)})"
        fn = self.pick(["square", "inv_logit", "log1p_exp"])
        return f"{fn}({self.expr(depth - 1, loop)})"

    def scale(self, loop: str | None = None) -> str:
        if self.rng.random() < 0.5:
            return repr(round(float(self.rng.uniform(0.5, 2.0)), 2))
        return f"(1 + square({self.expr(1, loop)}))"

    def dist(self, loop: str | None = None) -> str:
        return f"{self.pick(FAMILIES)}({self.expr(2, loop)}, {self.scale(loop)})"

    def guard(self) -> str:
        if self.bools and self.rng.random() < 0.5:
            return self.pick(self.bools)
        return f"{self.expr(1)} > 0"

    # -- statements --

    def simple_body_stmt(self, loop: str | None = None) -> str | None:
        opts = ["target"]
        if self.det:
            opts.append("assign")
        if self.obs:
            opts.append("observe")
        kind = self.pick(opts)
        if kind == "assign":
            x = self.pick(self.det)
            return f"{x} = {x} + {self.expr(1, loop)};" if loop else f"{x} = {self.expr(2, loop)};"
        if kind == "observe":
            return f"{self.pick(self.obs)} ~ {self.dist(loop)};"
        return f"target += -0.5 * square({self.expr(1, loop)});"

    def data_decls(self):
        n_data = int(self.rng.integers(1, 4))
        kinds = ["n", "real", "real", "bool"]
        for _ in range(n_data):
            kind = self.pick(kinds)
            if kind == "n" and not self.has_n:
                self.lines.append("data int<lower=1, upper=3> n;")
                self.has_n = True
            elif kind == "bool":
                name = self.fresh("g")
                self.lines.append(f"data bool {name};")
                self.bools.append(name)
            else:
                name = self.fresh("d")
                self.lines.append(f"data real {name};")
                self.obs.append(name)
                if self.rng.random() < 0.5:
                    self.reals.append(name)
            self.budget -= 1

    def statement(self):
        kinds = ["sample", "sample", "det", "assign", "observe", "target", "if"]
        if self.has_n:
            kinds += ["for", "array"]
        kind = self.pick(kinds)
        if kind == "sample":
            name = self.fresh("v")
            self.lines.append(f"real {name} ~ {self.dist()};")
            self.reals.append(name)
            self.budget -= 1
        elif kind == "det":
            name = self.fresh("t")
            self.lines.append(f"real {name} = {self.expr()};")
            self.reals.append(name)
            self.det.append(name)
            self.budget -= 1
        elif kind == "assign" and self.det:
            x = self.pick(self.det)
            self.lines.append(f"{x} = {self.expr()};")
            self.budget -= 1
        elif kind == "observe" and self.obs:
            self.lines.append(f"{self.pick(self.obs)} ~ {self.dist()};")
            self.budget -= 1
        elif kind == "if":
            then = self.simple_body_stmt()
            orelse = self.simple_body_stmt()
            self.lines.append(f"if ({self.guard()}) {{ {then} }} else {{ {orelse} }}")
            self.budget -= 1
        elif kind == "for":
            self.lines.append(f"for (i in 1:n) {{ {self.simple_body_stmt('i')} }}")
            self.budget -= 1
        elif kind == "array" and self.budget >= 2:
            name = self.fresh("a")
            self.lines.append(f"real[n] {name};")
            self.lines.append(f"for (i in 1:n) {{ {name}[i] ~ {self.dist('i')}; }}")
            self.arrays.append(name)
            self.budget -= 2
        else:
            self.lines.append(f"target += -0.5 * square({self.expr()});")
            self.budget -= 1

    def program(self) -> str:
        self.data_decls()
        while self.budget > 0:
            self.statement()
        return "\n".join(self.lines) + "\n"


def random_source(rng: np.random.Generator, max_stmts: int = 12) -> str:
    return _Gen(rng, int(rng.integers(3, max_stmts + 1))).program()


def well_typed_programs(n: int, seed: int = 0, max_stmts: int = 12):
    """``n`` (source, typed) pairs; ill-typed candidates are skipped."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        src = random_source(rng, max_stmts)
        try:
            typed = infer(parse(src))
        except StaticError:
            continue
        out.append((src, typed))
    return out


def _draw(t, rng: np.random.Generator, dims: list[int]):
    if dims:
        return [_draw(t, rng, dims[1:]) for _ in range(dims[0])]
    if t.base == "int":
        lo = int(t.lower) if t.lower is not None else 1
        hi = int(t.upper) if t.upper is not None else 3
        return int(rng.integers(lo, hi + 1))
    if t.base == "bool":
        return bool(rng.integers(2))
    if t.lower is not None and t.upper is not None:
        return float(rng.uniform(t.lower, t.upper))
    if t.lower is not None:
        return float(t.lower + rng.exponential())
    if t.upper is not None:
        return float(t.upper - rng.exponential())
    return float(rng.normal())


def random_inputs(typed, rng: np.random.Generator, data: dict | None = None) -> dict:
    """Values for data inputs (random unless given) and for every parameter."""
    blocked = shred(typed, allow_discrete=True)
    vals: dict = {}

    def dims_of(d):
        return [compile_expr(x)(vals) for x in d.type.dims]

    for d in blocked.data:
        vals[d.name] = data[d.name] if data is not None else _draw(d.type, rng, dims_of(d))
    for d in blocked.parameters:
        vals[d.name] = _draw(d.type, rng, dims_of(d))
    return vals


def perturb(value, rng: np.random.Generator):
    """A different value of the same shape and base type."""
    if isinstance(value, list):
        return [perturb(v, rng) for v in value]
    if isinstance(value, bool):
        return not value
    if isinstance(value, int):
        return value + int(rng.integers(1, 5))
    return float(rng.normal(scale=10.0))


def genquant_names(typed) -> list[str]:
    return [n for n, lv in typed.levels.items() if lv == Level.GENQUANT]


def flat_values(store_values: dict, names) -> list[float]:
    out = []
    for n in names:
        out += [float(x) for x in flatten(store_values[n])]
    return out
