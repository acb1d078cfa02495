"""Split a level-typed program into single-level blocks and emit Stan-style text."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import DiscreteParameterError
from .frontend import ast as A
from .frontend import printer as P
from .levels import Level, TypedProgram, atomic_form


@dataclass
class BlockedProgram:
    data: list[A.Decl] = field(default_factory=list)
    tdata_decls: list[A.Decl] = field(default_factory=list)
    tdata: list[A.Stmt] = field(default_factory=list)
    parameters: list[A.Decl] = field(default_factory=list)
    model_decls: list[A.Decl] = field(default_factory=list)
    model: list[A.Stmt] = field(default_factory=list)
    genquant_decls: list[A.Decl] = field(default_factory=list)
    genquant: list[A.Stmt] = field(default_factory=list)
    levels: dict[str, Level] = field(default_factory=dict)

    def stmts(self, level: Level) -> list[A.Stmt]:
        return {Level.DATA: self.tdata, Level.MODEL: self.model, Level.GENQUANT: self.genquant}[level]

    def decls_at(self, level: Level) -> list[A.Decl]:
        if level == Level.DATA:
            return self.data + self.tdata_decls
        if level == Level.MODEL:
            return self.parameters + self.model_decls
        return list(self.genquant_decls)

    @property
    def all_decls(self) -> list[A.Decl]:
        return self.data + self.tdata_decls + self.parameters + self.model_decls + self.genquant_decls

    def as_program(self) -> A.Program:
        """Blocks concatenated in execution order, each declaration carrying its level."""
        stmts = (
            self.data + self.tdata_decls + self.tdata
            + self.parameters + self.model_decls + self.model
            + self.genquant_decls + self.genquant
        )
        return A.Program(tuple(stmts))

    def slice_program(self, upto: Level) -> A.Program:
        """Program containing only the blocks at or below ``upto``."""
        stmts: list[A.Stmt] = self.data + self.tdata_decls + self.tdata
        if upto >= Level.MODEL:
            stmts += self.parameters + self.model_decls + self.model
        if upto >= Level.GENQUANT:
            stmts += self.genquant_decls + self.genquant
        return A.Program(tuple(stmts))


def _restrict(s: A.Stmt, level: Level, typed: TypedProgram) -> A.Stmt | None:
    """Copy of ``s`` keeping only sub-statements of ``level``; None if nothing is left."""
    if isinstance(s, A.If):
        then = tuple(t for t in (_restrict(x, level, typed) for x in s.then) if t is not None)
        orelse = tuple(t for t in (_restrict(x, level, typed) for x in s.orelse) if t is not None)
        if not then and not orelse:
            return None
        return replace(s, then=then, orelse=orelse)
    if isinstance(s, A.For):
        body = tuple(t for t in (_restrict(x, level, typed) for x in s.body) if t is not None)
        return replace(s, body=body) if body else None
    return s if typed.tag(s) == level else None


def shred(typed: TypedProgram, allow_discrete: bool = False) -> BlockedProgram:
    """Split into blocks; discrete parameters are an error unless ``allow_discrete``."""
    prog = typed.program
    assigned = prog.assigned_names
    out = BlockedProgram(levels=dict(typed.levels))
    for s in prog.stmts:
        if isinstance(s, A.Decl):
            lv = typed.levels[s.name]
            bare = replace(s, init=None, dist=None, level=str(lv))
            if lv == Level.DATA:
                (out.tdata_decls if s.name in assigned else out.data).append(bare)
            elif lv == Level.MODEL:
                if s.name in assigned:
                    out.model_decls.append(bare)
                elif s.type.base != "real" and not allow_discrete:
                    raise DiscreteParameterError(
                        f"discrete parameter {s.name!r} must be marginalised before compilation", s.span
                    )
                else:
                    out.parameters.append(bare)
            else:
                out.genquant_decls.append(bare)
            a = atomic_form(s)
            if a is not None:
                out.stmts(typed.tag(a)).append(a)
        elif isinstance(s, (A.If, A.For)):
            for lv in Level:
                r = _restrict(s, lv, typed)
                if r is not None:
                    out.stmts(lv).append(r)
        else:
            out.stmts(typed.tag(s)).append(s)
    return out


# -- emission ------------------------------------------------------------------


def _stan_decl(d: A.Decl) -> str:
    dims = "[" + ", ".join(P.expr(x) for x in d.type.dims) + "]" if d.type.dims else ""
    return f"{P.type_spec(d.type, old_style=True)} {d.name}{dims};"


def _rng_form(s: A.Stmt) -> A.Stmt:
    """Generative tildes become ``x = d_rng(args);`` assignments."""
    if isinstance(s, A.Tilde):
        return A.Assign(s.lhs, A.Call(f"{s.dist.name}_rng", s.dist.args), s.span)
    if isinstance(s, A.If):
        return replace(s, then=tuple(map(_rng_form, s.then)), orelse=tuple(map(_rng_form, s.orelse)))
    if isinstance(s, A.For):
        return replace(s, body=tuple(map(_rng_form, s.body)))
    return s


def emit(blocked: BlockedProgram) -> str:
    sections = [
        ("data", blocked.data, []),
        ("transformed data", blocked.tdata_decls, blocked.tdata),
        ("parameters", blocked.parameters, []),
        ("model", blocked.model_decls, blocked.model),
        ("generated quantities", blocked.genquant_decls, [_rng_form(s) for s in blocked.genquant]),
    ]
    out: list[str] = []
    for title, decls, stmts in sections:
        if not decls and not stmts:
            continue
        out.append(f"{title} {{")
        out += ["  " + _stan_decl(d) for d in decls]
        for s in stmts:
            out += P.stmt_lines(s, 1)
        out.append("}")
    return "\n".join(out) + ("\n" if out else "")
