"""Recursive-descent parser for ``.slic`` model files."""

from __future__ import annotations

from ..errors import ParseError, Span
from . import ast as A
from .lexer import Token, tokenize

LEVEL_WORDS = ("data", "model", "genquant")
BASE_TYPES = ("int", "real", "bool")

_BINARY_LEVELS = [
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/"),
]


def _join(a: Span, b: Span) -> Span:
    return Span(a.start, b.end, a.line, a.col)


class Parser:
    def __init__(self, source: str):
        self.source = source
        self.toks = tokenize(source)
        self.pos = 0

    # -- token helpers ------------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.text in texts

    def advance(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise ParseError(f"expected {text!r}, found {found!r}", self.tok.span)
        return self.advance()

    def ident(self) -> Token:
        t = self.tok
        if t.kind != "ident":
            raise ParseError(f"expected identifier, found {t.text or 'end of input'!r}", t.span)
        return self.advance()

    # -- program / statements -------------------------------------------------------

    def program(self) -> A.Program:
        stmts = []
        while self.tok.kind != "eof":
            stmts.append(self.statement(top=True))
        return A.Program(tuple(stmts))

    def statement(self, top: bool = False) -> A.Stmt:
        t = self.tok
        if t.kind == "kw" and t.text in LEVEL_WORDS + BASE_TYPES:
            if not top:
                raise ParseError("declarations are only allowed at the top level", t.span)
            return self.declaration()
        if self.at("if"):
            return self.if_stmt()
        if self.at("for"):
            return self.for_stmt()
        if self.at("target"):
            start = self.advance().span
            self.expect("+=")
            e = self.expr()
            end = self.expect(";").span
            return A.TargetPlus(e, _join(start, end))
        if self.at("{"):
            raise ParseError("bare blocks are not supported", t.span)
        lhs = self.postfix()
        if not isinstance(lhs, (A.Var, A.Index)):
            raise ParseError("expected an assignable name", t.span)
        if self.at("="):
            self.advance()
            rhs = self.expr()
            end = self.expect(";").span
            return A.Assign(lhs, rhs, _join(t.span, end))
        if self.at("~"):
            self.advance()
            dist = self.dist_call()
            end = self.expect(";").span
            return A.Tilde(lhs, dist, _join(t.span, end))
        raise ParseError(f"expected '=' or '~', found {self.tok.text or 'end of input'!r}", self.tok.span)

    def body(self) -> tuple[A.Stmt, ...]:
        if self.at("{"):
            self.advance()
            out = []
            while not self.at("}"):
                if self.tok.kind == "eof":
                    raise ParseError("unterminated block", self.tok.span)
                out.append(self.statement())
            self.advance()
            return tuple(out)
        return (self.statement(),)

    def if_stmt(self) -> A.If:
        start = self.expect("if").span
        self.expect("(")
        cond = self.expr()
        self.expect(")")
        then = self.body()
        orelse: tuple[A.Stmt, ...] = ()
        if self.at("else"):
            self.advance()
            orelse = self.body()
        return A.If(cond, then, orelse, _join(start, self.toks[self.pos - 1].span))

    def for_stmt(self) -> A.For:
        start = self.expect("for").span
        self.expect("(")
        var = self.ident().text
        self.expect("in")
        lo = self.expr()
        self.expect(":")
        hi = self.expr()
        self.expect(")")
        body = self.body()
        return A.For(var, lo, hi, body, _join(start, self.toks[self.pos - 1].span))

    def declaration(self) -> A.Decl:
        start = self.tok.span
        level = None
        if self.tok.text in LEVEL_WORDS:
            level = self.advance().text
        if not (self.tok.kind == "kw" and self.tok.text in BASE_TYPES):
            raise ParseError(f"expected a type, found {self.tok.text!r}", self.tok.span)
        base = self.advance().text
        lower = upper = None
        if self.at("<"):
            self.advance()
            while True:
                which = self.tok
                if not self.at("lower", "upper"):
                    raise ParseError("expected 'lower' or 'upper'", which.span)
                self.advance()
                self.expect("=")
                value = self.signed_number()
                if which.text == "lower":
                    if lower is not None:
                        raise ParseError("duplicate lower bound", which.span)
                    lower = value
                else:
                    if upper is not None:
                        raise ParseError("duplicate upper bound", which.span)
                    upper = value
                if self.at(","):
                    self.advance()
                    continue
                self.expect(">")
                break
        dims: tuple[A.Expr, ...] = ()
        if self.at("["):
            self.advance()
            dims_l = [self.expr()]
            while self.at(","):
                self.advance()
                dims_l.append(self.expr())
            self.expect("]")
            dims = tuple(dims_l)
        name_tok = self.ident()
        init = dist = None
        if self.at("="):
            self.advance()
            init = self.expr()
        elif self.at("~"):
            self.advance()
            dist = self.dist_call()
        end = self.expect(";").span
        if base == "int" and any(isinstance(b, float) for b in (lower, upper)):
            raise ParseError("int bounds must be integers", start)
        if lower is not None and upper is not None and not lower < upper:
            raise ParseError("lower bound must be below upper bound", start)
        tspec = A.TypeSpec(base, lower, upper, dims)
        return A.Decl(tspec, name_tok.text, level, init, dist, _join(start, end))

    def signed_number(self) -> int | float:
        neg = False
        if self.at("-"):
            self.advance()
            neg = True
        t = self.tok
        if t.kind == "int":
            v: int | float = int(t.text)
        elif t.kind == "real":
            v = float(t.text)
        else:
            raise ParseError("bounds must be numeric literals", t.span)
        self.advance()
        return -v if neg else v

    def dist_call(self) -> A.DistCall:
        t = self.ident()
        if t.text not in A.DISTRIBUTIONS:
            raise ParseError(f"unknown distribution {t.text!r}", t.span)
        self.expect("(")
        args = self.arg_list(")")
        end = self.expect(")").span
        want = A.DISTRIBUTIONS[t.text]
        if len(args) != want:
            raise ParseError(f"{t.text} takes {want} argument(s), got {len(args)}", t.span)
        return A.DistCall(t.text, tuple(args), _join(t.span, end))

    def arg_list(self, close: str, allow_bar: bool = False) -> list[A.Expr]:
        args: list[A.Expr] = []
        if self.at(close):
            return args
        args.append(self.expr())
        first = True
        while self.at(",") or (allow_bar and first and self.at("|")):
            self.advance()
            first = False
            args.append(self.expr())
        return args

    # -- expressions ---------------------------------------------------------------

    def expr(self) -> A.Expr:
        cond = self.binary(0)
        if self.at("?"):
            self.advance()
            then = self.expr()
            self.expect(":")
            orelse = self.expr()
            return A.Cond(cond, then, orelse, cond.span)
        return cond

    def binary(self, level: int) -> A.Expr:
        if level == len(_BINARY_LEVELS):
            return self.unary()
        left = self.binary(level + 1)
        while self.tok.kind == "op" and self.tok.text in _BINARY_LEVELS[level]:
            op = self.advance()
            right = self.binary(level + 1)
            left = A.Binary(op.text, left, right, op.span)
        return left

    def unary(self) -> A.Expr:
        if self.at("-", "!"):
            op = self.advance()
            if op.text == "-" and self.tok.kind in ("int", "real"):
                lit = self.primary()
                return type(lit)(-lit.value, op.span)
            operand = self.unary()
            return A.Unary(op.text, operand, op.span)
        return self.postfix()

    def postfix(self) -> A.Expr:
        e = self.primary()
        while self.at("["):
            br = self.advance()
            idx = [self.expr()]
            while self.at(","):
                self.advance()
                idx.append(self.expr())
            self.expect("]")
            for i in idx:
                e = A.Index(e, i, br.span)
        return e

    def primary(self) -> A.Expr:
        t = self.tok
        if t.kind == "int":
            self.advance()
            return A.IntLit(int(t.text), t.span)
        if t.kind == "real":
            self.advance()
            return A.RealLit(float(t.text), t.span)
        if self.at("true", "false"):
            self.advance()
            return A.BoolLit(t.text == "true", t.span)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if self.at("{"):
            self.advance()
            items = self.arg_list("}")
            if not items:
                raise ParseError("empty array literal", t.span)
            self.expect("}")
            return A.ArrayLit(tuple(items), t.span)
        if t.kind == "ident":
            self.advance()
            if self.at("("):
                if t.text in A.DISTRIBUTIONS:
                    raise ParseError(f"distribution {t.text!r} used as a function; write {A.density_function_name(t.text)}", t.span)
                if t.text not in A.FUNCTIONS and t.text not in A.DENSITY_FUNCTIONS:
                    raise ParseError(f"unknown function {t.text!r}", t.span)
                self.advance()
                args = self.arg_list(")", allow_bar=t.text in A.DENSITY_FUNCTIONS)
                self.expect(")")
                want = A.FUNCTIONS.get(t.text)
                if want is None:
                    want = A.DISTRIBUTIONS[A.DENSITY_FUNCTIONS[t.text]] + 1
                if len(args) != want:
                    raise ParseError(f"{t.text} takes {want} argument(s), got {len(args)}", t.span)
                return A.Call(t.text, tuple(args), t.span)
            return A.Var(t.text, t.span)
        raise ParseError(f"unexpected {t.text or 'end of input'!r}", t.span)


def parse_syntax(source: str) -> A.Program:
    """Parse without name resolution or base-type checking."""
    if source.startswith("﻿"):
        source = source[1:]
    return Parser(source).program()


def parse(source: str) -> A.Program:
    from .check import typecheck

    prog = parse_syntax(source)
    typecheck(prog)
    return prog
