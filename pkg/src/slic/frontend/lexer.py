from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import LexError, Span

KEYWORDS = frozenset({
    "int", "real", "bool", "data", "model", "genquant", "if", "else", "for", "in",
    "target", "true", "false", "lower", "upper",
})

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*|\#[^\n]*|/\*.*?\*/)
  | (?P<real>(?:\d+\.\d*|\.\d+)(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\+=|<=|>=|==|!=|&&|\|\||[-+*/<>=~;,:(){}\[\]!?|])
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "int" | "real" | "ident" | "kw" | "op" | "eof"
    text: str
    span: Span


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    n = len(source)
    while pos < n:
        if source.startswith("/*", pos) and source.find("*/", pos + 2) < 0:
            raise LexError("unterminated comment", Span(pos, n, line, pos - line_start + 1))
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise LexError(f"unexpected character {source[pos]!r}", Span(pos, pos + 1, line, pos - line_start + 1))
        kind = m.lastgroup
        text = m.group()
        span = Span(pos, m.end(), line, pos - line_start + 1)
        if kind not in ("ws", "comment"):
            if kind == "ident" and text in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, text, span))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    eof = Span(n, n, line, n - line_start + 1)
    tokens.append(Token("eof", "", eof))
    return tokens
