"""Exception hierarchy shared by every stage of the toolchain."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Span:
    """Half-open character range into the original source, plus 1-based line/col."""

    start: int
    end: int
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


class SlicError(Exception):
    """Base class. ``span`` points into the source when one is known."""

    exit_code = 1

    def __init__(self, message: str, span: Span | None = None, *, related: Span | None = None):
        super().__init__(message)
        self.message = message
        self.span = span
        self.related = related

    def __str__(self) -> str:
        where = f"{self.span}: " if self.span is not None else ""
        extra = f" (see {self.related})" if self.related is not None else ""
        return f"{where}{self.message}{extra}"


# -- static errors: exit code 2 ------------------------------------------------


class StaticError(SlicError):
    exit_code = 2


class LexError(StaticError):
    pass


class ParseError(StaticError):
    pass


class DuplicateDeclaration(StaticError):
    pass


class UseBeforeDeclaration(StaticError):
    pass


class BaseTypeError(StaticError):
    """int/real/bool mismatch, bad index, wrong arity and similar."""


class LevelError(StaticError):
    """Unsatisfiable level constraints."""

    def __init__(self, message: str, span: Span | None = None, *, chain: list[str] | None = None):
        super().__init__(message, span)
        self.chain = chain or []


class ShreddableError(StaticError):
    """A variable was mutated after being read at a strictly higher level."""


class NotEliminable(StaticError):
    pass


class SupportTooLarge(StaticError):
    pass


class IneligibleSite(StaticError):
    pass


class DiscreteParameterError(StaticError):
    """A discrete MODEL-level parameter survived into a blocked program."""


# -- runtime errors: exit code 1 -----------------------------------------------


class EvalError(SlicError):
    """Failure while executing a statement (bad index, bad distribution argument...)."""


class DistributionError(EvalError):
    pass


class DimensionError(EvalError):
    pass


class DataError(EvalError):
    pass


class InitializationError(SlicError):
    pass


class DiagnosticFailure(SlicError):
    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace
