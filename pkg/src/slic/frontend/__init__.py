from . import ast
from .check import TypeEnv, typecheck
from .parser import parse, parse_syntax
from .printer import pretty

__all__ = ["ast", "parse", "parse_syntax", "pretty", "typecheck", "TypeEnv"]
