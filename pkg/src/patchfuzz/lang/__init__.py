from .ast import (
    PATCHABLE, Assert, Assign, Binary, Call, Const, Decl, ExprStmt, FunctionDef,
    If, Index, Print, Program, Return, SourceLoc, Unary, Var, While, walk_stmts,
)
from .parser import ParseError, parse_expr, parse_program, parse_stmt
from .printer import format_expr, format_program, format_stmt
from .refactor import TEMP_PREFIX, is_temp, refactor_conditionals
from .semantics import CrashKind
from .validate import Finding, ValidationReport, validate


def enumerate_statements(program: Program) -> list:
    """All statement locations in pre-order (StmtId order)."""
    return [SourceLoc(s.sid, fn.name) for fn in program.functions for s in walk_stmts(fn.body)]


def load_program(path, refactor: bool = False) -> Program:
    with open(path, encoding="utf-8") as fh:
        program = parse_program(fh.read())
    return refactor_conditionals(program) if refactor else program


__all__ = [
    "PATCHABLE", "Assert", "Assign", "Binary", "Call", "Const", "CrashKind", "Decl",
    "ExprStmt", "Finding", "FunctionDef", "If", "Index", "ParseError", "Print", "Program",
    "Return", "SourceLoc", "TEMP_PREFIX", "Unary", "ValidationReport", "Var", "While",
    "enumerate_statements", "format_expr", "format_program", "format_stmt", "is_temp",
    "load_program", "parse_expr", "parse_program", "parse_stmt", "refactor_conditionals",
    "validate", "walk_stmts",
]
