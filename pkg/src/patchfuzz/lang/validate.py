"""Static checks: scoping, arity, scalar/array typing, literal ranges."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

from .ast import (
    INTRINSICS, Assert, Assign, Binary, Call, Const, Decl, ExprStmt, If, Index,
    Print, Program, Return, Unary, Var, While,
)

SCALAR = "int"
ARRAY = "array"


@dataclass(frozen=True)
class Finding:
    kind: str
    message: str
    stmt_id: Optional[int] = None


@dataclass
class ValidationReport:
    findings: List[Finding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.findings

    def kinds(self):
        return [f.kind for f in self.findings]

    def __bool__(self):
        return self.ok


def check_expr(expr, scope, int_min, int_max, sid=None, expect=SCALAR):
    """Return findings for one expression evaluated against ``scope``.

    ``scope`` maps names to SCALAR/ARRAY.  Also used on patch statements.
    """
    out = []

    def visit(e, want):
        if isinstance(e, Const):
            if not int_min <= e.value <= int_max:
                out.append(Finding("ConstantOutOfRange", f"literal {e.value} does not fit", sid))
        elif isinstance(e, Var):
            kind = scope.get(e.name)
            if kind is None:
                out.append(Finding("UndeclaredVariable", f"undeclared variable {e.name!r}", sid))
            elif kind != want:
                out.append(Finding("TypeMismatch", f"{e.name!r} is {kind}, expected {want}", sid))
        elif isinstance(e, Index):
            kind = scope.get(e.array)
            if kind is None:
                out.append(Finding("UndeclaredVariable", f"undeclared array {e.array!r}", sid))
            elif kind != ARRAY:
                out.append(Finding("TypeMismatch", f"{e.array!r} is not an array", sid))
            visit(e.index, SCALAR)
        elif isinstance(e, Unary):
            visit(e.operand, SCALAR)
        elif isinstance(e, Binary):
            visit(e.left, SCALAR)
            visit(e.right, SCALAR)
        elif isinstance(e, Call):
            arity = INTRINSICS.get(e.name)
            if arity is None:
                out.append(Finding("UnknownIntrinsic", f"unknown function {e.name!r}", sid))
                return
            if len(e.args) != arity:
                out.append(Finding("ArityError", f"{e.name} takes {arity} argument(s), got {len(e.args)}", sid))
                return
            if e.name == "len":
                arg = e.args[0]
                if not isinstance(arg, Var):
                    out.append(Finding("TypeMismatch", "len() expects an array name", sid))
                else:
                    visit(arg, ARRAY)
        if want == ARRAY and not isinstance(e, Var):
            out.append(Finding("TypeMismatch", "array expected", sid))

    visit(expr, expect)
    return out


def check_simple_stmt(stmt, scope, int_min, int_max):
    """Findings for a non-compound statement.  Does not mutate ``scope``."""
    sid = stmt.sid
    if isinstance(stmt, Assign):
        out = []
        t = stmt.target
        if isinstance(t, Var):
            kind = scope.get(t.name)
            if kind is None:
                out.append(Finding("UndeclaredVariable", f"undeclared variable {t.name!r}", sid))
            elif kind != SCALAR:
                out.append(Finding("TypeMismatch", f"cannot assign to array {t.name!r}", sid))
        else:
            out += check_expr(t, scope, int_min, int_max, sid)
        return out + check_expr(stmt.value, scope, int_min, int_max, sid)
    if isinstance(stmt, Decl):
        return check_expr(stmt.init, scope, int_min, int_max, sid)
    if isinstance(stmt, (Return, Print, ExprStmt)):
        return check_expr(stmt.value, scope, int_min, int_max, sid)
    if isinstance(stmt, Assert):
        return check_expr(stmt.cond, scope, int_min, int_max, sid)
    raise TypeError(f"not a simple statement: {stmt!r}")


def validate(program: Program) -> ValidationReport:
    """Report undeclared variables, arity errors, typing and entry problems."""
    report = ValidationReport()
    add = report.findings.extend
    lo, hi = program.int_min, program.int_max

    seen = set()
    for fn in program.functions:
        if fn.name in seen:
            add([Finding("DuplicateFunction", f"function {fn.name!r} defined twice")])
        seen.add(fn.name)
    entry = program.function(program.entry)
    if entry is None:
        add([Finding("MissingEntry", f"no entry function {program.entry!r}")])
    elif entry.params:
        add([Finding("ArityError", f"entry function {program.entry!r} must take no parameters")])

    def block(body, scopes):
        scopes = scopes + [{}]
        for stmt in body:
            flat = {}
            for s in scopes:
                flat.update(s)
            if isinstance(stmt, If):
                add(check_expr(stmt.cond, flat, lo, hi, stmt.sid))
                block(stmt.then, scopes)
                block(stmt.orelse, scopes)
            elif isinstance(stmt, While):
                add(check_expr(stmt.cond, flat, lo, hi, stmt.sid))
                block(stmt.body, scopes)
            else:
                add(check_simple_stmt(stmt, flat, lo, hi))
                if isinstance(stmt, Decl):
                    if any(stmt.name in s for s in scopes):
                        add([Finding("Redeclaration", f"{stmt.name!r} already declared", stmt.sid)])
                    scopes[-1][stmt.name] = ARRAY if stmt.is_array else SCALAR

    for fn in program.functions:
        if len(set(fn.params)) != len(fn.params):
            add([Finding("Redeclaration", f"duplicate parameter in {fn.name!r}")])
        block(fn.body, [{p: SCALAR for p in fn.params}])
    return report
