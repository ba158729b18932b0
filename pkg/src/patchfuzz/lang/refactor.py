"""Conditional extraction: hoist If/While conditions into assignments.

``if (c) {...}``  becomes ``let __cf_k = c; if (__cf_k) {...}`` and
``while (c) {B}`` becomes ``let __cf_k = c; while (__cf_k) {B; __cf_k = c;}``,
which turns every condition into a patchable assignment.
"""
from __future__ import annotations

import re

from .ast import Assign, Decl, FunctionDef, If, Program, Var, While, walk_stmts
from .parser import renumber

TEMP_PREFIX = "__cf_"
_TEMP_RE = re.compile(r"__cf_(\d+)$")


def is_temp(name: str) -> bool:
    return name.startswith(TEMP_PREFIX)


def refactor_conditionals(program: Program) -> Program:
    used = [int(m.group(1)) for fn in program.functions for s in walk_stmts(fn.body)
            if isinstance(s, Decl) and (m := _TEMP_RE.match(s.name))]
    counter = iter(range(max(used, default=-1) + 1, 1 << 30))

    def block(body):
        out = []
        for stmt in body:
            if isinstance(stmt, If):
                then, orelse = block(stmt.then), block(stmt.orelse)
                if isinstance(stmt.cond, Var):
                    out.append(If(stmt.sid, stmt.cond, then, orelse))
                    continue
                tmp = f"{TEMP_PREFIX}{next(counter)}"
                out.append(Decl(-1, tmp, stmt.cond))
                out.append(If(-1, Var(tmp), then, orelse))
            elif isinstance(stmt, While):
                body_ = block(stmt.body)
                if isinstance(stmt.cond, Var):
                    out.append(While(stmt.sid, stmt.cond, body_))
                    continue
                tmp = f"{TEMP_PREFIX}{next(counter)}"
                out.append(Decl(-1, tmp, stmt.cond))
                out.append(While(-1, Var(tmp), body_ + (Assign(-1, Var(tmp), stmt.cond),)))
            else:
                out.append(stmt)
        return tuple(out)

    functions = tuple(FunctionDef(fn.name, fn.params, block(fn.body)) for fn in program.functions)
    return renumber(Program(functions, program.entry, program.int_width))
