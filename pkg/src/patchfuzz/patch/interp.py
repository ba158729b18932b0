"""Patch interpreter: a recursive AST evaluator over the live VM frame.

Expressions are evaluated as rvalues; assignment targets as lvalues
(a frame slot, or an array plus index).  Variable names are resolved
through the statement's bindings, mirroring how a debugger resolves
source variables through location info.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

from ..lang.ast import Assign, Binary, Call, Const, Decl, ExprStmt, Index, Print, Return, Unary, Var
from ..lang.semantics import MAX_ARRAY, CrashKind, Trap, div_trunc, input_value, mod_trunc


class IOState:
    """Input cursor and output buffer shared with the running VM."""

    __slots__ = ("data", "pos", "out", "width")

    def __init__(self, data: bytes = b"", width: int = 32, pos: int = 0, out=None):
        self.data = data
        self.pos = pos
        self.out = [] if out is None else out
        self.width = width

    def read(self) -> int:
        if self.pos >= len(self.data):
            return 0
        b = self.data[self.pos]
        self.pos += 1
        return input_value(b, self.width)


@dataclass
class StmtEffect:
    """Observable result of interpreting one statement."""
    writes: List[tuple] = field(default_factory=list)  # (name, index or None, value)
    crash: Optional[CrashKind] = None
    returned: Optional[int] = None

    @property
    def crashed(self) -> bool:
        return self.crash is not None


def _check(v, lo, hi):
    if v < lo or v > hi:
        raise Trap(CrashKind.INTEGER_OVERFLOW)
    return v


def eval_expr(e, slots, frame, io, lo, hi):
    """Evaluate ``e``; ``slots`` maps names to frame slots."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return frame[slots[e.name]]
    if isinstance(e, Binary):
        op = e.op
        if op == "&&":
            if not eval_expr(e.left, slots, frame, io, lo, hi):
                return 0
            return 1 if eval_expr(e.right, slots, frame, io, lo, hi) else 0
        if op == "||":
            if eval_expr(e.left, slots, frame, io, lo, hi):
                return 1
            return 1 if eval_expr(e.right, slots, frame, io, lo, hi) else 0
        a = eval_expr(e.left, slots, frame, io, lo, hi)
        b = eval_expr(e.right, slots, frame, io, lo, hi)
        if op == "+":
            return _check(a + b, lo, hi)
        if op == "-":
            return _check(a - b, lo, hi)
        if op == "*":
            return _check(a * b, lo, hi)
        if op == "/":
            if b == 0:
                raise Trap(CrashKind.DIV_BY_ZERO)
            return _check(div_trunc(a, b), lo, hi)
        if op == "%":
            if b == 0:
                raise Trap(CrashKind.DIV_BY_ZERO)
            if a == lo and b == -1:
                raise Trap(CrashKind.INTEGER_OVERFLOW)
            return mod_trunc(a, b)
        if op == "<":
            return int(a < b)
        if op == "<=":
            return int(a <= b)
        if op == ">":
            return int(a > b)
        if op == ">=":
            return int(a >= b)
        if op == "==":
            return int(a == b)
        if op == "!=":
            return int(a != b)
        raise ValueError(f"unknown operator {op!r}")
    if isinstance(e, Index):
        i = eval_expr(e.index, slots, frame, io, lo, hi)
        arr = frame[slots[e.array]]
        if i < 0 or i >= len(arr):
            raise Trap(CrashKind.OUT_OF_BOUNDS)
        return arr[i]
    if isinstance(e, Unary):
        v = eval_expr(e.operand, slots, frame, io, lo, hi)
        if e.op == "-":
            return _check(-v, lo, hi)
        if e.op == "!":
            return int(v == 0)
        if e.op == "abs":
            return _check(abs(v), lo, hi)
        raise ValueError(f"unknown unary {e.op!r}")
    if isinstance(e, Call):
        if e.name == "input":
            return io.read()
        if e.name == "len":
            return len(frame[slots[e.args[0].name]])
    raise ValueError(f"cannot evaluate {e!r}")


def slot_map(bindings) -> dict:
    slots = {n: s for n, (s, _) in bindings.visible.items()}
    if bindings.declares:
        slots[bindings.declares[0]] = bindings.declares[1]
    return slots


def interpret_stmt(stmt, bindings, frame, io: Optional[IOState] = None, width: int = 32,
                   slots: Optional[dict] = None) -> StmtEffect:
    """Interpret a simple statement in place on ``frame``.

    Crashes (overflow, out of bounds, division by zero) are returned in the
    effect rather than raised.  Printed values are appended to ``io.out``.
    """
    io = io if io is not None else IOState(width=width)
    slots = slots if slots is not None else slot_map(bindings)
    lo, hi = -(1 << (width - 1)), (1 << (width - 1)) - 1
    effect = StmtEffect()
    try:
        if isinstance(stmt, Assign):
            t = stmt.target
            if isinstance(t, Var):
                v = eval_expr(stmt.value, slots, frame, io, lo, hi)
                frame[slots[t.name]] = v
                effect.writes.append((t.name, None, v))
            else:
                i = eval_expr(t.index, slots, frame, io, lo, hi)
                v = eval_expr(stmt.value, slots, frame, io, lo, hi)
                arr = frame[slots[t.array]]
                if i < 0 or i >= len(arr):
                    raise Trap(CrashKind.OUT_OF_BOUNDS)
                arr[i] = v
                effect.writes.append((t.array, i, v))
        elif isinstance(stmt, Decl):
            v = eval_expr(stmt.init, slots, frame, io, lo, hi)
            if stmt.is_array:
                if v < 0 or v > MAX_ARRAY:
                    raise Trap(CrashKind.OUT_OF_BOUNDS)
                frame[slots[stmt.name]] = [0] * v
            else:
                frame[slots[stmt.name]] = v
            effect.writes.append((stmt.name, None, v))
        elif isinstance(stmt, Print):
            v = eval_expr(stmt.value, slots, frame, io, lo, hi)
            io.out.append(b"%d\n" % v)
        elif isinstance(stmt, ExprStmt):
            eval_expr(stmt.value, slots, frame, io, lo, hi)
        elif isinstance(stmt, Return):
            effect.returned = eval_expr(stmt.value, slots, frame, io, lo, hi)
        else:
            raise TypeError(f"cannot interpret {type(stmt).__name__}")
    except Trap as trap:
        effect.crash = trap.kind
    return effect
