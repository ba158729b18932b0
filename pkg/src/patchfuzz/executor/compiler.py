"""Compile a Program to a flat stack bytecode, once per campaign.

Besides the instruction stream the compiler emits the two maps a detour
needs: statement boundaries (StmtId -> entry offset and resume offset) and
per-statement variable bindings (name -> frame slot), the analog of a
debugger's line table and variable-location info.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

from ..lang.ast import (
    PATCHABLE, Assert, Assign, Binary, Call, Const, Decl, ExprStmt, If, Index,
    Print, Program, Return, Unary, Var, While,
)
from ..lang.printer import format_program
from ..lang.validate import ARRAY, SCALAR, validate
from .coverage import block_id

# opcodes
(STMT, DETOUR, CONST, LOAD, STORE, NEWARR, ALOAD, ASTORE, LEN, INPUT,
 ADD, SUB, MUL, DIV, MOD, LT, LE, GT, GE, EQ, NE,
 NEG, NOT, ABS, BOOL, JMP, JZ, JNZ, PRINT, POP, ASSERT, RET, HALT) = range(33)

OPNAMES = ("STMT DETOUR CONST LOAD STORE NEWARR ALOAD ASTORE LEN INPUT ADD SUB MUL DIV MOD "
           "LT LE GT GE EQ NE NEG NOT ABS BOOL JMP JZ JNZ PRINT POP ASSERT RET HALT").split()

_BINOPS = {"+": ADD, "-": SUB, "*": MUL, "/": DIV, "%": MOD, "<": LT, "<=": LE,
           ">": GT, ">=": GE, "==": EQ, "!=": NE}
_UNOPS = {"-": NEG, "!": NOT, "abs": ABS}

EXIT_BLOCK = block_id("exit")

_compile_calls = 0


class CompileError(Exception):
    pass


@dataclass(frozen=True)
class StmtBindings:
    """Variables visible at one statement: name -> (slot, type)."""
    visible: Dict[str, Tuple[int, str]]
    declares: Optional[Tuple[str, int, str]] = None
    function: str = "main"
    int_width: int = 32

    @property
    def int_min(self):
        return -(1 << (self.int_width - 1))

    @property
    def int_max(self):
        return (1 << (self.int_width - 1)) - 1

    def slot(self, name):
        if self.declares and self.declares[0] == name:
            return self.declares[1]
        return self.visible[name][0]

    def scalars(self):
        return sorted(n for n, (_, t) in self.visible.items() if t == SCALAR)

    def types(self):
        return {n: t for n, (_, t) in self.visible.items()}


@dataclass(frozen=True, eq=False)
class Bytecode:
    code: Tuple[tuple, ...]
    boundaries: Dict[int, Tuple[int, int]]
    bindings: Dict[int, StmtBindings]
    block_ids: Dict[int, int]
    n_slots: int
    int_width: int
    source_hash: str
    program: Program = field(repr=False)
    patchable: frozenset = frozenset()

    @property
    def int_min(self):
        return -(1 << (self.int_width - 1))

    @property
    def int_max(self):
        return (1 << (self.int_width - 1)) - 1

    def encode(self) -> bytes:
        """Canonical byte encoding; equal programs give equal bytes."""
        doc = {
            "code": [list(i) for i in self.code],
            "boundaries": sorted([k, *v] for k, v in self.boundaries.items()),
            "bindings": sorted(
                [k, sorted([n, s, t] for n, (s, t) in b.visible.items()), list(b.declares or ()), b.function, b.int_width]
                for k, b in self.bindings.items()
            ),
            "n_slots": self.n_slots,
            "width": self.int_width,
            "source_hash": self.source_hash,
        }
        return json.dumps(doc, separators=(",", ":")).encode()

    def disassemble(self) -> str:
        starts = {off: sid for sid, (off, _) in self.boundaries.items()}
        lines = []
        for off, (op, a, b) in enumerate(self.code):
            mark = f"  ; stmt {starts[off]}" if off in starts else ""
            lines.append(f"{off:5d}  {OPNAMES[op]:<7} {'' if a is None else a} {'' if b is None else b}{mark}")
        return "\n".join(lines)


def compile_count() -> int:
    """Number of compile() invocations in this process."""
    return _compile_calls


def program_hash(program: Program) -> str:
    return hashlib.sha256(format_program(program).encode()).hexdigest()


class _FunctionCompiler:
    def __init__(self, fn, out, boundaries, bindings, block_ids, width):
        self.fn = fn
        self.width = width
        self.code = out
        self.boundaries = boundaries
        self.bindings = bindings
        self.block_ids = block_ids
        self.n_slots = 0
        self.scopes = [{}]
        for p in fn.params:
            self.declare(p, SCALAR)

    def declare(self, name, kind):
        slot = self.n_slots
        self.n_slots += 1
        self.scopes[-1][name] = (slot, kind)
        return slot

    def visible(self):
        flat = {}
        for s in self.scopes:
            flat.update(s)
        return flat

    def lookup(self, name):
        for s in reversed(self.scopes):
            if name in s:
                return s[name][0]
        raise CompileError(f"undeclared {name!r}")

    def emit(self, op, a=None, b=None):
        self.code.append([op, a, b])
        return len(self.code) - 1

    def patch_jump(self, at):
        self.code[at][1] = len(self.code)

    def expr(self, e):
        if isinstance(e, Const):
            self.emit(CONST, e.value)
        elif isinstance(e, Var):
            self.emit(LOAD, self.lookup(e.name))
        elif isinstance(e, Index):
            self.expr(e.index)
            self.emit(ALOAD, self.lookup(e.array))
        elif isinstance(e, Unary):
            self.expr(e.operand)
            self.emit(_UNOPS[e.op])
        elif isinstance(e, Binary):
            if e.op in ("&&", "||"):
                self.expr(e.left)
                short = self.emit(JZ if e.op == "&&" else JNZ, None)
                self.expr(e.right)
                self.emit(BOOL)
                done = self.emit(JMP, None)
                self.patch_jump(short)
                self.emit(CONST, 0 if e.op == "&&" else 1)
                self.patch_jump(done)
            else:
                self.expr(e.left)
                self.expr(e.right)
                self.emit(_BINOPS[e.op])
        elif isinstance(e, Call):
            if e.name == "input":
                self.emit(INPUT)
            elif e.name == "len":
                self.emit(LEN, self.lookup(e.args[0].name))
            else:
                raise CompileError(f"unknown intrinsic {e.name!r}")
        else:
            raise CompileError(f"bad expression {e!r}")

    def block(self, body):
        self.scopes.append({})
        for s in body:
            self.stmt(s)
        self.scopes.pop()

    def stmt(self, s):
        sid = s.sid
        bid = block_id(self.fn.name, sid)
        self.block_ids[sid] = bid
        visible = self.visible()
        start = self.emit(STMT, sid, bid)
        declares = None
        if isinstance(s, Assign):
            if isinstance(s.target, Var):
                self.expr(s.value)
                self.emit(STORE, self.lookup(s.target.name))
            else:
                self.expr(s.target.index)
                self.expr(s.value)
                self.emit(ASTORE, self.lookup(s.target.array))
        elif isinstance(s, Decl):
            self.expr(s.init)
            kind = ARRAY if s.is_array else SCALAR
            slot = self.declare(s.name, kind)
            declares = (s.name, slot, kind)
            self.emit(NEWARR if s.is_array else STORE, slot)
        elif isinstance(s, Print):
            self.expr(s.value)
            self.emit(PRINT)
        elif isinstance(s, ExprStmt):
            self.expr(s.value)
            self.emit(POP)
        elif isinstance(s, Assert):
            self.expr(s.cond)
            self.emit(ASSERT)
        elif isinstance(s, Return):
            self.expr(s.value)
            self.emit(RET)
        elif isinstance(s, If):
            self.expr(s.cond)
            to_else = self.emit(JZ, None)
            self.block(s.then)
            if s.orelse:
                to_end = self.emit(JMP, None)
                self.patch_jump(to_else)
                self.block(s.orelse)
                self.patch_jump(to_end)
            else:
                self.patch_jump(to_else)
        elif isinstance(s, While):
            self.expr(s.cond)
            to_end = self.emit(JZ, None)
            self.block(s.body)
            self.emit(JMP, start)
            self.patch_jump(to_end)
        else:
            raise CompileError(f"bad statement {s!r}")
        self.boundaries[sid] = (start, len(self.code))
        self.bindings[sid] = StmtBindings(visible, declares, self.fn.name, self.width)


def compile_program(program: Program) -> Bytecode:
    """Compile once.  Raises CompileError when the program does not validate."""
    global _compile_calls
    _compile_calls += 1
    report = validate(program)
    if not report.ok:
        raise CompileError("; ".join(f.message for f in report.findings))
    entry = program.function(program.entry)
    functions = [entry] + [f for f in program.functions if f.name != program.entry]
    code, boundaries, bindings, block_ids = [], {}, {}, {}
    n_slots = 0
    for fn in functions:
        fc = _FunctionCompiler(fn, code, boundaries, bindings, block_ids, program.int_width)
        fc.block(fn.body)
        fc.emit(HALT)
        if fn is entry:
            n_slots = fc.n_slots
    patchable = frozenset(sid for sid in boundaries if isinstance(program.stmt(sid), PATCHABLE))
    return Bytecode(
        code=tuple(tuple(i) for i in code),
        boundaries=boundaries,
        bindings=bindings,
        block_ids=block_ids,
        n_slots=n_slots,
        int_width=program.int_width,
        source_hash=program_hash(program),
        program=program,
        patchable=patchable,
    )
