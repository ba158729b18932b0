"""Stack VM with edge coverage, a step budget and statement detours.

A detour is installed the way a software breakpoint is: the entry
instruction of the patched statement is overwritten with DETOUR in a
private copy of the code.  When reached, the VM charges the statement's
step and coverage edge as usual, records one pseudo-block edge for the
patch, interprets the replacement statement against the live frame and
resumes at the statement's resume offset.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

from ..lang.ast import PATCHABLE, SourceLoc
from ..lang.semantics import MAX_ARRAY, CrashKind, input_value
from ..patch.interp import IOState, interpret_stmt, slot_map
from .compiler import (
    ABS, ADD, ALOAD, ASSERT, ASTORE, BOOL, CONST, DETOUR, DIV, EQ, EXIT_BLOCK, GE, GT, HALT,
    INPUT, JMP, JNZ, JZ, LE, LEN, LOAD, LT, MOD, MUL, NE, NEG, NEWARR, NOT, POP, PRINT, RET,
    STMT, STORE, SUB, Bytecode,
)
from .coverage import CoverageMap, block_id

DEFAULT_MAX_STEPS = 200_000

NORMAL = "Normal"
CRASH = "Crash"


class NotAFailingTest(Exception):
    pass


@dataclass(frozen=True)
class ExecBudget:
    max_steps: int = DEFAULT_MAX_STEPS

    def __post_init__(self):
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")


@dataclass(frozen=True, eq=False)
class ExecResult:
    outcome: str
    exit_value: Optional[int]
    crash: Optional[CrashKind]
    crash_stmt: Optional[int]
    output: bytes
    coverage: CoverageMap
    steps_used: int
    pseudo_counts: Dict[int, int] = field(default_factory=dict)
    tests_executed: int = 1
    trace: Optional[tuple] = None

    @property
    def crashed(self) -> bool:
        return self.outcome == CRASH

    def observable(self):
        """What two runs must agree on to count as equivalent."""
        return (self.outcome, self.exit_value, self.crash, self.crash_stmt, self.output)

    def base_coverage(self) -> CoverageMap:
        """Coverage with patch pseudo-block traversals taken out."""
        if not self.pseudo_counts:
            return self.coverage
        raw = dict(self.coverage.raw)
        for idx, n in self.pseudo_counts.items():
            left = raw.get(idx, 0) - n
            if left > 0:
                raw[idx] = left
            else:
                raw.pop(idx, None)
        return CoverageMap.from_raw(raw)

    def base_edges(self) -> frozenset:
        return self.base_coverage().edges()

    def describe(self) -> str:
        if self.crashed:
            return f"Crash({self.crash.value}) at stmt {self.crash_stmt}"
        return f"Normal({self.exit_value})"


def pseudo_block(sid: int, digest: str) -> int:
    return block_id("patch", sid, digest)


def _prepare(bytecode: Bytecode, detours):
    """Private code copy with DETOUR at each patched entry offset."""
    if not detours:
        return bytecode.code, None
    code = list(bytecode.code)
    table = {}
    for sid, stmt in detours.items():
        start, resume = bytecode.boundaries[sid]
        b = bytecode.bindings[sid]
        digest = getattr(detours, "digests", {}).get(sid) or repr(stmt)
        code[start] = (DETOUR, sid, bytecode.code[start][2])
        table[start] = (stmt, b, slot_map(b), pseudo_block(sid, digest), resume)
    return code, table


def execute(bytecode: Bytecode, data: bytes = b"", detours=None,
            budget: ExecBudget = ExecBudget(), trace: bool = False) -> ExecResult:
    """Run the entry function on ``data``.  Crashes are reported, not raised."""
    code, table = _prepare(bytecode, detours)
    width = bytecode.int_width
    lo, hi = bytecode.int_min, bytecode.int_max
    max_steps = budget.max_steps
    frame = [None] * max(bytecode.n_slots, 1)
    stack = []
    push, pop = stack.append, stack.pop
    out = []
    raw = {}
    pseudo = {}
    seen = [] if trace else None
    seen_set = set()
    pos = 0
    ndata = len(data)
    prev = 0
    steps = 0
    pc = 0
    sid = None
    crash = None
    exit_value = None

    while True:
        op, a, b = code[pc]
        pc += 1
        if op == STMT or op == DETOUR:
            steps += 1
            sid = a
            idx = ((prev >> 1) ^ b) & 0xFFFF
            raw[idx] = raw.get(idx, 0) + 1
            prev = b
            if trace and a not in seen_set:
                seen_set.add(a)
                seen.append(a)
            if steps >= max_steps:
                crash = CrashKind.STEP_LIMIT
                break
            if op == DETOUR:
                stmt, binds, slots, pb, resume = table[pc - 1]
                pidx = ((prev >> 1) ^ pb) & 0xFFFF
                raw[pidx] = raw.get(pidx, 0) + 1
                pseudo[pidx] = pseudo.get(pidx, 0) + 1
                io = IOState(data, width, pos, out)
                eff = interpret_stmt(stmt, binds, frame, io, width, slots)
                pos = io.pos
                if eff.crash is not None:
                    crash = eff.crash
                    break
                if eff.returned is not None:
                    exit_value = eff.returned
                    idx = ((prev >> 1) ^ EXIT_BLOCK) & 0xFFFF
                    raw[idx] = raw.get(idx, 0) + 1
                    break
                pc = resume
        elif op == LOAD:
            push(frame[a])
        elif op == CONST:
            push(a)
        elif op == STORE:
            frame[a] = pop()
        elif op == JZ:
            if not pop():
                pc = a
        elif op == JMP:
            pc = a
        elif op == ADD:
            r = pop()
            r = pop() + r
            if r < lo or r > hi:
                crash = CrashKind.INTEGER_OVERFLOW
                break
            push(r)
        elif op == SUB:
            r = pop()
            r = pop() - r
            if r < lo or r > hi:
                crash = CrashKind.INTEGER_OVERFLOW
                break
            push(r)
        elif op == LT:
            r = pop()
            push(1 if pop() < r else 0)
        elif op == LE:
            r = pop()
            push(1 if pop() <= r else 0)
        elif op == GT:
            r = pop()
            push(1 if pop() > r else 0)
        elif op == GE:
            r = pop()
            push(1 if pop() >= r else 0)
        elif op == EQ:
            r = pop()
            push(1 if pop() == r else 0)
        elif op == NE:
            r = pop()
            push(1 if pop() != r else 0)
        elif op == ALOAD:
            i = pop()
            arr = frame[a]
            if i < 0 or i >= len(arr):
                crash = CrashKind.OUT_OF_BOUNDS
                break
            push(arr[i])
        elif op == ASTORE:
            v = pop()
            i = pop()
            arr = frame[a]
            if i < 0 or i >= len(arr):
                crash = CrashKind.OUT_OF_BOUNDS
                break
            arr[i] = v
        elif op == INPUT:
            if pos < ndata:
                push(input_value(data[pos], width))
                pos += 1
            else:
                push(0)
        elif op == MUL:
            r = pop()
            r = pop() * r
            if r < lo or r > hi:
                crash = CrashKind.INTEGER_OVERFLOW
                break
            push(r)
        elif op == DIV or op == MOD:
            d = pop()
            n = pop()
            if d == 0:
                crash = CrashKind.DIV_BY_ZERO
                break
            if n == lo and d == -1:
                crash = CrashKind.INTEGER_OVERFLOW
                break
            q = abs(n) // abs(d)
            if (n < 0) != (d < 0):
                q = -q
            push(q if op == DIV else n - d * q)
        elif op == JNZ:
            if pop():
                pc = a
        elif op == NEG:
            r = -pop()
            if r > hi:
                crash = CrashKind.INTEGER_OVERFLOW
                break
            push(r)
        elif op == NOT:
            push(0 if pop() else 1)
        elif op == BOOL:
            push(1 if pop() else 0)
        elif op == ABS:
            r = abs(pop())
            if r > hi:
                crash = CrashKind.INTEGER_OVERFLOW
                break
            push(r)
        elif op == LEN:
            push(len(frame[a]))
        elif op == NEWARR:
            n = pop()
            if n < 0 or n > MAX_ARRAY:
                crash = CrashKind.OUT_OF_BOUNDS
                break
            frame[a] = [0] * n
        elif op == PRINT:
            out.append(b"%d\n" % pop())
        elif op == POP:
            pop()
        elif op == ASSERT:
            if not pop():
                crash = CrashKind.ASSERT_FAILURE
                break
        elif op == RET:
            exit_value = pop()
            idx = ((prev >> 1) ^ EXIT_BLOCK) & 0xFFFF
            raw[idx] = raw.get(idx, 0) + 1
            break
        elif op == HALT:
            exit_value = 0
            idx = ((prev >> 1) ^ EXIT_BLOCK) & 0xFFFF
            raw[idx] = raw.get(idx, 0) + 1
            break
        else:
            raise RuntimeError(f"bad opcode {op} at {pc - 1}")

    cov = CoverageMap.from_raw(raw, prev)
    if crash is not None:
        return ExecResult(CRASH, None, crash, sid, b"".join(out), cov, steps, pseudo,
                          trace=tuple(seen) if trace else None)
    return ExecResult(NORMAL, exit_value, None, None, b"".join(out), cov, steps, pseudo,
                      trace=tuple(seen) if trace else None)


def exploit_trace(bytecode: Bytecode, failing_input: bytes, budget: ExecBudget = ExecBudget()) -> list:
    """Patchable statements executed by a crashing run, in first-execution order."""
    data = getattr(failing_input, "input", failing_input)
    res = execute(bytecode, data, budget=budget, trace=True)
    if not res.crashed:
        raise NotAFailingTest("the test does not crash the unpatched program")
    program = bytecode.program
    return [SourceLoc(s, program.function_of(s)) for s in res.trace
            if isinstance(program.stmt(s), PATCHABLE)]

