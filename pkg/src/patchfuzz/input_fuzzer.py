"""Input-level fuzzing: hunt for counter-examples that refute pool patches."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional

from .executor import ExecBudget, execute, has_new_coverage
from .executor.coverage import CoverageMap
from .patch import DetourTable
from .patch_fuzzer import BASE_ENERGY, MAX_ENERGY, SKIP_NON_FAVORED, Removal, SliceBudget
from .testsuite import CRASHING, PASSING, counter_example

MAX_INPUT_LEN = 4096
HAVOC_MAX_STACK = 32
INTERESTING_BYTES = (0, 1, 127, 128, 255)
ARITH_MAX = 35

CRASH_FREEDOM = "CrashFreedom"
DIFFERENTIAL = "Differential"


# --- byte mutation ---------------------------------------------------------

def det_stage_size(n: int) -> int:
    """Number of deterministic mutants of an n-byte input."""
    bits = 8 * n
    return max(bits, 0) + max(bits - 1, 0) + max(bits - 3, 0) + n


def det_mutant(data: bytes, k: int) -> Optional[bytes]:
    """The k-th deterministic mutant: walking 1/2/4-bit flips, then +1 per byte.

    Bits are numbered MSB-first within each byte, so flipping bit 0 of
    0x00 gives 0x80.
    """
    bits = 8 * len(data)
    for width in (1, 2, 4):
        span = max(bits - width + 1, 0)
        if k < span:
            out = bytearray(data)
            for b in range(k, k + width):
                out[b >> 3] ^= 0x80 >> (b & 7)
            return bytes(out)
        k -= span
    if k < len(data):
        out = bytearray(data)
        out[k] = (out[k] + 1) & 0xFF
        return bytes(out)
    return None


def havoc_input(data: bytes, rng) -> bytes:
    """Stack 1..32 random byte-level operations."""
    buf = bytearray(data)
    for _ in range(rng.randint(1, HAVOC_MAX_STACK)):
        op = rng.randrange(8)
        if not buf and op < 7:
            op = 7
        if op == 0:
            bit = rng.randrange(8 * len(buf))
            buf[bit >> 3] ^= 0x80 >> (bit & 7)
        elif op == 1:
            buf[rng.randrange(len(buf))] = rng.randrange(256)
        elif op == 2:
            i = rng.randrange(len(buf))
            delta = rng.randint(1, ARITH_MAX)
            buf[i] = (buf[i] + (delta if rng.random() < 0.5 else -delta)) & 0xFF
        elif op == 3:
            buf[rng.randrange(len(buf))] = rng.choice(INTERESTING_BYTES)
        elif op == 4:
            i = rng.randrange(len(buf))
            n = rng.randint(1, min(32, len(buf) - i))
            j = rng.randrange(len(buf) + 1)
            buf[j:j] = buf[i:i + n]
        elif op == 5:
            i = rng.randrange(len(buf))
            n = rng.randint(1, min(32, len(buf) - i))
            del buf[i:i + n]
        elif op == 6:
            del buf[rng.randrange(len(buf)):]
        else:
            buf += bytes(rng.randrange(256) for _ in range(rng.randint(1, 16)))
        if len(buf) > MAX_INPUT_LEN:
            del buf[MAX_INPUT_LEN:]
    return bytes(buf)


def mutate_input(data: bytes, rng, stage: str = "havoc", cursor: int = 0) -> Optional[bytes]:
    """``stage='det'`` returns the cursor-th deterministic mutant (None when done)."""
    if stage == "det":
        return det_mutant(data, cursor)
    return havoc_input(data, rng)


# --- oracles -----------------------------------------------------------------

def classify_test(bytecode, data: bytes, budget: ExecBudget = ExecBudget()) -> str:
    return CRASHING if execute(bytecode, data, budget=budget).crashed else PASSING


def kill_reason(original, patched) -> Optional[str]:
    if patched.crashed:
        return CRASH_FREEDOM
    if not original.crashed and patched.output != original.output:
        return DIFFERENTIAL
    return None


@dataclass
class Kill:
    digest: str
    reason: str
    crash: Optional[str]


def is_implausible(bytecode, data: bytes, pool, budget: ExecBudget = ExecBudget(), original=None):
    """Run the original, then every pool patch; return ``(original_result, kills, executions)``."""
    executions = 0
    if original is None:
        original = execute(bytecode, data, budget=budget)
        executions += 1
    kills = []
    for member in pool:
        res = execute(bytecode, data, DetourTable([member.patch]), budget)
        executions += 1
        reason = kill_reason(original, res)
        if reason:
            kills.append(Kill(member.patch.digest, reason, res.crash.value if res.crash else None))
    return original, kills, executions


def filter_pool(state, test_ids) -> List[Removal]:
    """Re-run every pool patch on each new test; drop failures with a witness."""
    removals = []
    for tid in test_ids:
        test = state.oracle.tests[tid]
        for member in state.pool:
            res = execute(state.bytecode, test.input, DetourTable([member.patch]), state.exec_budget)
            state.executions += 1
            if not test.passes(res):
                reason = CRASH_FREEDOM if res.crashed else DIFFERENTIAL
                removal = Removal(member.patch.digest, tid, reason,
                                  res.crash.value if res.crash else None, state.iteration)
                state.pool.remove(member.patch.digest, removal)
                removals.append(removal)
    for member in state.pool:
        member.validated_size = state.oracle.size
    return removals


# --- queue -------------------------------------------------------------------

@dataclass
class TestQueueEntry:
    data: bytes
    name: str
    new_coverage: bool = True
    favored: bool = True
    det_done: bool = False
    det_cursor: int = 0

    __test__ = False


@dataclass
class GeneratedTest:
    """A persisted fuzzer input: queued for coverage and/or a counter-example."""
    name: str
    data: bytes
    classification: str
    iteration: int
    stmts: frozenset
    queued: bool = False
    test_id: Optional[int] = None
    killed: list = field(default_factory=list)


@dataclass
class CounterExample:
    test_id: int
    killed: List[Kill]


class InputFuzzer:
    def __init__(self, bytecode, rng, budget: ExecBudget):
        self.bytecode = bytecode
        self.rng = rng
        self.budget = budget
        self.entries: List[TestQueueEntry] = []
        self.cursor = 0
        self.seeded = set()
        self.global_map = CoverageMap()
        self.generated: List[GeneratedTest] = []
        self.by_input = {}
        self.counter_examples: List[CounterExample] = []
        self.executions = 0
        self.seconds = 0.0

    def select_next(self) -> TestQueueEntry:
        while True:
            entry = self.entries[self.cursor % len(self.entries)]
            self.cursor = (self.cursor + 1) % len(self.entries)
            if entry.favored or self.rng.random() >= SKIP_NON_FAVORED:
                return entry

    def record(self, data, original, iteration) -> GeneratedTest:
        g = self.by_input.get(data)
        if g is None:
            trace = execute(self.bytecode, data, budget=self.budget, trace=True).trace
            self.executions += 1
            g = GeneratedTest(f"g{len(self.generated):06d}", data,
                              CRASHING if original.crashed else PASSING, iteration, frozenset(trace))
            self.generated.append(g)
            self.by_input[data] = g
        return g


def input_energy(entry: TestQueueEntry) -> int:
    return min(BASE_ENERGY * (2 if entry.new_coverage else 1), MAX_ENERGY)


def fuzz_inputs(state, budget: SliceBudget, stop: Optional[Callable[[], bool]] = None) -> List[CounterExample]:
    """One input-fuzzing slice.  Returns counter-examples found."""
    fz: InputFuzzer = state.input_fuzzer
    found: List[CounterExample] = []
    if budget.is_zero() or not len(state.pool):
        return found
    t0 = time.monotonic()
    budget.start(state.executions)
    stop = stop or (lambda: False)

    def spent():
        return budget.exhausted(state.executions) or stop() or not len(state.pool)

    def run(data):
        data = data[:MAX_INPUT_LEN]
        original, kills, n = is_implausible(fz.bytecode, data, state.pool, fz.budget)
        state.executions += n
        fz.executions += n
        new = has_new_coverage(original.coverage, fz.global_map)
        if kills:
            name = f"ce{len(fz.counter_examples):05d}"
            test = counter_example(data, original, state.iteration, name)
            tid = state.oracle.add(test, original)
            before = state.executions
            removals = filter_pool(state, [tid])
            fz.executions += state.executions - before
            state.removals.extend(removals)
            ce = CounterExample(tid, kills)
            fz.counter_examples.append(ce)
            found.append(ce)
            g = fz.record(data, original, state.iteration)
            g.test_id = tid
            g.killed = [k.digest for k in kills]
        if new:
            fz.record(data, original, state.iteration).queued = True
            fz.entries.append(TestQueueEntry(data, f"q{len(fz.entries):06d}"))
        return new

    try:
        for test in list(state.oracle.tests):
            if test.input not in fz.seeded and not spent():
                fz.seeded.add(test.input)
                res = execute(fz.bytecode, test.input, budget=fz.budget)
                state.executions += 1
                fz.executions += 1
                has_new_coverage(res.coverage, fz.global_map)
                fz.entries.append(TestQueueEntry(test.input, f"seed:{test.name}"))
        while fz.entries and not spent():
            entry = fz.select_next()
            children = 0
            if not entry.det_done:
                while not spent():
                    data = det_mutant(entry.data, entry.det_cursor)
                    if data is None:
                        entry.det_done = True
                        break
                    entry.det_cursor += 1
                    children += run(data)
            for _ in range(input_energy(entry)):
                if spent():
                    break
                children += run(havoc_input(entry.data, fz.rng))
            entry.favored = children > 0
    finally:
        fz.seconds += time.monotonic() - t0
    return found
