"""Patch-level fuzzing: queue, power schedule, plausibility and interest."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

from .executor import ExecBudget, execute, has_new_coverage
from .executor.coverage import CoverageMap
from .mutation import deterministic_mutants, havoc_mutate
from .patch import DetourTable, Patch

BASE_ENERGY = 8
MAX_ENERGY = 128
SKIP_NON_FAVORED = 0.75


class EmptyQueue(LookupError):
    pass


@dataclass
class SliceBudget:
    """Execution and/or wall-clock allowance for one fuzzing slice."""
    max_execs: Optional[int] = None
    seconds: Optional[float] = None
    started_execs: int = 0
    started_at: float = field(default_factory=time.monotonic)

    def start(self, execs_now: int) -> "SliceBudget":
        self.started_execs = execs_now
        self.started_at = time.monotonic()
        return self

    def exhausted(self, execs_now: int) -> bool:
        if self.max_execs is not None and execs_now - self.started_execs >= self.max_execs:
            return True
        if self.seconds is not None and time.monotonic() - self.started_at >= self.seconds:
            return True
        return False

    def is_zero(self) -> bool:
        return (self.max_execs is not None and self.max_execs <= 0) or \
            (self.seconds is not None and self.seconds <= 0)


@dataclass
class Verdict:
    plausible: bool
    passed: frozenset
    failed_test: Optional[int]
    executions: int
    results: list

    @property
    def failed_index(self) -> Optional[int]:
        """Position of the first failure in schedule order."""
        return None if self.failed_test is None else self.executions - 1


def is_plausible(bytecode, patch: Patch, oracle, budget: ExecBudget = ExecBudget()) -> Verdict:
    """Run the oracle in failing-first order, stopping at the first failure."""
    detours = DetourTable([patch])
    passed = []
    results = []
    executions = 0
    for tid, test in oracle.schedule():
        res = execute(bytecode, test.input, detours, budget)
        executions += res.tests_executed
        results.append((tid, res))
        if not test.passes(res):
            return Verdict(False, frozenset(passed), tid, executions, results)
        passed.append(tid)
    return Verdict(True, frozenset(passed), None, executions, results)


def bitset_hex(ids) -> str:
    return format(sum(1 << i for i in ids), "x")


@dataclass
class PatchQueueEntry:
    patch: Patch
    passed_tests: frozenset
    coverage_digest: str
    is_plausible: bool
    new_coverage: bool
    oracle_size: int
    origin: str = "seed"
    parent: Optional[str] = None
    det_done: bool = False
    det_cursor: int = 0
    favored: bool = True
    _det: Optional[list] = field(default=None, repr=False)

    def to_json(self) -> dict:
        return {
            "digest": self.patch.digest,
            "stmt_id": self.patch.loc.stmt_id,
            "lineage": self.patch.lineage,
            "origin": self.origin,
            "parent": self.parent,
            "plausible": self.is_plausible,
            "new_coverage": self.new_coverage,
            "favored": self.favored,
            "det_done": self.det_done,
            "passed_tests": bitset_hex(self.passed_tests),
            "coverage_digest": self.coverage_digest,
        }


def energy(entry: PatchQueueEntry) -> int:
    e = BASE_ENERGY
    if entry.is_plausible:
        e *= 2
    if entry.new_coverage:
        e *= 2
    return min(e, MAX_ENERGY)


class PatchQueue:
    def __init__(self, rng):
        self.entries: List[PatchQueueEntry] = []
        self.by_digest: Dict[str, PatchQueueEntry] = {}
        self.cursor = 0
        self.rng = rng

    def append(self, entry: PatchQueueEntry):
        self.entries.append(entry)
        self.by_digest[entry.patch.digest] = entry

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def select_next_patch(queue: PatchQueue) -> PatchQueueEntry:
    """Round robin; non-favored entries are skipped with probability 0.75."""
    if not queue.entries:
        raise EmptyQueue("patch queue is empty")
    while True:
        entry = queue.entries[queue.cursor % len(queue.entries)]
        queue.cursor = (queue.cursor + 1) % len(queue.entries)
        if entry.favored or queue.rng.random() >= SKIP_NON_FAVORED:
            return entry


def is_interesting_patch(verdict: Verdict, new_coverage: bool, ever_passed, failing_ids) -> bool:
    """Plausible, or passes a failing test no queued patch passed, or new coverage."""
    if verdict.plausible:
        return True
    if (verdict.passed & frozenset(failing_ids)) - ever_passed:
        return True
    return new_coverage


@dataclass
class PoolMember:
    patch: Patch
    validated_size: int
    iteration: int


@dataclass
class Removal:
    digest: str
    test_id: int
    reason: str
    crash: Optional[str]
    iteration: int


class PlausiblePool:
    """Current plausible patches plus the full insertion/removal history."""

    def __init__(self):
        self.members: Dict[str, PoolMember] = {}
        self.inserted: Dict[str, Patch] = {}
        self.removed: Dict[str, Removal] = {}
        self.injected: set = set()

    def add(self, patch: Patch, oracle_size: int, iteration: int, injected: bool = False) -> bool:
        if patch.digest in self.members or patch.digest in self.removed:
            return False
        self.members[patch.digest] = PoolMember(patch, oracle_size, iteration)
        self.inserted.setdefault(patch.digest, patch)
        if injected:
            self.injected.add(patch.digest)
        return True

    def remove(self, digest: str, removal: Removal):
        del self.members[digest]
        self.removed[digest] = removal

    def patches(self) -> List[Patch]:
        return [m.patch for m in self.members.values()]

    def __len__(self):
        return len(self.members)

    def __contains__(self, digest):
        return digest in self.members

    def __iter__(self):
        return iter(list(self.members.values()))


class PatchFuzzer:
    """Mutable state of the patch-level fuzzer."""

    def __init__(self, bytecode, seeds, rng, budget: ExecBudget):
        self.bytecode = bytecode
        self.rng = rng
        self.budget = budget
        self.queue = PatchQueue(rng)
        self.pending_seeds = list(seeds)
        self.global_maps: Dict[int, CoverageMap] = {}
        self.ever_passed: frozenset = frozenset()
        self.evaluated: Dict[str, int] = {}
        self.validations = 0
        self.executions = 0
        self.seconds = 0.0

    def _observe(self, verdict: Verdict) -> tuple:
        new = False
        digests = []
        for tid, res in verdict.results:
            cov = res.base_coverage()
            gmap = self.global_maps.setdefault(tid, CoverageMap())
            if has_new_coverage(cov, gmap):
                new = True
            digests.append(cov.digest())
        return new, "-".join(digests)

    def evaluate(self, patch: Patch, oracle):
        """Validate once; returns (verdict, new_coverage, coverage_digest) or None if cached."""
        if self.evaluated.get(patch.digest) == oracle.size:
            return None
        self.evaluated[patch.digest] = oracle.size
        verdict = is_plausible(self.bytecode, patch, oracle, self.budget)
        self.validations += 1
        self.executions += verdict.executions
        new, cdig = self._observe(verdict)
        return verdict, new, cdig

    def enqueue(self, patch, verdict, new, cdig, oracle, origin, parent=None):
        entry = PatchQueueEntry(patch, verdict.passed, cdig, verdict.plausible, new, oracle.size,
                                origin, parent, favored=verdict.plausible or new or origin == "seed")
        self.queue.append(entry)
        self.ever_passed = self.ever_passed | (verdict.passed & frozenset(oracle.failing_ids()))
        return entry

    def refresh(self, entry: PatchQueueEntry, oracle):
        """Re-validate a queued entry after the oracle grew."""
        verdict = is_plausible(self.bytecode, entry.patch, oracle, self.budget)
        self.validations += 1
        self.executions += verdict.executions
        self.evaluated[entry.patch.digest] = oracle.size
        new, cdig = self._observe(verdict)
        entry.passed_tests = verdict.passed
        entry.is_plausible = verdict.plausible
        entry.coverage_digest = cdig
        entry.oracle_size = oracle.size
        return verdict


def fuzz_patches(state, budget: SliceBudget, stop: Optional[Callable[[], bool]] = None) -> List[Patch]:
    """One patch-fuzzing slice.  Returns patches newly added to the pool."""
    pf: PatchFuzzer = state.patch_fuzzer
    oracle, pool = state.oracle, state.pool
    added: List[Patch] = []
    if budget.is_zero():
        return added
    t0 = time.monotonic()
    budget.start(state.executions)
    stop = stop or (lambda: False)

    def spent():
        return budget.exhausted(state.executions) or stop()

    def handle(patch, origin, parent=None):
        before = pf.executions
        got = pf.evaluate(patch, oracle)
        state.executions += pf.executions - before
        if got is None:
            return None
        verdict, new, cdig = got
        if verdict.plausible and pool.add(patch, oracle.size, state.iteration):
            added.append(patch)
        if origin == "seed" or is_interesting_patch(verdict, new, pf.ever_passed, oracle.failing_ids()):
            if patch.digest not in pf.queue.by_digest:
                return pf.enqueue(patch, verdict, new, cdig, oracle, origin, parent)
        return None

    try:
        while pf.pending_seeds and not spent():
            handle(pf.pending_seeds.pop(0), "seed")
        idle = 0
        while pf.queue.entries and not spent():
            # every reachable mutant may already be cached; give up on the slice then
            if idle > 4 * len(pf.queue) + 16:
                break
            validations = pf.validations
            entry = select_next_patch(pf.queue)
            if entry.oracle_size != oracle.size:
                before = pf.executions
                verdict = pf.refresh(entry, oracle)
                state.executions += pf.executions - before
                if verdict.plausible and pool.add(entry.patch, oracle.size, state.iteration):
                    added.append(entry.patch)
                if spent():
                    break
            bindings = pf.bytecode.bindings[entry.patch.sid]
            children = 0
            if not entry.det_done:
                if entry._det is None:
                    entry._det = deterministic_mutants(entry.patch, bindings)
                while entry.det_cursor < len(entry._det) and not spent():
                    if handle(entry._det[entry.det_cursor], "mutant", entry.patch.digest):
                        children += 1
                    entry.det_cursor += 1
                if entry.det_cursor >= len(entry._det):
                    entry.det_done = True
                    entry._det = None
            for _ in range(energy(entry)):
                if spent():
                    break
                mutant = havoc_mutate(entry.patch, bindings, pf.rng)
                if mutant is entry.patch:
                    continue
                if handle(mutant, "mutant", entry.patch.digest):
                    children += 1
            entry.favored = entry.is_plausible or children > 0
            idle = idle + 1 if pf.validations == validations else 0
    finally:
        pf.seconds += time.monotonic() - t0
    return added
