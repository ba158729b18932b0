"""Co-evolution of the plausible-patch pool and the test pool."""
from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import List, Optional

from .executor import ExecBudget, compile_count, compile_program, execute, exploit_trace
from .input_fuzzer import InputFuzzer, fuzz_inputs
from .lang.ast import SourceLoc
from .patch import DetourTable, Patch, default_seed_patches
from .patch_fuzzer import PatchFuzzer, PlausiblePool, SliceBudget, fuzz_patches, is_plausible
from .testsuite import TestOracle

DEFAULT_TARGET = 10
DEFAULT_SLICE_SECONDS = 30.0
DEFAULT_SLICE_EXECS = 50_000
# Hanging candidates dominate campaign cost, so campaigns cut runs off far
# earlier than a single ``execute`` does.
DEFAULT_CAMPAIGN_STEPS = 5_000


class NoFailingTest(ValueError):
    pass


class UnreproducibleCrash(ValueError):
    pass


@dataclass
class Config:
    """Campaign settings.  Budgets may be wall time, executions, or both."""
    budget_seconds: Optional[float] = None
    budget_execs: Optional[int] = None
    target: int = DEFAULT_TARGET
    slice_seconds: float = DEFAULT_SLICE_SECONDS
    slice_execs: int = DEFAULT_SLICE_EXECS
    seed: int = 0
    max_steps: int = DEFAULT_CAMPAIGN_STEPS
    int_width: Optional[int] = None
    report_path: Optional[str] = None
    known_fix_loc: Optional[int] = None
    jobs: int = 1

    def __post_init__(self):
        if self.target < 1:
            raise ValueError("target must be at least 1")
        if self.slice_seconds <= 0 or self.slice_execs <= 0:
            raise ValueError("slices must be positive")

    @property
    def exec_mode(self) -> bool:
        """Pure execution-count budgets make campaigns reproducible."""
        return self.budget_seconds is None

    def target_for(self, state) -> int:
        """Hook for a dynamic target; the default is static."""
        return self.target


@dataclass
class RankedPatch:
    patch: Patch
    cf_distance: int
    rank: int


@dataclass
class FixLocationRank:
    loc: SourceLoc
    plausible_count: int
    rank: int


@dataclass
class RepairState:
    program: object
    bytecode: object
    oracle: TestOracle
    pool: PlausiblePool
    patch_fuzzer: PatchFuzzer
    input_fuzzer: InputFuzzer
    exec_budget: ExecBudget
    trace: List[SourceLoc]
    seed: int
    executions: int = 0
    iteration: int = 0
    log: List[dict] = field(default_factory=list)
    removals: list = field(default_factory=list)
    compiles: int = 0
    original_results: dict = field(default_factory=dict)

    def original_result(self, tid):
        res = self.original_results.get(tid)
        if res is None:
            res = execute(self.bytecode, self.oracle.tests[tid].input, budget=self.exec_budget)
            self.original_results[tid] = res
        return res


def init_state(config: Config, program, user_tests) -> RepairState:
    """Step 1: compile once, check the exploit, seed the patch queue."""
    before = compile_count()
    bytecode = compile_program(program)
    budget = ExecBudget(config.max_steps)
    oracle = TestOracle()
    originals = {}
    for t in user_tests:
        res = execute(bytecode, t.input, budget=budget)
        originals[oracle.add(t, res)] = res
    if not oracle.failing_ids():
        raise NoFailingTest("no user test fails on the unpatched program")
    if 0 not in oracle.failing_ids() or not originals[0].crashed:
        raise UnreproducibleCrash(f"exploit test {user_tests[0].name!r} does not crash the program")
    trace = exploit_trace(bytecode, user_tests[0].input, budget)
    seeds = default_seed_patches(program, trace)
    rng = random.Random(config.seed)
    state = RepairState(
        program=program,
        bytecode=bytecode,
        oracle=oracle,
        pool=PlausiblePool(),
        patch_fuzzer=PatchFuzzer(bytecode, seeds, random.Random(rng.getrandbits(64)), budget),
        input_fuzzer=InputFuzzer(bytecode, random.Random(rng.getrandbits(64)), budget),
        exec_budget=budget,
        trace=trace,
        seed=config.seed,
        executions=len(user_tests) + 1,
        original_results=originals,
    )
    state.compiles = compile_count() - before
    return state


def inject_patch(state: RepairState, patch: Patch) -> bool:
    """Place a patch into the pool if it passes the current oracle."""
    verdict = is_plausible(state.bytecode, patch, state.oracle, state.exec_budget)
    state.executions += verdict.executions
    if not verdict.plausible:
        return False
    return state.pool.add(patch, state.oracle.size, state.iteration, injected=True)


def _log(state, phase, reason, pool_before, oracle_before, execs_before, t0, capped, extra=None):
    seconds = time.monotonic() - t0
    removed = [r for r in state.removals if r.iteration == state.iteration]
    entry = {
        "iteration": state.iteration,
        "phase": phase,
        "reason": reason,
        "pool_before": pool_before,
        "pool_after": len(state.pool),
        "oracle_before": oracle_before,
        "oracle_size": state.oracle.size,
        "kills_crash": sum(r.reason == "CrashFreedom" for r in removed),
        "kills_diff": sum(r.reason == "Differential" for r in removed),
        "execs": state.executions - execs_before,
        "capped": capped,
        "seconds": round(seconds, 3),
    }
    entry.update(extra or {})
    state.log.append(entry)
    return entry


def run_phases(config: Config, state: RepairState, deadline: Optional[float] = None):
    """Step 2/3 alternation until the campaign budget runs out."""
    def remaining_execs():
        if config.budget_execs is None:
            return None
        return config.budget_execs - state.executions

    def out_of_budget():
        r = remaining_execs()
        if r is not None and r <= 0:
            return True
        return deadline is not None and time.monotonic() >= deadline

    def slice_budget():
        execs = config.slice_execs if config.exec_mode else None
        r = remaining_execs()
        if r is not None:
            execs = r if execs is None else min(execs, r)
        seconds = None
        if deadline is not None:
            seconds = min(config.slice_seconds, max(deadline - time.monotonic(), 0.0))
        return SliceBudget(execs, seconds)

    last_capped_patch = False
    idle = 0
    while not out_of_budget():
        target = config.target_for(state)
        state.iteration += 1
        pool0, oracle0, execs0, t0 = len(state.pool), state.oracle.size, state.executions, time.monotonic()
        if len(state.pool) < target and not (last_capped_patch and len(state.pool)):
            validations0 = state.patch_fuzzer.validations
            fuzz_patches(state, slice_budget(), stop=lambda: len(state.pool) >= target)
            capped = len(state.pool) < target
            secs = time.monotonic() - t0
            rate = None
            if not config.exec_mode and secs > 0:
                rate = round((state.executions - execs0) / secs, 2)
            _log(state, "patch", "target", pool0, oracle0, execs0, t0, capped,
                 {"validations": state.patch_fuzzer.validations - validations0, "patch_execs_per_sec": rate})
            last_capped_patch = capped
        else:
            # after a capped patch slice the input fuzzer gets a turn even below target
            reason = "target" if len(state.pool) >= target else "starvation"
            stop = (lambda: len(state.pool) < target) if reason == "target" else None
            fuzz_inputs(state, slice_budget(), stop=stop)
            _log(state, "input", reason, pool0, oracle0, execs0, t0, len(state.pool) >= target)
            last_capped_patch = False
        idle = idle + 1 if state.executions == execs0 else 0
        if idle >= 3:
            break


def run_coevolution(config: Config, program, user_tests, inject: Optional[List[Patch]] = None):
    """Full campaign; returns ``(report, state)``."""
    from .report import build_report
    t_start = time.monotonic()
    deadline = None if config.budget_seconds is None else t_start + config.budget_seconds
    state = init_state(config, program, user_tests)
    for p in inject or ():
        inject_patch(state, p)
    zero = (config.budget_seconds is not None and config.budget_seconds <= 0) or \
        (config.budget_execs is not None and config.budget_execs <= 0)
    if not zero:
        run_phases(config, state, deadline)
    return build_report(config, state), state


def rank_patches(pool, oracle, bytecode, budget: ExecBudget = ExecBudget(), originals=None) -> List[RankedPatch]:
    """Ascending control-flow distance to the original over all oracle tests."""
    originals = originals if originals is not None else {}
    base = {}
    for tid, test in enumerate(oracle.tests):
        res = originals.get(tid) or execute(bytecode, test.input, budget=budget)
        base[tid] = res.coverage.edges()
    scored = []
    for member in pool:
        patch = getattr(member, "patch", member)
        detours = DetourTable([patch])
        d = 0
        for tid, test in enumerate(oracle.tests):
            res = execute(bytecode, test.input, detours, budget)
            d += len(base[tid] ^ res.base_edges())
        scored.append((d, patch.lineage, patch.digest, patch))
    scored.sort(key=lambda s: s[:3])
    return [RankedPatch(p, d, i + 1) for i, (d, _, _, p) in enumerate(scored)]


def rank_locations(pool, trace) -> List[FixLocationRank]:
    """Locations by plausible-patch count, ties and zero counts in trace order."""
    counts = {}
    for member in pool:
        patch = getattr(member, "patch", member)
        counts[patch.loc.stmt_id] = counts.get(patch.loc.stmt_id, 0) + 1
    order = {loc.stmt_id: i for i, loc in enumerate(trace)}
    locs = sorted(trace, key=lambda loc: (-counts.get(loc.stmt_id, 0), order[loc.stmt_id]))
    return [FixLocationRank(loc, counts.get(loc.stmt_id, 0), i + 1) for i, loc in enumerate(locs)]
