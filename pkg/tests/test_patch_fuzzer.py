import random

import pytest

from patchfuzz.coevolution import Config, init_state
from patchfuzz.executor import ExecBudget, compile_program, execute
from patchfuzz.lang import SourceLoc, parse_stmt
from patchfuzz.mutation import havoc_mutate
from patchfuzz.patch import DetourTable, Patch, default_seed_patches
from patchfuzz.patch_fuzzer import (
    EmptyQueue, PatchQueue, PatchQueueEntry, PlausiblePool, SliceBudget, bitset_hex, energy,
    fuzz_patches, is_interesting_patch, is_plausible, select_next_patch, Verdict,
)
from patchfuzz.testsuite import TestOracle, load_test_suite
from bsearch_oracle import bsearch_oracle, mid_sid, ref_passes
from conftest import corpus_path


def test_short_circuit_schedule(corpus):
    program = corpus["bsearch"]
    bc = compile_program(program)
    oracle = bsearch_oracle(program, bc)
    assert oracle.size == 5 and oracle.schedule()[0][0] == 0
    rng = random.Random(5)
    seeds = [Patch(SourceLoc(s), program.stmt(s)) for s in sorted(bc.patchable)]
    budget = ExecBudget(20_000)
    checked = exploit_failures = 0
    while checked < 1000:
        seed = rng.choice(seeds)
        patch = havoc_mutate(seed, bc.bindings[seed.sid], rng)
        verdict = is_plausible(bc, patch, oracle, budget)
        if verdict.plausible:
            continue
        order = [tid for tid, _ in oracle.schedule()]
        first = next(i for i, tid in enumerate(order) if not ref_passes(program, patch, oracle.tests[tid]))
        assert verdict.executions == 1 + first
        assert verdict.failed_test == order[first]
        if first == 0:
            assert verdict.executions == 1
            exploit_failures += 1
        checked += 1
    assert exploit_failures > 0


def test_paper_example_verdicts(corpus):
    program = corpus["bsearch"]
    bc = compile_program(program)
    sid = mid_sid(program)
    tests = load_test_suite(corpus_path("bsearch", ".tests"))
    oracle = TestOracle()
    oracle.add(tests[0], execute(bc, tests[0].input))
    seed = Patch(SourceLoc(sid), program.stmt(sid))
    v = is_plausible(bc, seed, oracle)
    assert not v.plausible and v.executions == 1
    assert is_plausible(bc, Patch(SourceLoc(sid), parse_stmt("let mid = lo + (hi - lo) / 2;", sid)), oracle).plausible
    assert is_plausible(bc, Patch(SourceLoc(sid), parse_stmt("let mid = 99;", sid)), oracle).plausible


def _entry(name, plausible=False, new=False):
    p = Patch(SourceLoc(0), parse_stmt(f"let x = {name};", 0))
    return PatchQueueEntry(p, frozenset(), "", plausible, new, 1, favored=plausible or new)


def test_energy_schedule():
    assert energy(_entry("1")) == 8
    assert energy(_entry("2", plausible=True)) == 16
    assert energy(_entry("3", new=True)) == 16
    assert energy(_entry("4", plausible=True, new=True)) == 32


def test_select_next_round_robin():
    q = PatchQueue(random.Random(0))
    with pytest.raises(EmptyQueue):
        select_next_patch(q)
    a, b = _entry("1", plausible=True), _entry("2", plausible=True)
    q.append(a)
    assert select_next_patch(q) is a and select_next_patch(q) is a
    q.append(b)
    picks = [select_next_patch(q) for _ in range(4)]
    assert picks.count(a) == picks.count(b) == 2


def test_non_favored_skipped_about_three_quarters():
    q = PatchQueue(random.Random(1))
    fav, cold = _entry("1", plausible=True), _entry("2")
    q.append(fav)
    q.append(cold)
    picks = [select_next_patch(q) for _ in range(20_000)]
    share = picks.count(cold) / len(picks)
    # cold is taken a quarter of the times it comes up: 0.25 / 1.25 of picks
    assert abs(share - 0.2) < 0.02


def test_interesting_rules():
    base = Verdict(False, frozenset({0}), 1, 2, [])
    assert is_interesting_patch(Verdict(True, frozenset({0, 1}), None, 2, []), False, frozenset(), [0])
    assert is_interesting_patch(base, False, frozenset(), [0])
    assert not is_interesting_patch(base, False, frozenset({0}), [0])
    assert is_interesting_patch(base, True, frozenset({0}), [0])
    assert bitset_hex({0, 3}) == "9"


def test_pool_history():
    pool = PlausiblePool()
    p = Patch(SourceLoc(0), parse_stmt("let x = 1;", 0))
    assert pool.add(p, 1, 0) and not pool.add(p, 1, 0)
    from patchfuzz.patch_fuzzer import Removal
    pool.remove(p.digest, Removal(p.digest, 1, "CrashFreedom", "DivByZero", 2))
    assert len(pool) == 0 and p.digest in pool.inserted
    assert not pool.add(p, 2, 3)


def _divzero_state(seed=0):
    from patchfuzz.lang import load_program
    program = load_program(corpus_path("divzero"), refactor=True)
    tests = load_test_suite(corpus_path("divzero", ".tests"))
    return init_state(Config(seed=seed, max_steps=5_000), program, tests)


def test_zero_budget_does_nothing():
    state = _divzero_state()
    assert fuzz_patches(state, SliceBudget(max_execs=0)) == []
    assert state.patch_fuzzer.validations == 0 and len(state.pool) == 0


def test_pool_additions_replay_as_plausible():
    state = _divzero_state()
    added = fuzz_patches(state, SliceBudget(max_execs=3_000))
    assert added, "divzero should be repairable within 3000 executions"
    for patch in added:
        member_size = state.pool.members[patch.digest].validated_size
        for tid in range(member_size):
            test = state.oracle.tests[tid]
            res = execute(state.bytecode, test.input, DetourTable([patch]), state.exec_budget)
            assert test.passes(res)


def test_queue_provenance_and_lineage():
    state = _divzero_state(3)
    fuzz_patches(state, SliceBudget(max_execs=3_000))
    q = state.patch_fuzzer.queue
    digests = {e.patch.digest for e in q}
    seeds = {p.digest for p in default_seed_patches(state.program, state.trace)}
    for e in q:
        if e.origin == "seed":
            assert e.patch.digest in seeds and e.patch.lineage == 0
        else:
            assert e.parent in digests and e.patch.lineage >= 1


def test_patch_fuzzing_is_deterministic():
    runs = []
    for _ in range(2):
        state = _divzero_state(9)
        fuzz_patches(state, SliceBudget(max_execs=2_000))
        runs.append(([e.patch.digest for e in state.patch_fuzzer.queue], list(state.pool.members)))
    assert runs[0] == runs[1]
