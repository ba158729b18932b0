"""Campaign report and artifact directories."""
from __future__ import annotations

import json
import os

from .coevolution import rank_locations, rank_patches
from .input_fuzzer import CRASH_FREEDOM, DIFFERENTIAL
from .lang.printer import format_stmt
from .patch import serialize_patch

SCHEMA_VERSION = 1


def fix_locations(state) -> set:
    """Statement ids of every patch that ever entered the pool."""
    return {p.loc.stmt_id for p in state.pool.inserted.values()}


def reported_tests(state):
    """Generated tests that exercise a fix location."""
    locs = fix_locations(state)
    return [g for g in state.input_fuzzer.generated if g.stmts & locs]


def build_report(config, state) -> dict:
    ranked = rank_patches(state.pool, state.oracle, state.bytecode, state.exec_budget, state.original_results)
    locations = rank_locations(state.pool, state.trace)
    location_rank = None
    if config.known_fix_loc is not None:
        location_rank = next((r.rank for r in locations if r.loc.stmt_id == config.known_fix_loc), None)
    removed = state.pool.removed.values()
    tests = reported_tests(state)
    pf = state.patch_fuzzer
    rate = None
    if not config.exec_mode and pf.seconds > 0:
        rate = round(pf.executions / pf.seconds, 2)
    return {
        "schema_version": SCHEMA_VERSION,
        "plausible": [
            {
                "rank": r.rank,
                "stmt_id": r.patch.loc.stmt_id,
                "function": r.patch.loc.function,
                "patch": format_stmt(r.patch.stmt).strip(),
                "digest": r.patch.digest,
                "lineage": r.patch.lineage,
                "cf_distance": r.cf_distance,
            }
            for r in ranked
        ],
        "overfit_crash_count": sum(r.reason == CRASH_FREEDOM for r in removed),
        "overfit_diff_count": sum(r.reason == DIFFERENTIAL for r in removed),
        "pool_insertions": len(state.pool.inserted),
        "locations_total": len(state.trace),
        "location_rank": location_rank,
        "location_ranking": [
            {"stmt_id": r.loc.stmt_id, "plausible_count": r.plausible_count, "rank": r.rank}
            for r in locations
        ],
        "tests_crashing": sum(g.classification == "crashing" for g in tests),
        "tests_passing": sum(g.classification == "passing" for g in tests),
        "oracle_size": state.oracle.size,
        "iterations": state.iteration,
        "executions": state.executions,
        "patch_validations": pf.validations,
        "patch_execs_per_sec": rate,
        "compile_count": state.compiles,
        "seed": config.seed,
        "target": config.target,
        "budget": {"seconds": config.budget_seconds, "execs": config.budget_execs},
        "max_steps": config.max_steps,
        "program_hash": state.bytecode.source_hash,
    }


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def _write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def write_artifacts(out_dir, state, report: dict):
    """report.json, patches/{queue,pool}/, tests/ and log.jsonl under ``out_dir``."""
    queue_dir = os.path.join(out_dir, "patches", "queue")
    pool_dir = os.path.join(out_dir, "patches", "pool")
    tests_dir = os.path.join(out_dir, "tests")
    for d in (queue_dir, pool_dir, tests_dir):
        os.makedirs(d, exist_ok=True)

    rows = []
    for entry in state.patch_fuzzer.queue:
        with open(os.path.join(queue_dir, entry.patch.digest + ".fpz"), "wb") as fh:
            fh.write(serialize_patch(entry.patch))
        rows.append(entry.to_json())
    _write_jsonl(os.path.join(queue_dir, "index.jsonl"), rows)

    rows = []
    pool = state.pool
    for digest, patch in pool.inserted.items():
        with open(os.path.join(pool_dir, digest + ".fpz"), "wb") as fh:
            fh.write(serialize_patch(patch))
        removal = pool.removed.get(digest)
        rows.append({
            "digest": digest,
            "stmt_id": patch.loc.stmt_id,
            "patch": format_stmt(patch.stmt).strip(),
            "status": "plausible" if digest in pool else "killed",
            "injected": digest in pool.injected,
            "reason": removal.reason if removal else None,
            "crash": removal.crash if removal else None,
            "witness_test": removal.test_id if removal else None,
            "killed_iteration": removal.iteration if removal else None,
        })
    _write_jsonl(os.path.join(pool_dir, "index.jsonl"), rows)

    locs = fix_locations(state)
    rows = []
    for g in state.input_fuzzer.generated:
        with open(os.path.join(tests_dir, g.name + ".in"), "wb") as fh:
            fh.write(g.data)
        test = state.oracle.tests[g.test_id] if g.test_id is not None else None
        rows.append({
            "name": g.name,
            "classification": g.classification,
            "criterion": test.criterion if test else None,
            "test_id": g.test_id,
            "killed": g.killed,
            "iteration": g.iteration,
            "queued": g.queued,
            "exercises_fix_loc": bool(g.stmts & locs),
        })
    _write_jsonl(os.path.join(tests_dir, "index.jsonl"), rows)
    _write_jsonl(os.path.join(out_dir, "log.jsonl"), state.log)
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        fh.write(dumps(report))
