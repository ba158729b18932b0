"""Command-line harness: ``repair``, ``exec``, ``stmts`` and ``mkpatch``."""
from __future__ import annotations

import argparse
import os
import re
import sys

from .coevolution import DEFAULT_CAMPAIGN_STEPS, Config, NoFailingTest, UnreproducibleCrash, run_coevolution
from .executor import DEFAULT_MAX_STEPS, CompileError, ExecBudget, compile_program, execute
from .lang import ParseError, SourceLoc, enumerate_statements, format_stmt, load_program, parse_stmt
from .lang.ast import PATCHABLE
from .patch import DetourTable, FormatError, Patch, deserialize_patch, serialize_patch
from .patch.model import UnknownStmtId, UnpatchableLocation
from .report import write_artifacts
from .testsuite import AmbiguousCriterion, MissingExploit, load_test_suite

EXIT_OK, EXIT_ERROR, EXIT_EMPTY = 0, 1, 2
SEED_ENV = "RLANG_SEED"

_DURATION = re.compile(r"^\s*(\d+(?:\.\d*)?)\s*(ms|s|m|h)?\s*$")
_UNITS = {"ms": 0.001, "s": 1.0, "m": 60.0, "h": 3600.0, None: 1.0}


class UsageError(Exception):
    pass


def parse_duration(text: str) -> float:
    """``"120s"``, ``"2m"``, ``"500ms"`` or a bare number of seconds."""
    m = _DURATION.match(text)
    if not m:
        raise argparse.ArgumentTypeError(f"invalid duration {text!r}")
    return float(m.group(1)) * _UNITS[m.group(2)]


def _nonneg_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="patchfuzz", description="Fuzzing-based repair for RLang programs.")
    sub = ap.add_subparsers(dest="command", required=True)

    def program_args(p):
        p.add_argument("program", help="RLang source file")
        p.add_argument("--no-refactor", action="store_true",
                       help="keep if/while conditions inline instead of hoisting them into temporaries")

    r = sub.add_parser("repair", help="run a co-evolution campaign")
    program_args(r)
    r.add_argument("--tests", help="test-suite directory (must contain exploit.in)")
    r.add_argument("--budget", type=parse_duration, help="wall-clock budget, e.g. 120s")
    r.add_argument("--execs", type=_nonneg_int, help="execution budget (reproducible mode)")
    r.add_argument("--seed", type=int, default=0, help=f"RNG seed (overridden by ${SEED_ENV})")
    r.add_argument("--target", type=int, default=10, help="plausible pool target size")
    r.add_argument("--known-fix-loc", type=int, help="statement id of the developer fix, for ranking")
    r.add_argument("--max-steps", type=int, default=DEFAULT_CAMPAIGN_STEPS, help="per-run step limit")
    r.add_argument("--slice", type=parse_duration, help="wall-clock length of one fuzzing slice")
    r.add_argument("--slice-execs", type=int, help="executions per fuzzing slice")
    r.add_argument("--jobs", type=int, default=1, help="worker count (runs are merged deterministically)")
    r.add_argument("--out", default="patchfuzz-out", help="artifact directory")
    r.add_argument("--report", help="report path (default OUT/report.json)")

    e = sub.add_parser("exec", help="run one input, optionally with a patch")
    program_args(e)
    e.add_argument("--input", default="-", help="input file, '-' for stdin")
    e.add_argument("--patch", help="FlatPatch file to apply")
    e.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)

    s = sub.add_parser("stmts", help="list statement ids")
    program_args(s)

    m = sub.add_parser("mkpatch", help="encode a replacement statement as a FlatPatch file")
    program_args(m)
    m.add_argument("--stmt-id", type=int, required=True)
    m.add_argument("--stmt", required=True, help="replacement statement text")
    m.add_argument("-o", "--output", required=True)
    return ap


def _load(args):
    return load_program(args.program, refactor=not args.no_refactor)


def cmd_repair(args) -> int:
    if not args.tests:
        raise UsageError("--tests is required")
    if not os.path.isdir(args.tests):
        raise UsageError(f"--tests: directory not found: {args.tests}")
    if args.target < 1:
        raise UsageError("--target must be at least 1")
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    seed = args.seed
    if os.environ.get(SEED_ENV):
        try:
            seed = int(os.environ[SEED_ENV])
        except ValueError:
            raise UsageError(f"${SEED_ENV} must be an integer") from None
    budget_seconds = args.budget
    if budget_seconds is None and args.execs is None:
        budget_seconds = 120.0
    program = _load(args)
    tests = load_test_suite(args.tests)
    config = Config(budget_seconds=budget_seconds, budget_execs=args.execs, target=args.target,
                    seed=seed, max_steps=args.max_steps, known_fix_loc=args.known_fix_loc,
                    jobs=args.jobs)
    if args.slice is not None:
        config.slice_seconds = args.slice
    if args.slice_execs is not None:
        config.slice_execs = args.slice_execs
    report, state = run_coevolution(config, program, tests)
    write_artifacts(args.out, state, report)
    if args.report:
        from .report import dumps
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(dumps(report))
    n = len(report["plausible"])
    print(f"{n} plausible patch(es) after {report['iterations']} iteration(s), "
          f"{report['executions']} executions; report in {args.out}")
    for row in report["plausible"][:10]:
        print(f"  #{row['rank']} stmt {row['stmt_id']}: {row['patch']}  (cf_distance {row['cf_distance']})")
    return EXIT_OK if n else EXIT_EMPTY


def _read_input(path) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    with open(path, "rb") as fh:
        return fh.read()


def format_result(res) -> str:
    cov = res.base_coverage()
    lines = [
        f"outcome: {res.describe()}",
        f"output: {res.output!r}",
        f"steps: {res.steps_used}",
        f"edges: {len(cov.edges())}",
    ]
    return "\n".join(lines)


def cmd_exec(args) -> int:
    program = _load(args)
    bc = compile_program(program)
    detours = None
    if args.patch:
        with open(args.patch, "rb") as fh:
            patch = deserialize_patch(fh.read(), bc)
        detours = DetourTable([patch])
    res = execute(bc, _read_input(args.input), detours, ExecBudget(args.max_steps))
    print(format_result(res))
    return EXIT_OK


def cmd_stmts(args) -> int:
    program = _load(args)
    for loc in enumerate_statements(program):
        stmt = program.stmt(loc.stmt_id)
        text = format_stmt(stmt).strip().splitlines()[0]
        mark = "*" if isinstance(stmt, PATCHABLE) else " "
        print(f"{loc.stmt_id:4d} {mark} {loc.function}: {text}")
    return EXIT_OK


def cmd_mkpatch(args) -> int:
    program = _load(args)
    if not program.has_stmt(args.stmt_id):
        raise UsageError(f"--stmt-id: no statement {args.stmt_id}")
    try:
        stmt = parse_stmt(args.stmt, sid=args.stmt_id)
    except ParseError as exc:
        raise UsageError(f"--stmt: {exc}") from None
    loc = SourceLoc(args.stmt_id, program.function_of(args.stmt_id))
    patch = Patch(loc, stmt)
    with open(args.output, "wb") as fh:
        fh.write(serialize_patch(patch))
    print(f"{patch.digest} {args.output}")
    return EXIT_OK


COMMANDS = {"repair": cmd_repair, "exec": cmd_exec, "stmts": cmd_stmts, "mkpatch": cmd_mkpatch}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except (UsageError, FileNotFoundError) as exc:
        print(f"patchfuzz: error: {exc}", file=sys.stderr)
    except (ParseError, CompileError, FormatError, MissingExploit, AmbiguousCriterion,
            NoFailingTest, UnreproducibleCrash, UnknownStmtId, UnpatchableLocation, ValueError) as exc:
        print(f"patchfuzz: {type(exc).__name__}: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
