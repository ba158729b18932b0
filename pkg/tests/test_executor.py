import random

import pytest
from hypothesis import given, settings

from patchfuzz.executor import (
    CoverageMap, ExecBudget, bucket, compile_count, compile_program, execute, exploit_trace,
    has_new_coverage,
)
from patchfuzz.executor.compiler import CompileError
from patchfuzz.lang import parse_program
from patchfuzz.lang.semantics import CrashKind
from conftest import corpus_path
from reference import ref_run
from strategies import inputs, programs


def run(src, data=b"", steps=200_000):
    return execute(compile_program(parse_program(src)), data, budget=ExecBudget(steps))


def agree(p, data, steps=5_000):
    bc = compile_program(p)
    r = execute(bc, data, budget=ExecBudget(steps))
    q = ref_run(p, data, max_steps=steps)
    assert r.output == q.output
    assert (r.crash.value if r.crash else None) == q.crash
    assert r.exit_value == q.exit_value
    assert r.steps_used == q.steps
    assert r.crash_stmt == q.crash_stmt
    assert dict(r.coverage.raw) == q.edges


@settings(max_examples=300, deadline=None)
@given(programs(), inputs)
def test_vm_matches_reference_interpreter(p, data):
    agree(p, data)


@pytest.mark.parametrize("name", ["bsearch", "oob", "divzero", "sum16", "wrongcmp", "hang"])
def test_corpus_matches_reference(corpus, name):
    rng = random.Random(name)
    for _ in range(200):
        agree(corpus[name], bytes(rng.randrange(256) for _ in range(rng.randrange(16))))


@pytest.mark.parametrize("expr, width, out", [
    ("7 / 2", 32, b"3\n"),
    ("-7 / 2", 32, b"-3\n"),
    ("7 / -2", 32, b"-3\n"),
    ("-7 % 2", 32, b"-1\n"),
    ("7 % -2", 32, b"1\n"),
    ("127 + 0", 8, b"127\n"),
    ("(0 - 127 - 1) / 1", 8, b"-128\n"),
    ("1 && 5", 32, b"1\n"),
    ("0 || 0", 32, b"0\n"),
    ("!7", 32, b"0\n"),
    ("abs(-5)", 16, b"5\n"),
])
def test_arithmetic(expr, width, out):
    assert run(f"#width {width}\nfn main() {{ print({expr}); }}").output == out


@pytest.mark.parametrize("expr, width, kind", [
    ("127 + 1", 8, CrashKind.INTEGER_OVERFLOW),
    ("-128 - 1", 8, CrashKind.INTEGER_OVERFLOW),
    ("-(-128)", 8, CrashKind.INTEGER_OVERFLOW),
    ("abs(-128)", 8, CrashKind.INTEGER_OVERFLOW),
    ("-128 / -1", 8, CrashKind.INTEGER_OVERFLOW),
    ("-128 % -1", 8, CrashKind.INTEGER_OVERFLOW),
    ("-32768 / -1", 16, CrashKind.INTEGER_OVERFLOW),
    ("200 * 200", 16, CrashKind.INTEGER_OVERFLOW),
    ("65536 * 32768", 32, CrashKind.INTEGER_OVERFLOW),
    ("1 / 0", 32, CrashKind.DIV_BY_ZERO),
    ("1 % 0", 32, CrashKind.DIV_BY_ZERO),
])
def test_traps(expr, width, kind):
    res = run(f"#width {width}\nfn main() {{ print({expr}); }}")
    assert res.crashed and res.crash is kind and res.output == b""


def test_short_circuit_skips_trap():
    assert run("fn main() { print(0 && 1 / 0); print(1 || 1 / 0); }").output == b"0\n1\n"


def test_input_bytes():
    src8 = "#width 8\nfn main() { print(input()); print(input()); print(input()); }"
    assert execute(compile_program(parse_program(src8)), b"\xff\x05").output == b"-1\n5\n0\n"
    src32 = "fn main() { print(input()); }"
    assert execute(compile_program(parse_program(src32)), b"\xff").output == b"255\n"


def test_arrays():
    assert run("fn main() { let a[3]; a[2] = 7; print(a[2] + len(a)); }").output == b"10\n"
    assert run("fn main() { let a[3]; a[3] = 1; }").crash is CrashKind.OUT_OF_BOUNDS
    assert run("fn main() { let a[3]; print(a[-1]); }").crash is CrashKind.OUT_OF_BOUNDS
    assert run("fn main() { let a[0 - 1]; }").crash is CrashKind.OUT_OF_BOUNDS
    assert run("fn main() { let a[65537]; }").crash is CrashKind.OUT_OF_BOUNDS
    assert not run("fn main() { let a[65536]; }").crashed


def test_assert_and_return():
    res = run("fn main() { assert(1); assert(0); print(1); }")
    assert res.crash is CrashKind.ASSERT_FAILURE and res.crash_stmt == 1
    res = run("fn main() { print(2); return 5; print(3); }")
    assert res.exit_value == 5 and res.output == b"2\n"


def test_step_limit_is_exact():
    res = run("fn main() { while (1) { } }", steps=1000)
    assert res.crash is CrashKind.STEP_LIMIT and res.steps_used == 1000
    # three statements run to completion under a limit of four
    assert not run("fn main() { let x = 1; x = 2; print(x); }", steps=4).crashed
    assert run("fn main() { let x = 1; x = 2; print(x); }", steps=3).crashed


def test_bsearch_exploit_overflows_at_mid(corpus):
    with open(corpus_path("bsearch.tests/exploit", ".in"), "rb") as fh:
        data = fh.read()
    bc = compile_program(corpus["bsearch"])
    res = execute(bc, data)
    assert res.crash is CrashKind.INTEGER_OVERFLOW
    assert corpus["bsearch"].stmt(res.crash_stmt).name == "mid"
    trace = exploit_trace(bc, data)
    assert trace[0].stmt_id == 0 and res.crash_stmt in {loc.stmt_id for loc in trace}
    assert all(corpus["bsearch"].stmt(loc.stmt_id) is not None for loc in trace)


def test_compile_counter_and_errors():
    before = compile_count()
    compile_program(parse_program("fn main() { print(1); }"))
    assert compile_count() == before + 1
    with pytest.raises(CompileError):
        compile_program(parse_program("fn main() { print(x); }"))


def test_bytecode_encoding_is_deterministic():
    p = parse_program("fn main() { let x = input(); while (x < 5) { x = x + 1; } print(x); }")
    assert compile_program(p).encode() == compile_program(p).encode()
    assert "STMT" in compile_program(p).disassemble()


def test_bucket_classes():
    classes = [bucket(n) for n in (1, 2, 3, 4, 7, 8, 15, 16, 31, 32, 127, 128, 1000)]
    assert classes == sorted(classes)
    assert len(set(bucket(n) for n in (4, 5, 6, 7))) == 1
    assert bucket(3) != bucket(4)


def test_has_new_coverage_updates_global_map():
    res = run("fn main() { let x = 1; print(x); }")
    g = CoverageMap()
    assert has_new_coverage(res.coverage, g)
    assert not has_new_coverage(res.coverage, g)
    loop = run("fn main() { let i = 0; while (i < 9) { i = i + 1; } }")
    few = run("fn main() { let i = 0; while (i < 2) { i = i + 1; } }")
    g = CoverageMap()
    has_new_coverage(few.coverage, g)
    assert few.coverage.edges() == loop.coverage.edges()
    assert has_new_coverage(loop.coverage, g)  # same edges, new hit-count bucket
