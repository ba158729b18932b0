import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from patchfuzz.executor import ExecBudget, compile_program, execute
from patchfuzz.lang import SourceLoc, parse_program, parse_stmt
from patchfuzz.lang.semantics import CrashKind
from patchfuzz.patch import (
    DetourTable, DuplicateDetour, FormatError, Patch, UnknownStmtId, UnpatchableLocation,
    build_detours, default_seed_patches, deserialize_patch, flat_digest, interpret_stmt,
    is_well_bounded, serialize_patch,
)
from patchfuzz.patch import flat
from patchfuzz.patch.interp import IOState
from strategies import ast_stmts

SRC = """#width 8
fn main() {
    let x = input();
    let y = input();
    let a[4];
    a[1] = x;
    let z = x + y;
    print(z);
    return 0;
}
"""


@pytest.fixture(scope="module")
def bc():
    return compile_program(parse_program(SRC))


def mk(sid, text):
    return Patch(SourceLoc(sid), parse_stmt(text, sid))


def test_patch_replaces_statement(bc):
    res = execute(bc, b"\x05\x07", DetourTable([mk(4, "let z = x - y;")]))
    assert res.output == b"-2\n" and res.pseudo_counts


def test_patch_crash_reported_at_location(bc):
    res = execute(bc, b"\x05\x00", DetourTable([mk(4, "let z = x / y;")]))
    assert res.crash is CrashKind.DIV_BY_ZERO and res.crash_stmt == 4


def test_patched_return_stops_run(bc):
    res = execute(bc, b"\x01\x02", DetourTable([mk(5, "return 9;")]))
    assert res.exit_value == 9 and res.output == b""


def test_identity_detour_on_each_location(bc):
    rng = random.Random(3)
    for sid in bc.patchable:
        seed = Patch(SourceLoc(sid), bc.program.stmt(sid))
        for _ in range(30):
            data = bytes(rng.randrange(256) for _ in range(rng.randrange(4)))
            a = execute(bc, data)
            b = execute(bc, data, DetourTable([seed]))
            assert a.observable() == b.observable()
            assert a.coverage.edges() == b.base_edges()
            assert a.steps_used == b.steps_used


def test_pseudo_edges_depend_on_patch_content(bc):
    p1, p2 = mk(4, "let z = x - y;"), mk(4, "let z = y - x;")
    r1 = execute(bc, b"\x01\x01", DetourTable([p1]))
    r2 = execute(bc, b"\x01\x01", DetourTable([p2]))
    assert r1.base_edges() == r2.base_edges()
    assert set(r1.pseudo_counts) != set(r2.pseudo_counts)


def test_detour_table_rejects_duplicates(bc):
    t = DetourTable([mk(4, "let z = 1;")])
    with pytest.raises(DuplicateDetour):
        t.add(mk(4, "let z = 2;"))


@pytest.mark.parametrize("sid, text", [
    (4, "z = 1;"),                # kind change
    (4, "let w = 1;"),            # renamed declaration
    (2, "let a = 3;"),            # array becomes scalar
    (4, "let z = q + 1;"),        # out of scope
    (4, "let z = z + 1;"),        # z is not visible before its declaration
    (4, "let z = 300;"),          # literal too wide for 8 bits
])
def test_ill_bounded_patches(bc, sid, text):
    p = mk(sid, text)
    assert not is_well_bounded(p, bc)
    with pytest.raises(UnpatchableLocation):
        build_detours(p, bc)


def test_default_seeds_are_originals(bc):
    locs = [SourceLoc(s) for s in sorted(bc.patchable)]
    seeds = default_seed_patches(bc.program, locs)
    assert [s.stmt for s in seeds] == [bc.program.stmt(s) for s in sorted(bc.patchable)]
    prog = parse_program("fn main() { if (1) { print(1); } }")
    with pytest.raises(UnpatchableLocation):
        default_seed_patches(prog, [SourceLoc(0)])


def test_interpret_stmt_writes_frame(bc):
    b = bc.bindings[4]
    frame = [None] * bc.n_slots
    frame[b.slot("x")], frame[b.slot("y")] = 100, 27
    eff = interpret_stmt(parse_stmt("let z = x + y;", 4), b, frame, IOState(width=8), 8)
    assert eff.crash is None and eff.writes == [("z", None, 127)]
    eff = interpret_stmt(parse_stmt("let z = x + y + 1;", 4), b, frame, IOState(width=8), 8)
    assert eff.crash is CrashKind.INTEGER_OVERFLOW


# --- FlatPatch -------------------------------------------------------------

def test_flat_layout():
    data = serialize_patch(Patch(SourceLoc(22), parse_stmt("let mid = lo;", 22), 3))
    assert data[:4] == b"FPZ1" and data[4] == 1
    assert int.from_bytes(data[5:9], "little") == 22
    assert int.from_bytes(data[9:11], "little") == 3
    # Decl tag, name index 1 ("mid" after "lo"), Var tag, name index 0
    assert data[11:] == bytes([0x02, 1, 0, 0x11, 0, 0, 2, 0, 2]) + b"lo" + bytes([3]) + b"mid"


@settings(max_examples=500, deadline=None)
@given(ast_stmts(), st.integers(0, 0xFFFF))
def test_flat_roundtrip(stmt, lineage):
    data = flat.encode(stmt.sid, lineage, stmt)
    assert flat.decode(data) == (stmt.sid, lineage, stmt)


@settings(max_examples=300, deadline=None)
@given(ast_stmts(st.just(7)), st.integers(0, 0xFFFF), st.integers(0, 0xFFFF))
def test_digest_ignores_lineage(stmt, l1, l2):
    p1, p2 = Patch(SourceLoc(7), stmt, l1), Patch(SourceLoc(7), stmt, l2)
    assert p1.digest == p2.digest == flat_digest(serialize_patch(p1)) == flat_digest(serialize_patch(p2))
    assert p1 == deserialize_patch(serialize_patch(p1)) or l1 != p1.lineage


@settings(max_examples=1000, deadline=None)
@given(st.binary(max_size=64))
def test_decoder_rejects_garbage_cleanly(data):
    try:
        flat.decode(data)
    except FormatError:
        pass


@settings(max_examples=300, deadline=None)
@given(ast_stmts(), st.data())
def test_decoder_survives_corrupted_patches(stmt, data):
    raw = bytearray(flat.encode(stmt.sid, 0, stmt))
    i = data.draw(st.integers(0, len(raw) - 1))
    raw[i] = data.draw(st.integers(0, 255))
    cut = data.draw(st.integers(0, len(raw)))
    try:
        flat.decode(bytes(raw[:cut]))
    except FormatError:
        pass


def test_decoder_specific_errors():
    good = serialize_patch(Patch(SourceLoc(1), parse_stmt("x = 1;", 1)))
    for bad in (good[:5], b"XXXX" + good[4:], good[:4] + b"\x02" + good[5:], good + b"\0"):
        with pytest.raises(FormatError):
            flat.decode(bad)
    deep = flat.HEADER.pack(flat.MAGIC, 1, 0, 0) + bytes([0x04]) + bytes([0x20]) * 80 + bytes([0x13, 0, 0])
    with pytest.raises(FormatError, match="deeply"):
        flat.decode(deep)


def test_deserialize_checks_against_program(bc):
    ok = serialize_patch(mk(4, "let z = y;"))
    assert deserialize_patch(ok, bc).stmt == parse_stmt("let z = y;", 4)
    with pytest.raises(UnknownStmtId):
        deserialize_patch(serialize_patch(mk(99, "print(1);")), bc)
    with pytest.raises(FormatError):
        deserialize_patch(serialize_patch(mk(4, "let z = q;")), bc)


def test_identity_patch_digest_is_stable(bc):
    a = Patch(SourceLoc(4), bc.program.stmt(4))
    b = deserialize_patch(serialize_patch(a), bc)
    assert a.digest == b.digest and len(a.digest) == 64


def test_execute_budget_applies_with_detour():
    p = parse_program("fn main() { let i = 0; while (i < 10) { i = i + 1; } print(i); }")
    bc = compile_program(p)
    hang = Patch(SourceLoc(2), parse_stmt("i = i - 0;", 2))
    res = execute(bc, b"", DetourTable([hang]), ExecBudget(500))
    assert res.crash is CrashKind.STEP_LIMIT and res.steps_used == 500
