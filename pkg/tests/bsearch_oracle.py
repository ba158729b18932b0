"""Brute-force correctness oracle for candidate fixes of corpus/bsearch.rl.

A candidate is correct when, for every sorted array of length 1..6 over
-20..20, every probe value in that range and every subrange lo <= hi, the
patched program does not crash and prints 1 exactly when the value occurs
in a[lo..hi].

Enumerating that domain directly is far too big, so ``is_correct`` uses an
exact reduction for the class of patches it accepts: a replacement of the
``mid`` declaration whose right-hand side reads only ``lo``, ``hi``, ``n``,
``i`` and constants.  The program then observes the array only through the
two comparisons ``a[mid] < val`` and ``a[mid] > val``, and in a sorted array
those are fixed by the pair (p, q) where a[0..p) < val, a[p..q) == val and
a[q..n) > val.  Every (p, q) pair is realisable in the value range, so
checking one representative array per pair is equivalent to the full
enumeration.  Patches outside that class are reported as not correct.
``full_check`` enumerates a caller-supplied small domain directly and is
used to confirm the reduction.
"""
from __future__ import annotations

import itertools

from patchfuzz.lang.ast import Binary, Call, Const, Decl, Index, Unary, Var

from patchfuzz.executor import execute
from patchfuzz.testsuite import CRASH_FREE, EXPECTED_OUTPUT, TestCase, TestOracle

from conftest import corpus_path
from reference import ref_run

MAX_LEN = 6
VALUES = range(-20, 21)
READABLE = {"lo", "hi", "n", "i"}


def member(arr, val, lo, hi) -> bool:
    return any(arr[k] == val for k in range(lo, hi + 1))


def encode(arr, val, lo, hi) -> bytes:
    return bytes(v & 0xFF for v in [len(arr), *arr, val, lo, hi])


def subranges(n):
    return [(lo, hi) for lo in range(n) for hi in range(lo, n)]


def mid_sid(program) -> int:
    for sid in range(program.num_stmts):
        s = program.stmt(sid)
        if isinstance(s, Decl) and s.name == "mid":
            return sid
    raise LookupError("no mid declaration")


def _reads(e, names):
    if isinstance(e, Const):
        return True
    if isinstance(e, Var):
        return e.name in names
    if isinstance(e, Unary):
        return _reads(e.operand, names)
    if isinstance(e, Binary):
        return _reads(e.left, names) and _reads(e.right, names)
    if isinstance(e, (Index, Call)):
        return False
    return False


def in_reducible_class(program, sid, stmt) -> bool:
    return (sid == mid_sid(program) and isinstance(stmt, Decl) and stmt.name == "mid"
            and not stmt.is_array and _reads(stmt.init, READABLE))


def _passes(program, sid, stmt, arr, val, lo, hi, max_steps):
    res = ref_run(program, encode(arr, val, lo, hi), {sid: stmt}, max_steps)
    return not res.crashed and res.output == (b"1\n" if member(arr, val, lo, hi) else b"0\n")


def reduced_check(program, sid, stmt, max_len=MAX_LEN, max_steps=20_000) -> bool:
    for n in range(1, max_len + 1):
        for p in range(n + 1):
            for q in range(p, n + 1):
                arr = [-1] * p + [0] * (q - p) + [1] * (n - q)
                for lo, hi in subranges(n):
                    if not _passes(program, sid, stmt, arr, 0, lo, hi, max_steps):
                        return False
    return True


def full_check(program, sid, stmt, values, max_len, max_steps=20_000) -> bool:
    for n in range(1, max_len + 1):
        for arr in itertools.combinations_with_replacement(values, n):
            for val in values:
                for lo, hi in subranges(n):
                    if not _passes(program, sid, stmt, list(arr), val, lo, hi, max_steps):
                        return False
    return True


def is_correct(program, sid, stmt, max_steps=20_000) -> bool:
    if not in_reducible_class(program, sid, stmt):
        return False
    return reduced_check(program, sid, stmt, max_steps=max_steps)


def bsearch_oracle(program, bc):
    """Exploit plus four ordinary membership tests."""
    with open(corpus_path("bsearch.tests/exploit", ".in"), "rb") as fh:
        exploit = fh.read()
    oracle = TestOracle()
    oracle.add(TestCase("exploit", exploit, EXPECTED_OUTPUT, b"1\n"), execute(bc, exploit))
    cases = [([1, 3, 5, 7], 5, 0, 3), ([2, 4], 3, 0, 1), ([0, 0, 9], 9, 1, 2), ([-4, -1, 6, 8, 10], -1, 0, 4)]
    for i, (arr, val, lo, hi) in enumerate(cases):
        data = encode(arr, val, lo, hi)
        want = b"1\n" if member(arr, val, lo, hi) else b"0\n"
        oracle.add(TestCase(f"t{i}", data, EXPECTED_OUTPUT, want), execute(bc, data))
    return oracle


def ref_passes(program, patch, test):
    res = ref_run(program, test.input, {patch.sid: patch.stmt}, max_steps=20_000)
    if res.crashed:
        return False
    return test.criterion == CRASH_FREE or res.output == test.expected
