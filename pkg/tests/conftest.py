import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CORPUS = os.path.join(ROOT, "corpus")
CORPUS_PROGRAMS = ("bsearch", "oob", "divzero", "sum16", "wrongcmp", "hang")


def corpus_path(name, suffix=".rl"):
    return os.path.join(CORPUS, name + suffix)


@pytest.fixture(scope="session")
def corpus():
    from patchfuzz.lang import load_program
    return {name: load_program(corpus_path(name), refactor=True) for name in CORPUS_PROGRAMS}


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None:
        return
    terminalreporter.section("acceptance")
    for n in range(1, 10):
        ok, detail = mod.RESULTS.get(n, (False, "not run or errored"))
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
