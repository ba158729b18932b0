"""Test cases, pass criteria, the test oracle and the on-disk suite loader."""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import List, Optional

EXPECTED_OUTPUT = "ExpectedOutput"
CRASH_FREE = "CrashFree"
SAME_OUTPUT = "CrashFreeAndSameOutput"

CRASHING = "crashing"
PASSING = "passing"

USER = "user"
GENERATED = "generated"


class MissingExploit(FileNotFoundError):
    pass


class AmbiguousCriterion(ValueError):
    pass


@dataclass(frozen=True)
class TestCase:
    name: str
    input: bytes
    criterion: str
    expected: Optional[bytes] = None
    origin: str = USER
    iteration: Optional[int] = None
    classification: Optional[str] = None

    __test__ = False  # keep pytest from collecting this class

    def passes(self, result) -> bool:
        if result.crashed:
            return False
        if self.criterion == CRASH_FREE:
            return True
        return result.output == self.expected

    def classified(self, original_result) -> "TestCase":
        return replace(self, classification=CRASHING if original_result.crashed else PASSING)


def counter_example(data: bytes, original_result, iteration: int, name: str) -> TestCase:
    """Generated test whose criterion depends on how the original behaves."""
    if original_result.crashed:
        return TestCase(name, data, CRASH_FREE, None, GENERATED, iteration, CRASHING)
    return TestCase(name, data, SAME_OUTPUT, original_result.output, GENERATED, iteration, PASSING)


@dataclass
class TestOracle:
    """Tests in insertion order (ids are positions) plus a failing-first schedule.

    A test is *failing* when the unpatched program does not pass it.  The
    schedule runs the exploit first, then other failing tests, then the
    rest, each group in insertion order.
    """
    tests: List[TestCase] = field(default_factory=list)
    failing: List[bool] = field(default_factory=list)
    order: List[int] = field(default_factory=list)

    __test__ = False

    def add(self, test: TestCase, original_result) -> int:
        self.tests.append(test.classified(original_result) if test.classification is None else test)
        self.failing.append(not test.passes(original_result))
        self._reorder()
        return len(self.tests) - 1

    def _reorder(self):
        rest = range(1, len(self.tests))
        self.order = ([0] if self.tests else []) + [i for i in rest if self.failing[i]] + \
            [i for i in rest if not self.failing[i]]

    @property
    def size(self) -> int:
        return len(self.tests)

    def __len__(self):
        return len(self.tests)

    def failing_ids(self):
        return [i for i, f in enumerate(self.failing) if f]

    def schedule(self):
        return [(i, self.tests[i]) for i in self.order]


def load_test_suite(directory) -> List[TestCase]:
    """Read ``<name>.in`` files with ``.out`` or ``.crashfree`` companions.

    The exploit comes first, the rest in lexicographic order.  A test with
    neither companion is crash-free only if it is the exploit; otherwise it
    is skipped as incomplete.
    """
    if not os.path.isdir(directory):
        raise FileNotFoundError(f"test directory not found: {directory}")
    files = set(os.listdir(directory))
    if "exploit.in" not in files:
        raise MissingExploit(f"{directory} has no exploit.in")
    names = sorted(f[:-3] for f in files if f.endswith(".in"))
    names.remove("exploit")
    tests = []
    for name in ["exploit"] + names:
        has_out = f"{name}.out" in files
        has_cf = f"{name}.crashfree" in files
        if has_out and has_cf:
            raise AmbiguousCriterion(f"test {name!r} has both .out and .crashfree")
        with open(os.path.join(directory, f"{name}.in"), "rb") as fh:
            data = fh.read()
        if has_out:
            with open(os.path.join(directory, f"{name}.out"), "rb") as fh:
                tests.append(TestCase(name, data, EXPECTED_OUTPUT, fh.read()))
        elif has_cf or name == "exploit":
            tests.append(TestCase(name, data, CRASH_FREE))
    return tests
