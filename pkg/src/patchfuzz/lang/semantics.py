"""Integer semantics shared by the VM and the patch interpreter.

Signed two's-complement integers of a configurable width.  Overflow is a
trap, not a wrap; division truncates toward zero like C.
"""
from __future__ import annotations

from enum import Enum

MAX_ARRAY = 1 << 16


class CrashKind(str, Enum):
    INTEGER_OVERFLOW = "IntegerOverflow"
    OUT_OF_BOUNDS = "OutOfBounds"
    DIV_BY_ZERO = "DivByZero"
    ASSERT_FAILURE = "AssertFailure"
    STEP_LIMIT = "StepLimitExceeded"


class Trap(Exception):
    """Raised inside evaluators to abort with a crash kind."""

    def __init__(self, kind: CrashKind):
        super().__init__(kind.value)
        self.kind = kind


def input_value(byte: int, width: int) -> int:
    """Value returned by ``input()`` for one input byte.

    At 8 bits the byte is reinterpreted as a signed value so it always fits.
    """
    if width == 8 and byte > 127:
        return byte - 256
    return byte


def div_trunc(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def mod_trunc(a: int, b: int) -> int:
    return a - b * div_trunc(a, b)
