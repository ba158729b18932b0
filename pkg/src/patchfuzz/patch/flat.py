"""FlatPatch: the on-disk binary form of a patch.

Layout (all integers little-endian)::

    b"FPZ1"  version:u8  stmt_id:u32  lineage:u16
    node stream (pre-order, one tag byte per node, arity implied by tag)
    name table: count:u16, then per name len:u8 + UTF-8 bytes (sorted)

Const nodes carry an i64 payload; Var, Index, Decl and len() carry a u16
index into the name table.
"""
from __future__ import annotations

import struct

from ..lang.ast import (
    Assert, Assign, Binary, Call, Const, Decl, ExprStmt, Index, Print, Return, Unary, Var,
)

MAGIC = b"FPZ1"
VERSION = 1
HEADER = struct.Struct("<4sBIH")
MAX_DEPTH = 64
LINEAGE_OFFSET = 9

T_ASSIGN, T_DECL, T_DECL_ARRAY, T_PRINT, T_EXPR, T_RETURN, T_ASSERT = range(0x01, 0x08)
T_CONST, T_VAR, T_INDEX, T_INPUT, T_LEN = range(0x10, 0x15)

_UNARY_TAGS = {"-": 0x20, "!": 0x21, "abs": 0x22}
_BINARY_TAGS = {op: 0x30 + i for i, op in enumerate(
    ("+", "-", "*", "/", "%", "<", "<=", ">", ">=", "==", "!=", "&&", "||"))}
_UNARY_OPS = {t: op for op, t in _UNARY_TAGS.items()}
_BINARY_OPS = {t: op for op, t in _BINARY_TAGS.items()}

_I64 = struct.Struct("<q")
_U16 = struct.Struct("<H")


class FormatError(ValueError):
    """Bytes are not a valid FlatPatch."""


def _names(stmt) -> list:
    names = set()

    def visit(e):
        if isinstance(e, Var):
            names.add(e.name)
        elif isinstance(e, Index):
            names.add(e.array)
            visit(e.index)
        elif isinstance(e, Unary):
            visit(e.operand)
        elif isinstance(e, Binary):
            visit(e.left)
            visit(e.right)
        elif isinstance(e, Call):
            for a in e.args:
                visit(a)

    if isinstance(stmt, Decl):
        names.add(stmt.name)
        visit(stmt.init)
    elif isinstance(stmt, Assign):
        visit(stmt.target)
        visit(stmt.value)
    else:
        visit(stmt.cond if isinstance(stmt, Assert) else stmt.value)
    return sorted(names)


def encode(stmt_id: int, lineage: int, stmt) -> bytes:
    names = _names(stmt)
    index = {n: i for i, n in enumerate(names)}
    out = bytearray(HEADER.pack(MAGIC, VERSION, stmt_id, min(lineage, 0xFFFF)))

    def expr(e):
        if isinstance(e, Const):
            out.append(T_CONST)
            out.extend(_I64.pack(e.value))
        elif isinstance(e, Var):
            out.append(T_VAR)
            out.extend(_U16.pack(index[e.name]))
        elif isinstance(e, Index):
            out.append(T_INDEX)
            out.extend(_U16.pack(index[e.array]))
            expr(e.index)
        elif isinstance(e, Unary):
            out.append(_UNARY_TAGS[e.op])
            expr(e.operand)
        elif isinstance(e, Binary):
            out.append(_BINARY_TAGS[e.op])
            expr(e.left)
            expr(e.right)
        elif isinstance(e, Call) and e.name == "input":
            out.append(T_INPUT)
        elif isinstance(e, Call) and e.name == "len":
            out.append(T_LEN)
            out.extend(_U16.pack(index[e.args[0].name]))
        else:
            raise TypeError(f"cannot serialize {e!r}")

    if isinstance(stmt, Assign):
        out.append(T_ASSIGN)
        expr(stmt.target)
        expr(stmt.value)
    elif isinstance(stmt, Decl):
        out.append(T_DECL_ARRAY if stmt.is_array else T_DECL)
        out.extend(_U16.pack(index[stmt.name]))
        expr(stmt.init)
    elif isinstance(stmt, Assert):
        out.append(T_ASSERT)
        expr(stmt.cond)
    else:
        tag = {Print: T_PRINT, ExprStmt: T_EXPR, Return: T_RETURN}.get(type(stmt))
        if tag is None:
            raise TypeError(f"cannot serialize {type(stmt).__name__}")
        out.append(tag)
        expr(stmt.value)

    out.extend(_U16.pack(len(names)))
    for n in names:
        raw = n.encode()
        out.append(len(raw))
        out.extend(raw)
    return bytes(out)


class _Reader:
    def __init__(self, data: bytes, pos: int):
        self.data = data
        self.pos = pos

    def take(self, n: int) -> bytes:
        end = self.pos + n
        if end > len(self.data):
            raise FormatError("truncated")
        chunk = self.data[self.pos:end]
        self.pos = end
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return _U16.unpack(self.take(2))[0]


class _Name:
    """Placeholder for a name-table index until the table is read."""
    __slots__ = ("i",)

    def __init__(self, i):
        self.i = i


def decode(data: bytes):
    """Parse bytes into ``(stmt_id, lineage, stmt)``; raises FormatError."""
    data = bytes(data)
    if len(data) < HEADER.size:
        raise FormatError("truncated header")
    magic, version, stmt_id, lineage = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError("bad magic")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    r = _Reader(data, HEADER.size)
    refs = []

    def name():
        ref = _Name(r.u16())
        refs.append(ref)
        return ref

    def expr(depth):
        if depth > MAX_DEPTH:
            raise FormatError("expression nested too deeply")
        tag = r.u8()
        if tag == T_CONST:
            return Const(_I64.unpack(r.take(8))[0])
        if tag == T_VAR:
            return Var(name())
        if tag == T_INDEX:
            arr = name()
            return Index(arr, expr(depth + 1))
        if tag == T_INPUT:
            return Call("input", ())
        if tag == T_LEN:
            return Call("len", (Var(name()),))
        if tag in _UNARY_OPS:
            return Unary(_UNARY_OPS[tag], expr(depth + 1))
        if tag in _BINARY_OPS:
            left = expr(depth + 1)
            return Binary(_BINARY_OPS[tag], left, expr(depth + 1))
        raise FormatError(f"unknown expression tag 0x{tag:02x}")

    tag = r.u8()
    if tag == T_ASSIGN:
        target = expr(1)
        if not isinstance(target, (Var, Index)):
            raise FormatError("assignment target is not an lvalue")
        stmt = ("assign", target, expr(1))
    elif tag in (T_DECL, T_DECL_ARRAY):
        stmt = ("decl", name(), expr(1), tag == T_DECL_ARRAY)
    elif tag in (T_PRINT, T_EXPR, T_RETURN, T_ASSERT):
        stmt = (tag, expr(1))
    else:
        raise FormatError(f"unknown statement tag 0x{tag:02x}")

    count = r.u16()
    table = []
    for _ in range(count):
        raw = r.take(r.u8())
        try:
            n = raw.decode()
        except UnicodeDecodeError as exc:
            raise FormatError("name is not UTF-8") from exc
        if not n.isidentifier():
            raise FormatError(f"bad name {n!r}")
        table.append(n)
    if table != sorted(set(table)):
        raise FormatError("name table not sorted and unique")
    if r.pos != len(data):
        raise FormatError("trailing bytes")
    for ref in refs:
        if ref.i >= len(table):
            raise FormatError("name index out of range")
    if len({ref.i for ref in refs}) != len(table):
        raise FormatError("unused name in table")
    return stmt_id, lineage, _resolve(stmt_id, stmt, table)


def _resolve(sid, stmt, table):
    def fix(e):
        if isinstance(e, Var):
            return Var(table[e.name.i])
        if isinstance(e, Index):
            return Index(table[e.array.i], fix(e.index))
        if isinstance(e, Unary):
            return Unary(e.op, fix(e.operand))
        if isinstance(e, Binary):
            return Binary(e.op, fix(e.left), fix(e.right))
        if isinstance(e, Call):
            return Call(e.name, tuple(fix(a) for a in e.args))
        return e

    kind = stmt[0]
    if kind == "assign":
        return Assign(sid, fix(stmt[1]), fix(stmt[2]))
    if kind == "decl":
        return Decl(sid, table[stmt[1].i], fix(stmt[2]), stmt[3])
    cls = {T_PRINT: Print, T_EXPR: ExprStmt, T_RETURN: Return, T_ASSERT: Assert}[kind]
    return cls(sid, fix(stmt[1]))
