"""Mutation operators over statement ASTs and the det-then-havoc schedule.

Node paths address expressions inside a statement: the first index picks
a statement child (for assignments, 0 is the target and 1 the value), the
remaining indices walk expression children.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, List, Optional

from .lang.ast import (
    ARITH_OPS, LOGIC_OPS, REL_OPS, Assign, Binary, Call, Const, Index, Unary, Var,
    count_nodes, expr_children, stmt_children, with_expr_children, with_stmt_children,
)
from .lang.refactor import is_temp
from .lang.validate import SCALAR, check_simple_stmt

KINDS = ("ABS", "OR", "UOI", "UOD", "SVR", "CONST", "SWAP", "ADDT")
UOI_OPS = ("-", "!", "abs")
ADDT_OPS = ("+", "-")
ADDT_CONSTS = (1, 2)
MAX_NODES = 48
HAVOC_MAX_STACK = 4
HAVOC_ATTEMPTS = 16

_FAMILY = {}
for _fam in (ARITH_OPS, REL_OPS, LOGIC_OPS):
    for _op in _fam:
        _FAMILY[_op] = _fam


class InvalidNodePath(LookupError):
    pass


@dataclass(frozen=True)
class MutationOp:
    kind: str
    target: tuple
    payload: object = None

    def __str__(self):
        return f"{self.kind}{list(self.target)}{'' if self.payload is None else ' ' + repr(self.payload)}"


# --- node addressing --------------------------------------------------------

def node_at(stmt, path):
    if not path:
        raise InvalidNodePath("empty node path")
    try:
        node = stmt_children(stmt)[path[0]]
        for i in path[1:]:
            node = expr_children(node)[i]
    except (IndexError, TypeError) as exc:
        raise InvalidNodePath(f"no node at {path}") from exc
    return node


def replace_at(stmt, path, new):
    def rebuild(node, rest):
        if not rest:
            return new
        kids = list(expr_children(node))
        kids[rest[0]] = rebuild(kids[rest[0]], rest[1:])
        return with_expr_children(node, kids)

    node_at(stmt, path)
    kids = list(stmt_children(stmt))
    kids[path[0]] = rebuild(kids[path[0]], path[1:])
    return with_stmt_children(stmt, kids)


def node_paths(stmt) -> List[tuple]:
    """(path, node, context) in pre-order.  Context: 'lvalue', 'array' or 'rvalue'."""
    out = []

    def visit(node, path, ctx):
        out.append((path, node, ctx))
        if isinstance(node, Call) and node.name == "len":
            for i, a in enumerate(node.args):
                visit(a, path + (i,), "array")
            return
        for i, child in enumerate(expr_children(node)):
            visit(child, path + (i,), "rvalue")

    for i, child in enumerate(stmt_children(stmt)):
        lvalue = isinstance(stmt, Assign) and i == 0
        visit(child, (i,), "lvalue" if lvalue else "rvalue")
    return out


def _scalars(bindings) -> List[str]:
    return [n for n in bindings.scalars() if not is_temp(n)]


def _const_payloads(v, lo, hi) -> list:
    out = []
    for c in (0, 1, -1, v + 1, v - 1, -v):
        if c != v and lo <= c <= hi and c not in out:
            out.append(c)
    return out


def ops_for_node(node, path, ctx, bindings) -> Iterator[MutationOp]:
    """Candidate operators at one node, in (kind, payload) order."""
    if ctx == "array":
        return
    if ctx == "lvalue":
        if isinstance(node, Var):
            for name in _scalars(bindings):
                if name != node.name:
                    yield MutationOp("SVR", path, name)
        return
    if not (isinstance(node, Unary) and node.op == "abs"):
        yield MutationOp("ABS", path)
    if isinstance(node, Binary):
        for op in _FAMILY[node.op]:
            if op != node.op:
                yield MutationOp("OR", path, op)
    for op in UOI_OPS:
        yield MutationOp("UOI", path, op)
    if isinstance(node, Unary):
        yield MutationOp("UOD", path)
    if isinstance(node, Var):
        for name in _scalars(bindings):
            if name != node.name:
                yield MutationOp("SVR", path, name)
    if isinstance(node, Const):
        for c in _const_payloads(node.value, bindings.int_min, bindings.int_max):
            yield MutationOp("CONST", path, c)
    if isinstance(node, Binary):
        yield MutationOp("SWAP", path)
    terms = [Var(n) for n in _scalars(bindings)] + [Const(c) for c in ADDT_CONSTS]
    for op in ADDT_OPS:
        for term in terms:
            for side in ("right", "left"):
                yield MutationOp("ADDT", path, (op, term, side))


def enumerate_ops(stmt, bindings) -> List[MutationOp]:
    return [op for path, node, ctx in node_paths(stmt) for op in ops_for_node(node, path, ctx, bindings)]


def _rewrite(node, op: MutationOp):
    k = op.kind
    if k == "ABS":
        return Unary("abs", node)
    if k == "UOI":
        return Unary(op.payload, node)
    if k == "UOD":
        if not isinstance(node, Unary):
            return None
        return node.operand
    if k == "OR":
        if not isinstance(node, Binary) or _FAMILY.get(op.payload) is not _FAMILY[node.op]:
            return None
        return Binary(op.payload, node.left, node.right)
    if k == "SWAP":
        if not isinstance(node, Binary):
            return None
        return Binary(node.op, node.right, node.left)
    if k == "SVR":
        if not isinstance(node, Var):
            return None
        return Var(op.payload)
    if k == "CONST":
        if not isinstance(node, Const):
            return None
        return Const(op.payload)
    if k == "ADDT":
        binop, term, side = op.payload
        return Binary(binop, node, term) if side == "right" else Binary(binop, term, node)
    raise ValueError(f"unknown mutation kind {k!r}")


def apply_operator(stmt, op: MutationOp, bindings) -> Optional[object]:
    """Mutated statement, or None when the result is rejected.

    Rejected: ill-typed, out of scope, oversized, or identical to ``stmt``.
    Raises InvalidNodePath for a path that does not exist.
    """
    node = node_at(stmt, op.target)
    is_target = isinstance(stmt, Assign) and op.target == (0,)
    if is_target and op.kind != "SVR":
        return None
    new = _rewrite(node, op)
    if new is None:
        return None
    if op.kind == "SVR" and (is_temp(op.payload) or bindings.types().get(op.payload) != SCALAR):
        return None
    out = replace_at(stmt, op.target, new)
    if out == stmt or count_nodes(out) > MAX_NODES:
        return None
    if check_simple_stmt(out, bindings.types(), bindings.int_min, bindings.int_max):
        return None
    return out


def deterministic_mutants(patch, bindings) -> list:
    """All distinct single-operator mutants, deduplicated by digest."""
    seen = {patch.digest}
    out = []
    for op in enumerate_ops(patch.stmt, bindings):
        stmt = apply_operator(patch.stmt, op, bindings)
        if stmt is None:
            continue
        child = patch.derive(stmt)
        if child.digest in seen:
            continue
        seen.add(child.digest)
        out.append(child)
    return out


def random_op(stmt, bindings, rng) -> Optional[MutationOp]:
    """Uniform node, then a uniform operator applicable at that node."""
    nodes = node_paths(stmt)
    path, node, ctx = nodes[rng.randrange(len(nodes))]
    ops = list(ops_for_node(node, path, ctx, bindings))
    if not ops:
        return None
    kinds = sorted({o.kind for o in ops}, key=KINDS.index)
    kind = kinds[rng.randrange(len(kinds))]
    same = [o for o in ops if o.kind == kind]
    return same[rng.randrange(len(same))]


def havoc_mutate(patch, bindings, rng):
    """Stack 1..4 random operators; unchanged if an op cannot be placed."""
    k = rng.randint(1, HAVOC_MAX_STACK)
    stmt = patch.stmt
    for _ in range(k):
        for _ in range(HAVOC_ATTEMPTS):
            op = random_op(stmt, bindings, rng)
            new = apply_operator(stmt, op, bindings) if op is not None else None
            if new is not None:
                stmt = new
                break
        else:
            return patch
    if stmt == patch.stmt:
        return patch
    return patch.derive(stmt, k)


def mutation_chains(patch, bindings, depth: int = 3, kinds=None):
    """Every statement reachable by ``depth`` stacked operators.

    ``kinds`` optionally fixes the operator kind at each step.  Yields
    ``(stmt, ops)`` once per distinct statement, first derivation wins.
    """
    frontier = [(patch.stmt, ())]
    seen = {patch.stmt}
    for level in range(depth):
        nxt = []
        want = None if kinds is None else kinds[level]
        for stmt, chain in frontier:
            for op in enumerate_ops(stmt, bindings):
                if want is not None and op.kind != want:
                    continue
                new = apply_operator(stmt, op, bindings)
                if new is None or new in seen:
                    continue
                seen.add(new)
                nxt.append((new, chain + (op,)))
                yield new, chain + (op,)
        frontier = nxt
