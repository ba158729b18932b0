"""AST node types for RLang.

Statements carry a ``sid`` (dense pre-order statement id).  Every node is a
frozen dataclass, so trees compare structurally and can be shared freely.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Tuple, Union

ARITH_OPS = ("+", "-", "*", "/", "%")
REL_OPS = ("<", "<=", ">", ">=", "==", "!=")
LOGIC_OPS = ("&&", "||")
BINARY_OPS = ARITH_OPS + REL_OPS + LOGIC_OPS
UNARY_OPS = ("-", "!", "abs")
INTRINSICS = {"input": 0, "len": 1}

OP_FAMILIES = {op: ARITH_OPS for op in ARITH_OPS}
OP_FAMILIES.update({op: REL_OPS for op in REL_OPS})
OP_FAMILIES.update({op: LOGIC_OPS for op in LOGIC_OPS})


# --- expressions -----------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Index:
    array: str
    index: "Expr"


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple["Expr", ...] = ()


Expr = Union[Const, Var, Index, Unary, Binary, Call]


# --- statements ------------------------------------------------------------

@dataclass(frozen=True)
class Assign:
    sid: int
    target: Union[Var, Index]
    value: Expr


@dataclass(frozen=True)
class Decl:
    sid: int
    name: str
    init: Expr
    is_array: bool = False


@dataclass(frozen=True)
class If:
    sid: int
    cond: Expr
    then: Tuple["Stmt", ...]
    orelse: Tuple["Stmt", ...] = ()


@dataclass(frozen=True)
class While:
    sid: int
    cond: Expr
    body: Tuple["Stmt", ...]


@dataclass(frozen=True)
class Return:
    sid: int
    value: Expr


@dataclass(frozen=True)
class Print:
    sid: int
    value: Expr


@dataclass(frozen=True)
class ExprStmt:
    sid: int
    value: Expr


@dataclass(frozen=True)
class Assert:
    sid: int
    cond: Expr


Stmt = Union[Assign, Decl, If, While, Return, Print, ExprStmt, Assert]

# Statement kinds a patch may replace.  Control flow is excluded; conditions
# become patchable through refactor_conditionals.
PATCHABLE = (Assign, Decl, Print, ExprStmt, Return)


@dataclass(frozen=True)
class FunctionDef:
    name: str
    params: Tuple[str, ...]
    body: Tuple[Stmt, ...]


@dataclass(frozen=True)
class Program:
    functions: Tuple[FunctionDef, ...]
    entry: str = "main"
    int_width: int = 32
    _index: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        index = {}
        for fn in self.functions:
            for stmt in walk_stmts(fn.body):
                index[stmt.sid] = (fn.name, stmt)
        object.__setattr__(self, "_index", index)

    def function(self, name: str) -> Optional[FunctionDef]:
        for fn in self.functions:
            if fn.name == name:
                return fn
        return None

    def stmt(self, sid: int) -> Stmt:
        return self._index[sid][1]

    def function_of(self, sid: int) -> str:
        return self._index[sid][0]

    def has_stmt(self, sid: int) -> bool:
        return sid in self._index

    @property
    def num_stmts(self) -> int:
        return len(self._index)

    @property
    def int_min(self) -> int:
        return -(1 << (self.int_width - 1))

    @property
    def int_max(self) -> int:
        return (1 << (self.int_width - 1)) - 1


@dataclass(frozen=True)
class SourceLoc:
    stmt_id: int
    function: str = "main"


# --- traversal helpers -----------------------------------------------------

def walk_stmts(body) -> Iterator[Stmt]:
    """Yield statements in pre-order (the StmtId numbering order)."""
    for stmt in body:
        yield stmt
        if isinstance(stmt, If):
            yield from walk_stmts(stmt.then)
            yield from walk_stmts(stmt.orelse)
        elif isinstance(stmt, While):
            yield from walk_stmts(stmt.body)


def stmt_children(stmt) -> tuple:
    """Expression children of a simple statement, in node-path order."""
    if isinstance(stmt, Assign):
        return (stmt.target, stmt.value)
    if isinstance(stmt, Decl):
        return (stmt.init,)
    if isinstance(stmt, (Return, Print, ExprStmt)):
        return (stmt.value,)
    if isinstance(stmt, (Assert,)):
        return (stmt.cond,)
    if isinstance(stmt, (If, While)):
        return (stmt.cond,)
    raise TypeError(f"not a statement: {stmt!r}")


def expr_children(expr) -> tuple:
    if isinstance(expr, (Const, Var)):
        return ()
    if isinstance(expr, Index):
        return (expr.index,)
    if isinstance(expr, Unary):
        return (expr.operand,)
    if isinstance(expr, Binary):
        return (expr.left, expr.right)
    if isinstance(expr, Call):
        return tuple(expr.args)
    raise TypeError(f"not an expression: {expr!r}")


def with_expr_children(expr, children):
    if isinstance(expr, Index):
        return Index(expr.array, children[0])
    if isinstance(expr, Unary):
        return Unary(expr.op, children[0])
    if isinstance(expr, Binary):
        return Binary(expr.op, children[0], children[1])
    if isinstance(expr, Call):
        return Call(expr.name, tuple(children))
    return expr


def with_stmt_children(stmt, children):
    if isinstance(stmt, Assign):
        return Assign(stmt.sid, children[0], children[1])
    if isinstance(stmt, Decl):
        return Decl(stmt.sid, stmt.name, children[0], stmt.is_array)
    if isinstance(stmt, Return):
        return Return(stmt.sid, children[0])
    if isinstance(stmt, Print):
        return Print(stmt.sid, children[0])
    if isinstance(stmt, ExprStmt):
        return ExprStmt(stmt.sid, children[0])
    if isinstance(stmt, Assert):
        return Assert(stmt.sid, children[0])
    raise TypeError(f"cannot rebuild {type(stmt).__name__}")


def walk_expr(expr) -> Iterator:
    yield expr
    for child in expr_children(expr):
        yield from walk_expr(child)


def names_in_stmt(stmt) -> set:
    """Every variable or array name a simple statement mentions."""
    names = set()
    if isinstance(stmt, Decl):
        names.add(stmt.name)
    for child in stmt_children(stmt):
        for node in walk_expr(child):
            if isinstance(node, Var):
                names.add(node.name)
            elif isinstance(node, Index):
                names.add(node.array)
    return names


def count_nodes(stmt) -> int:
    return sum(1 for child in stmt_children(stmt) for _ in walk_expr(child))
