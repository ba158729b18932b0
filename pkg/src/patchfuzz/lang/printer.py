"""Pretty-printing RLang ASTs back to source form."""
from __future__ import annotations

from .ast import (
    Assert, Assign, Binary, Call, Const, Decl, ExprStmt, If, Index, Print,
    Program, Return, Unary, Var, While,
)

_PREC = {"||": 1, "&&": 2, "==": 3, "!=": 3, "<": 4, "<=": 4, ">": 4, ">=": 4,
         "+": 5, "-": 5, "*": 6, "/": 6, "%": 6}
_UNARY_PREC = 7


def format_expr(e, parent_prec=0) -> str:
    if isinstance(e, Const):
        text = str(e.value)
        # a negative literal binds like a unary operator
        return f"({text})" if e.value < 0 and parent_prec >= _UNARY_PREC else text
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Index):
        return f"{e.array}[{format_expr(e.index)}]"
    if isinstance(e, Call):
        return f"{e.name}({', '.join(format_expr(a) for a in e.args)})"
    if isinstance(e, Unary):
        if e.op == "abs":
            return f"abs({format_expr(e.operand)})"
        inner = e.operand
        if e.op == "-" and isinstance(inner, Const):
            return f"-({format_expr(inner)})"
        return f"{e.op}{format_expr(inner, _UNARY_PREC)}"
    if isinstance(e, Binary):
        prec = _PREC[e.op]
        # left-associative: the right operand needs parens at equal precedence
        text = f"{format_expr(e.left, prec)} {e.op} {format_expr(e.right, prec + 1)}"
        return f"({text})" if prec < parent_prec else text
    raise TypeError(f"not an expression: {e!r}")


def format_stmt(s, indent=0) -> str:
    pad = "    " * indent
    if isinstance(s, Assign):
        return f"{pad}{format_expr(s.target)} = {format_expr(s.value)};"
    if isinstance(s, Decl):
        if s.is_array:
            return f"{pad}let {s.name}[{format_expr(s.init)}];"
        return f"{pad}let {s.name} = {format_expr(s.init)};"
    if isinstance(s, Return):
        return f"{pad}return {format_expr(s.value)};"
    if isinstance(s, Print):
        return f"{pad}print({format_expr(s.value)});"
    if isinstance(s, Assert):
        return f"{pad}assert({format_expr(s.cond)});"
    if isinstance(s, ExprStmt):
        return f"{pad}{format_expr(s.value)};"
    if isinstance(s, If):
        lines = [f"{pad}if ({format_expr(s.cond)}) {{"]
        lines += [format_stmt(c, indent + 1) for c in s.then]
        if s.orelse:
            lines.append(f"{pad}}} else {{")
            lines += [format_stmt(c, indent + 1) for c in s.orelse]
        lines.append(f"{pad}}}")
        return "\n".join(lines)
    if isinstance(s, While):
        lines = [f"{pad}while ({format_expr(s.cond)}) {{"]
        lines += [format_stmt(c, indent + 1) for c in s.body]
        lines.append(f"{pad}}}")
        return "\n".join(lines)
    raise TypeError(f"not a statement: {s!r}")


def format_program(p: Program) -> str:
    out = []
    if p.int_width != 32:
        out.append(f"#width {p.int_width}")
    for fn in p.functions:
        out.append(f"fn {fn.name}({', '.join(fn.params)}) {{")
        out += [format_stmt(s, 1) for s in fn.body]
        out.append("}")
    return "\n".join(out) + "\n"
