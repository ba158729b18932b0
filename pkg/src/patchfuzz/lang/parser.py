"""Recursive-descent parser for RLang source text."""
from __future__ import annotations

import re
from dataclasses import replace

from .ast import (
    Assert, Assign, Binary, Call, Const, Decl, ExprStmt, FunctionDef, If,
    Index, Print, Program, Return, Unary, Var, While,
)


class ParseError(SyntaxError):
    """Malformed RLang source.  ``lineno``/``offset`` give the position."""

    def __init__(self, message, line, col):
        super().__init__(f"{message} at line {line}, column {col}")
        self.lineno = line
        self.offset = col
        self.reason = message


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<directive>\#[A-Za-z_]+)
  | (?P<int>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>&&|\|\||<=|>=|==|!=|[-+*/%<>=!(){}\[\];,])
""", re.VERBOSE)

KEYWORDS = {"fn", "let", "if", "else", "while", "return", "print", "assert"}
WIDTHS = (8, 16, 32)

# binary precedence levels, loosest first
_LEVELS = (("||",), ("&&",), ("==", "!="), ("<", "<=", ">", ">="), ("+", "-"), ("*", "/", "%"))


def tokenize(text):
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            if kind == "ident" and value in KEYWORDS:
                kind = "kw"
            tokens.append((kind, value, line, col))
        pos = m.end()
    tokens.append(("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = tokenize(text)
        self.pos = 0

    # token helpers
    def peek(self, ahead=0):
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        raise ParseError(message, tok[2], tok[3])

    def at(self, value, ahead=0):
        tok = self.peek(ahead)
        return tok[0] in ("op", "kw") and tok[1] == value

    def expect(self, value):
        tok = self.peek()
        if not self.at(value):
            shown = tok[1] or "end of input"
            self.error(f"expected {value!r}, found {shown!r}")
        return self.next()

    def ident(self):
        tok = self.peek()
        if tok[0] != "ident":
            self.error(f"expected identifier, found {tok[1] or 'end of input'!r}")
        return self.next()[1]

    # grammar
    def program(self):
        width = 32
        while self.peek()[0] == "directive":
            tok = self.next()
            if tok[1] != "#width":
                self.error(f"unknown directive {tok[1]}", tok)
            num = self.peek()
            if num[0] != "int" or int(num[1]) not in WIDTHS:
                self.error("#width expects 8, 16 or 32")
            width = int(self.next()[1])
        functions = []
        while self.peek()[0] != "eof":
            functions.append(self.function())
        return Program(tuple(functions), "main", width)

    def function(self):
        self.expect("fn")
        name = self.ident()
        self.expect("(")
        params = []
        if not self.at(")"):
            params.append(self.ident())
            while self.at(","):
                self.next()
                params.append(self.ident())
        self.expect(")")
        return FunctionDef(name, tuple(params), self.block())

    def block(self):
        self.expect("{")
        body = []
        while not self.at("}"):
            if self.peek()[0] == "eof":
                self.error("unterminated block")
            body.append(self.statement())
        self.expect("}")
        return tuple(body)

    def statement(self):
        tok = self.peek()
        if tok[0] == "kw":
            kw = tok[1]
            if kw == "let":
                self.next()
                name = self.ident()
                if self.at("["):
                    self.next()
                    size = self.expr()
                    self.expect("]")
                    self.expect(";")
                    return Decl(-1, name, size, True)
                self.expect("=")
                init = self.expr()
                self.expect(";")
                return Decl(-1, name, init)
            if kw == "if":
                return self.if_stmt()
            if kw == "while":
                self.next()
                self.expect("(")
                cond = self.expr()
                self.expect(")")
                return While(-1, cond, self.block())
            if kw == "return":
                self.next()
                value = self.expr()
                self.expect(";")
                return Return(-1, value)
            if kw in ("print", "assert"):
                self.next()
                self.expect("(")
                value = self.expr()
                self.expect(")")
                self.expect(";")
                return Print(-1, value) if kw == "print" else Assert(-1, value)
            self.error(f"unexpected keyword {kw!r}")
        # assignment or expression statement
        if tok[0] == "ident" and (self.at("=", 1) or self.at("[", 1)):
            start = self.pos
            target = self.lvalue()
            if self.at("="):
                self.next()
                value = self.expr()
                self.expect(";")
                return Assign(-1, target, value)
            self.pos = start
        value = self.expr()
        self.expect(";")
        return ExprStmt(-1, value)

    def if_stmt(self):
        self.expect("if")
        self.expect("(")
        cond = self.expr()
        self.expect(")")
        then = self.block()
        orelse = ()
        if self.at("else"):
            self.next()
            orelse = (self.if_stmt(),) if self.at("if") else self.block()
        return If(-1, cond, then, orelse)

    def lvalue(self):
        name = self.ident()
        if self.at("["):
            self.next()
            idx = self.expr()
            self.expect("]")
            return Index(name, idx)
        return Var(name)

    def expr(self, level=0):
        if level == len(_LEVELS):
            return self.unary()
        left = self.expr(level + 1)
        while self.peek()[0] == "op" and self.peek()[1] in _LEVELS[level]:
            op = self.next()[1]
            right = self.expr(level + 1)
            left = Binary(op, left, right)
        return left

    def unary(self):
        if self.at("-"):
            self.next()
            if self.peek()[0] == "int":
                return Const(-int(self.next()[1]))
            return Unary("-", self.unary())
        if self.at("!"):
            self.next()
            return Unary("!", self.unary())
        return self.primary()

    def primary(self):
        tok = self.peek()
        if tok[0] == "int":
            self.next()
            return Const(int(tok[1]))
        if tok[0] == "ident":
            name = self.next()[1]
            if self.at("("):
                self.next()
                args = []
                if not self.at(")"):
                    args.append(self.expr())
                    while self.at(","):
                        self.next()
                        args.append(self.expr())
                self.expect(")")
                if name == "abs":
                    if len(args) != 1:
                        self.error("abs takes exactly one argument", tok)
                    return Unary("abs", args[0])
                return Call(name, tuple(args))
            if self.at("["):
                self.next()
                idx = self.expr()
                self.expect("]")
                return Index(name, idx)
            return Var(name)
        if self.at("("):
            self.next()
            inner = self.expr()
            self.expect(")")
            return inner
        self.error(f"expected expression, found {tok[1] or 'end of input'!r}")


def renumber(program: Program) -> Program:
    """Assign dense pre-order statement ids starting at 0."""
    counter = iter(range(1 << 30))

    def number(body):
        out = []
        for stmt in body:
            sid = next(counter)
            if isinstance(stmt, If):
                then = number(stmt.then)
                orelse = number(stmt.orelse)
                out.append(If(sid, stmt.cond, then, orelse))
            elif isinstance(stmt, While):
                out.append(While(sid, stmt.cond, number(stmt.body)))
            else:
                out.append(replace(stmt, sid=sid))
        return tuple(out)

    functions = tuple(FunctionDef(fn.name, fn.params, number(fn.body)) for fn in program.functions)
    return Program(functions, program.entry, program.int_width)


def parse_program(text: str) -> Program:
    """Parse RLang source into a Program with dense pre-order StmtIds."""
    return renumber(_Parser(text).program())


def parse_expr(text: str):
    """Parse a standalone expression (handy in tests and the REPL)."""
    p = _Parser(text)
    e = p.expr()
    if p.peek()[0] != "eof":
        p.error("trailing input after expression")
    return e


def parse_stmt(text: str, sid: int = 0):
    p = _Parser(text)
    s = p.statement()
    if p.peek()[0] != "eof":
        p.error("trailing input after statement")
    return replace(s, sid=sid)
