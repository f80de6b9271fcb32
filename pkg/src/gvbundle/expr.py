"""Tokenizer and recursive-descent parser for the arithmetic expression grammar.

    expr   := ['-'] term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := base ('^' nonneg-int)?
    base   := rational | identifier | '(' expr ')'
    rational := int ('/' positive-int)?

The leading unary minus is an extension; everything else is bit-exact.
Parsing produces a small tuple AST which callers fold into whatever algebra
they need (coefficients, graded series).
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Callable, TypeVar

T = TypeVar("T")

_TOKEN = re.compile(r"\s*(?:(?P<int>\d+)|(?P<id>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))")


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, pos: int, text: str = ""):
        self.pos = pos
        self.text = text
        super().__init__(f"{message} at position {pos}")


class UndeclaredSymbolError(ValueError):
    def __init__(self, name: str, pos: int | None = None):
        self.name = name
        self.pos = pos
        where = f" at position {pos}" if pos is not None else ""
        super().__init__(f"undeclared symbol {name!r}{where}")


def tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", bad, text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self, k: int = 0):
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str):
        raise ExprSyntaxError(message, self.peek()[2], self.text)

    def expect(self, value: str):
        kind, val, pos = self.peek()
        if val != value or kind != "op":
            self.error(f"expected {value!r}, found {val or 'end of input'!r}")
        self.take()

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            self.error(f"unexpected token {self.peek()[1]!r}")
        return node

    def expr(self):
        kind, val, pos = self.peek()
        if kind == "op" and val == "-":
            self.take()
            node = ("neg", self.term())
        else:
            node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            rhs = self.term()
            node = ("add" if op == "+" else "sub", node, rhs)
        return node

    def term(self):
        node = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            rhs = self.factor()
            node = ("mul" if op == "*" else "div", node, rhs)
        return node

    def factor(self):
        node = self.base()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            kind, val, pos = self.peek()
            if kind != "int":
                self.error("exponent must be a non-negative integer")
            self.take()
            node = ("pow", node, int(val))
        return node

    def base(self):
        kind, val, pos = self.peek()
        if kind == "int":
            self.take()
            num = int(val)
            if self.peek()[1] == "/" and self.peek(1)[0] == "int":
                den = int(self.peek(1)[1])
                if den == 0:
                    raise ExprSyntaxError("zero denominator in rational literal", self.peek(1)[2], self.text)
                self.take()
                self.take()
                return ("num", Fraction(num, den))
            return ("num", Fraction(num))
        if kind == "id":
            self.take()
            return ("sym", val, pos)
        if kind == "op" and val == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        self.error(f"unexpected {val or 'end of input'!r}")


def parse_ast(text: str):
    return _Parser(text).parse()


def fold(node, *, num: Callable[[Fraction], T], sym: Callable[[str, int], T]) -> T:
    """Evaluate an AST bottom-up with the operators of the target algebra."""
    tag = node[0]
    if tag == "num":
        return num(node[1])
    if tag == "sym":
        return sym(node[1], node[2])
    if tag == "neg":
        return -fold(node[1], num=num, sym=sym)
    if tag == "pow":
        return fold(node[1], num=num, sym=sym) ** node[2]
    a = fold(node[1], num=num, sym=sym)
    b = fold(node[2], num=num, sym=sym)
    if tag == "add":
        return a + b
    if tag == "sub":
        return a - b
    if tag == "mul":
        return a * b
    if tag == "div":
        return a / b
    raise ValueError(f"unknown node {tag}")


def symbols_of(node) -> list[tuple[str, int]]:
    if node[0] == "sym":
        return [(node[1], node[2])]
    if node[0] == "num":
        return []
    out = []
    for child in node[1:]:
        if isinstance(child, tuple):
            out.extend(symbols_of(child))
    return out
