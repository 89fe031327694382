"""Infix expression grammar shared by problem files and the coefficient field.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | '+' unary | power
    power  := atom ('^' INT)?
    atom   := INT | IDENT | '(' expr ')'

There is no implicit multiplication.  ``^`` takes a nonnegative integer
literal and binds tighter than unary minus, so ``-x^2`` is ``-(x^2)``.
Evaluation is generic: the caller supplies a lookup for identifiers and the
values only need the usual arithmetic dunders.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Iterator, Union


class ExpressionSyntaxError(ValueError):
    """Raised on malformed expression text; ``pos`` is a 0-based offset."""

    def __init__(self, message: str, pos: int, text: str = ""):
        self.pos = pos
        self.text = text
        super().__init__(f"{message} at offset {pos}")


class UnknownIdentifierError(KeyError):
    def __init__(self, name: str, pos: int):
        self.name = name
        self.pos = pos
        super().__init__(f"unknown identifier '{name}' at offset {pos}")

    def __str__(self) -> str:
        return self.args[0]


@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Var:
    name: str
    pos: int


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"
    pos: int


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exp: int


Node = Union[Num, Var, Neg, BinOp, Pow]

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(\S))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        if m.group(1) is not None:
            out.append(("int", m.group(1), m.start(1)))
        elif m.group(2) is not None:
            out.append(("ident", m.group(2), m.start(2)))
        elif m.group(3) is not None:
            ch = m.group(3)
            if ch not in "+-*/^()":
                raise ExpressionSyntaxError(f"unexpected character {ch!r}", m.start(3), text)
            out.append(("op", ch, m.start(3)))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, msg: str, pos: int):
        raise ExpressionSyntaxError(msg, pos, self.text)

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            _, op, pos = self.take()
            node = BinOp(op, node, self.term(), pos)
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            _, op, pos = self.take()
            node = BinOp(op, node, self.unary(), pos)
        return node

    def unary(self) -> Node:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Neg(self.unary())
        if kind == "op" and val == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        kind, val, pos = self.peek()
        if kind == "op" and val == "^":
            self.take()
            kind, val, pos = self.take()
            if kind != "int":
                self.fail("exponent must be a nonnegative integer literal", pos)
            nxt = self.peek()
            if nxt[:2] == ("op", "^"):
                self.fail("chained '^' is ambiguous; use parentheses", nxt[2])
            return Pow(base, int(val))
        return base

    def atom(self) -> Node:
        kind, val, pos = self.take()
        if kind == "int":
            return Num(Fraction(int(val)))
        if kind == "ident":
            return Var(val, pos)
        if kind == "op" and val == "(":
            node = self.expr()
            kind2, val2, pos2 = self.take()
            if (kind2, val2) != ("op", ")"):
                self.fail("expected ')'", pos2)
            return node
        if kind == "end":
            self.fail("unexpected end of expression", pos)
        self.fail(f"unexpected token {val!r}", pos)
        raise AssertionError  # unreachable


def parse_expression(text: str) -> Node:
    p = _Parser(text)
    if p.peek()[0] == "end":
        p.fail("empty expression", 0)
    node = p.expr()
    kind, val, pos = p.peek()
    if kind != "end":
        p.fail(f"unexpected token {val!r}", pos)
    return node


def identifiers(node: Node) -> Iterator[Var]:
    """Yield every identifier occurrence, left to right."""
    if isinstance(node, Var):
        yield node
    elif isinstance(node, Neg):
        yield from identifiers(node.arg)
    elif isinstance(node, BinOp):
        yield from identifiers(node.left)
        yield from identifiers(node.right)
    elif isinstance(node, Pow):
        yield from identifiers(node.base)


def evaluate(node: Node, lookup: Callable[[str, int], Any], one: Any = None) -> Any:
    """Evaluate ``node``; ``lookup(name, pos)`` resolves identifiers.

    Integer literals are passed through as ``Fraction`` unless ``one`` is
    given, in which case they are lifted as ``one * value``.
    """

    def rec(n: Node) -> Any:
        if isinstance(n, Num):
            return n.value if one is None else one * n.value
        if isinstance(n, Var):
            return lookup(n.name, n.pos)
        if isinstance(n, Neg):
            return -rec(n.arg)
        if isinstance(n, Pow):
            base = rec(n.base)
            if n.exp == 0:
                return base ** 0 if one is None else one
            return base ** n.exp
        a = rec(n.left)
        b = rec(n.right)
        if n.op == "+":
            return a + b
        if n.op == "-":
            return a - b
        if n.op == "*":
            return a * b
        try:
            return a / b
        except ZeroDivisionError:
            raise ZeroDivisionError(f"division by zero at offset {n.pos}") from None

    return rec(node)


def line_col(text: str, pos: int) -> tuple[int, int]:
    """1-based (line, column) of an offset."""
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col
