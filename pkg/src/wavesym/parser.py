"""Recursive-descent parser for the expression grammar.

Grammar (whitespace insignificant)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | "+" unary | power
    power   := atom ("^" unary)?          # right-associative
    atom    := number | name | func "(" expr ")" | "(" expr ")"

Names: ``x<i>`` coordinates, ``u``, ``u_<i>`` first derivatives,
``sin cos exp ln`` functions, anything else matching
``[A-Za-z][A-Za-z0-9]*`` is a symbolic constant.  Exponents must be
constant (numbers and symbolic constants only).
"""
from __future__ import annotations

import re
from fractions import Fraction

from .expr import FUNCTIONS, U, Expr, Symbol, apply_function, const, num, power, sym

__all__ = ["ParseError", "parse"]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?|\.\d+)|(?P<name>[A-Za-z][A-Za-z0-9]*(?:_\d+)?)|(?P<op>[-+*/^()]))"
)


class ParseError(ValueError):
    """Syntax or range error at a character offset of the input."""

    def __init__(self, message: str, offset: int, text: str = ""):
        self.message = message
        self.offset = offset
        self.text = text
        super().__init__(f"{message} at offset {offset}")

    def caret(self) -> str:
        """The input with a caret under the offending position."""
        return f"{self.text}\n{' ' * self.offset}^"


def _tokenize(text: str) -> list:
    toks = []
    pos = 0
    end = len(text)
    while True:
        while pos < end and text[pos].isspace():
            pos += 1
        if pos >= end:
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        start = m.start(kind)
        toks.append((kind, m.group(kind), start))
        pos = m.end()
    toks.append(("end", "", end))
    return toks


class _Parser:
    def __init__(self, text: str, n: int):
        self.text = text
        self.n = n
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        return ParseError(msg, tok[2], self.text)

    def expect(self, op):
        t = self.peek()
        if t[0] != "op" or t[1] != op:
            what = "end of input" if t[0] == "end" else repr(t[1])
            raise self.error(f"expected {op!r}, found {what}")
        return self.take()

    def parse(self) -> Expr:
        e = self.expr()
        t = self.peek()
        if t[0] != "end":
            raise self.error(f"unexpected {t[1]!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while True:
            t = self.peek()
            if t[0] == "op" and t[1] in "+-":
                self.take()
                r = self.term()
                e = e + r if t[1] == "+" else e - r
            else:
                return e

    def term(self) -> Expr:
        e = self.unary()
        while True:
            t = self.peek()
            if t[0] == "op" and t[1] in "*/":
                self.take()
                r = self.unary()
                if t[1] == "*":
                    e = e * r
                else:
                    if r.is_zero_structural():
                        raise self.error("division by zero", t)
                    e = e / r
            else:
                return e

    def unary(self) -> Expr:
        t = self.peek()
        if t[0] == "op" and t[1] in "+-":
            self.take()
            e = self.unary()
            return -e if t[1] == "-" else e
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        t = self.peek()
        if t[0] == "op" and t[1] == "^":
            self.take()
            at = self.peek()
            ex = self.unary()
            if any(s.kind != "c" for s in ex.free_symbols) or any(
                type(a) is not Symbol for a in ex.atoms()
            ):
                raise self.error("exponent must be a number or symbolic constant", at)
            try:
                return power(base, ex)
            except ZeroDivisionError:
                raise self.error("zero raised to a non-positive power", t) from None
        return base

    def atom(self) -> Expr:
        t = self.take()
        kind, val, pos = t
        if kind == "num":
            return num(Fraction(val))
        if kind == "name":
            return self.name(val, t)
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "end":
            raise self.error("unexpected end of input", t)
        raise self.error(f"unexpected {val!r}", t)

    def name(self, val: str, tok) -> Expr:
        if val in FUNCTIONS:
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            if val == "ln":
                q = arg.as_number()
                if q is not None and q <= 0:
                    raise self.error("ln of a non-positive constant", tok)
            return apply_function(val, arg)
        if "_" in val:
            head, idx = val.split("_", 1)
            if head != "u":
                raise self.error(f"invalid name {val!r}", tok)
            return sym(Symbol("p", self.index(int(idx), val, tok)))
        if val == "u":
            return sym(U)
        m = re.fullmatch(r"x(\d+)", val)
        if m:
            return sym(Symbol("x", self.index(int(m.group(1)), val, tok)))
        return const(val)

    def index(self, i: int, val: str, tok) -> int:
        if i > self.n:
            raise self.error(f"index of {val!r} out of range for n={self.n}", tok)
        return i


def parse(text: str, n: int) -> Expr:
    """Parse ``text`` into a normalized Expr over x0..x<n>, u, u_0..u_<n>."""
    if n < 2:
        raise ValueError(f"dimension n must be >= 2, got {n}")
    return _Parser(text, n).parse()
