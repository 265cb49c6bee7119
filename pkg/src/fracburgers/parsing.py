"""Recursive-descent parser for the expression grammar.

::

    expr    := term (('+'|'-') term)*
    term    := factor (('*'|'/') factor)*
    factor  := base ('^' factor)?
    base    := NUMBER | 'pi' | 'e' | 'x' | FUNC '(' expr ')' | '(' expr ')' | '-' base
    FUNC    := 'sin'|'cos'|'tan'|'exp'|'ln'|'sinh'|'cosh'|'tanh'
    NUMBER  := decimal literal, optional fraction and exponent

'^' is right-associative.  Unary minus is part of ``base``, so it binds
tighter than the base position of '^': ``-x^2`` parses as ``(-x)^2``.
Numeric literals are stored exactly (decimal literals are rationals).

Identifiers other than pi, e, x and the function names are rejected:
the expression language has exactly one free variable.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .expressions import (
    Add,
    Const,
    Div,
    Expr,
    Func,
    Mul,
    Neg,
    Pow,
    Rational,
    Sub,
    Var,
    FUNCTION_NAMES,
    ExpressionError,
)

__all__ = ["parse", "ParseError", "UnknownIdentifierError"]


class ParseError(ExpressionError):
    """Syntax error with the byte offset and the set of expected tokens."""

    def __init__(self, message, position, expected=()):
        self.position = position
        self.expected = tuple(sorted(expected))
        detail = f"{message} at offset {position}"
        if self.expected:
            detail += " (expected " + " or ".join(self.expected) + ")"
        super().__init__(detail)


class UnknownIdentifierError(ParseError):
    """An identifier other than pi, e, x, or a function name."""


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+(\.\d+)?([eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)

_CONSTANTS = ("pi", "e")


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(
                f"unexpected character {text[pos]!r}",
                pos,
                expected=("number", "identifier", "operator"),
            )
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.index = 0

    def peek(self):
        return self.tokens[self.index]

    def advance(self):
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect_op(self, symbol):
        kind, value, pos = self.peek()
        if kind == "op" and value == symbol:
            return self.advance()
        raise ParseError(f"found {value or 'end of input'!r}", pos, expected=(symbol,))

    def parse(self) -> Expr:
        result = self.expr()
        kind, value, pos = self.peek()
        if kind != "eof":
            raise ParseError(
                f"trailing input {value!r}", pos, expected=("+", "-", "*", "/", "^", "end of input")
            )
        return result

    def expr(self) -> Expr:
        node = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.advance()
                right = self.term()
                node = Add(node, right) if value == "+" else Sub(node, right)
            else:
                return node

    def term(self) -> Expr:
        node = self.factor()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.advance()
                right = self.factor()
                node = Mul(node, right) if value == "*" else Div(node, right)
            else:
                return node

    def factor(self) -> Expr:
        node = self.base()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.advance()
            return Pow(node, self.factor())
        return node

    def base(self) -> Expr:
        kind, value, pos = self.advance()
        if kind == "number":
            return Rational(Fraction(value))
        if kind == "ident":
            if value in _CONSTANTS:
                return Const(value)
            if value == "x":
                return Var()
            if value in FUNCTION_NAMES:
                self.expect_op("(")
                inner = self.expr()
                self.expect_op(")")
                return Func(value, inner)
            raise UnknownIdentifierError(
                f"unknown identifier {value!r}",
                pos,
                expected=("x", "pi", "e") + FUNCTION_NAMES,
            )
        if kind == "op":
            if value == "(":
                inner = self.expr()
                self.expect_op(")")
                return inner
            if value == "-":
                return Neg(self.base())
        raise ParseError(
            f"found {value or 'end of input'!r}",
            pos,
            expected=("number", "identifier", "(", "-"),
        )


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree."""
    return _Parser(text).parse()
