"""Recursive-descent parser for coefficient expressions.

Grammar (EBNF, also documented in the README):

    expr    := term (("+" | "-") term)*
    term    := factor (("*" | "/") factor)*
    factor  := atomneg ("^" intlit)?
    atomneg := "-" atomneg | atom
    intlit  := ["-"] digits
    atom    := number | "x" | "i" | coeff | func "(" expr ")" | "(" expr ")"
    coeff   := "a1" .. "a9"
    func    := "sin" | "cos" | "exp" | "sinh" | "cosh" | "sqrt"

Unary minus binds tighter than "^", so -x^2 means (-x)^2.  Exponents are
integer literals (negative allowed).  "i" is the imaginary unit.  Subtrees
whose operands are all constants fold at parse time, which is what makes the
canonical printer round-trip exactly.
"""

from __future__ import annotations

import re

from .coeffexpr import (
    Add,
    Const,
    Div,
    Expr,
    FuncCall,
    IntPow,
    Mul,
    Sub,
    Var,
    CoeffRef,
    FUNC_NAMES,
    _is_const,
)
from .errors import ExpressionSyntaxError

_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_COEFF = re.compile(r"a[1-9]$")


def _fold(cls, a, b):
    """Build the raw node, folding only when both operands are constants."""
    if _is_const(a) and _is_const(b):
        if cls is Add:
            return Const(a.value + b.value)
        if cls is Sub:
            return Const(a.value - b.value)
        if cls is Mul:
            return Const(a.value * b.value)
        if cls is Div and b.value != 0:
            return Const(a.value / b.value)
    return cls(a, b)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, expected):
        found = self.text[self.pos : self.pos + 1] or "<end of input>"
        raise ExpressionSyntaxError(self.pos, expected, found)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos : self.pos + 1]

    def take(self, ch: str) -> bool:
        if self.peek() == ch:
            self.pos += 1
            return True
        return False

    def parse(self) -> Expr:
        self.skip_ws()
        if self.pos >= len(self.text):
            self.error({"expression"})
        e = self.expr()
        self.skip_ws()
        if self.pos < len(self.text):
            self.error({"operator", "<end of input>"})
        return e

    def expr(self) -> Expr:
        e = self.term()
        while True:
            c = self.peek()
            if c == "+":
                self.pos += 1
                e = _fold(Add, e, self.term())
            elif c == "-":
                self.pos += 1
                e = _fold(Sub, e, self.term())
            else:
                return e

    def term(self) -> Expr:
        e = self.factor()
        while True:
            c = self.peek()
            if c == "*":
                self.pos += 1
                e = _fold(Mul, e, self.factor())
            elif c == "/":
                self.pos += 1
                e = _fold(Div, e, self.factor())
            else:
                return e

    def factor(self) -> Expr:
        e = self.atomneg()
        if self.peek() == "^":
            self.pos += 1
            k = self.intlit()
            from .coeffexpr import intpow

            if _is_const(e):
                return intpow(e, k)
            return IntPow(e, k)
        return e

    def atomneg(self) -> Expr:
        if self.peek() == "-":
            self.pos += 1
            inner = self.atomneg()
            if _is_const(inner):
                return Const(-inner.value)
            return Mul(Const(-1), inner)
        return self.atom()

    def intlit(self) -> int:
        self.skip_ws()
        start = self.pos
        if self.take("-"):
            self.skip_ws()
        m = re.match(r"\d+", self.text[self.pos :])
        if not m:
            self.pos = start
            self.error({"integer exponent"})
        self.pos += m.end()
        return int(self.text[start : self.pos].replace(" ", ""))

    def atom(self) -> Expr:
        self.skip_ws()
        if self.pos >= len(self.text):
            self.error({"number", "identifier", "("})
        c = self.text[self.pos]
        if c == "(":
            self.pos += 1
            e = self.expr()
            if not self.take(")"):
                self.error({")"})
            return e
        m = _NUMBER.match(self.text, self.pos)
        if m:
            self.pos = m.end()
            return Const(float(m.group()))
        m = _IDENT.match(self.text, self.pos)
        if m:
            name = m.group()
            self.pos = m.end()
            if name == "x":
                return Var()
            if name == "i":
                return Const(1j)
            if _COEFF.match(name):
                return CoeffRef(name)
            if name in FUNC_NAMES:
                if not self.take("("):
                    self.error({"("})
                e = self.expr()
                if not self.take(")"):
                    self.error({")"})
                return FuncCall(name, e)
            self.error({"x", "i", "a1..a9"} | set(FUNC_NAMES))
        self.error({"number", "identifier", "("})


def parse(text: str) -> Expr:
    """Parse an expression string into the IR.

    Raises :class:`ExpressionSyntaxError` with the byte offset and the set of
    tokens that would have been accepted there.
    """
    if not isinstance(text, str) or not text.strip():
        raise ExpressionSyntaxError(0, {"expression"}, "<empty>")
    return _Parser(text).parse()
