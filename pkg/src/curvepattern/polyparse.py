"""Recursive-descent parser for the polynomial expression language.

    expr     := sign? term (('+'|'-') term)*
    term     := factor ('*'? factor)*
    factor   := primary ('^' uint)?
    primary  := rational | 't' | '(' expr ')'
    rational := int ('/' uint)?

A leading sign on an expression is accepted so that rendered polynomials
with a negative leading coefficient parse back.  Exponents are allowed on
parenthesised groups as well as on ``t``.
"""
from __future__ import annotations

from fractions import Fraction

from .polyalg import RatPoly


class PolySyntaxError(SyntaxError):
    """Malformed polynomial text; ``offset`` is a 0-based byte offset."""

    def __init__(self, msg: str, text: str, offset: int):
        super().__init__(f"{msg} at byte {offset}")
        self.msg = msg
        self.text = text
        self.offset = offset


class UnsupportedVariable(PolySyntaxError):
    """An identifier other than ``t`` appeared."""


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.raw = text.encode("utf-8")
        self.pos = 0

    def error(self, msg, cls=PolySyntaxError, pos=None):
        raise cls(msg, self.text, self.pos if pos is None else pos)

    def skip_ws(self):
        while self.pos < len(self.raw) and self.raw[self.pos] in b" \t\r\n":
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        if self.pos >= len(self.raw):
            return ""
        return chr(self.raw[self.pos])

    def take(self, ch: str):
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def uint(self) -> int:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.raw) and 48 <= self.raw[self.pos] <= 57:
            self.pos += 1
        if start == self.pos:
            self.error("expected unsigned integer")
        return int(self.raw[start:self.pos])

    def parse(self) -> RatPoly:
        if not self.peek():
            self.error("empty expression")
        p = self.expr()
        if self.peek():
            self.error(f"unexpected {self.peek()!r}")
        return p

    def expr(self) -> RatPoly:
        neg = False
        if self.peek() in "+-" and self.peek():
            neg = self.peek() == "-"
            self.pos += 1
        acc = self.term()
        if neg:
            acc = -acc
        while self.peek() and self.peek() in "+-":
            op = self.peek()
            self.pos += 1
            rhs = self.term()
            acc = acc + rhs if op == "+" else acc - rhs
        return acc

    def _starts_factor(self, ch: str) -> bool:
        return bool(ch) and (ch.isdigit() or ch == "(" or ch.isalpha() or ch == "_")

    def term(self) -> RatPoly:
        acc = self.factor()
        while True:
            ch = self.peek()
            if ch == "*":
                self.pos += 1
                acc = acc * self.factor()
            elif self._starts_factor(ch):
                acc = acc * self.factor()
            else:
                return acc

    def factor(self) -> RatPoly:
        base = self.primary()
        if self.peek() == "^":
            self.pos += 1
            base = base ** self.uint()
        return base

    def primary(self) -> RatPoly:
        ch = self.peek()
        if not ch:
            self.error("unexpected end of input")
        if ch.isdigit():
            num = self.uint()
            if self.peek() == "/":
                self.pos += 1
                at = self.pos
                den = self.uint()
                if den == 0:
                    self.error("zero denominator", pos=at)
                return RatPoly([Fraction(num, den)])
            return RatPoly([num])
        if ch == "(":
            self.pos += 1
            inner = self.expr()
            self.take(")")
            return inner
        if ch.isalpha() or ch == "_" or ord(ch) >= 128:
            start = self.pos
            while self.pos < len(self.raw):
                c = self.raw[self.pos]
                if chr(c).isalnum() or c == ord("_") or c >= 128:
                    self.pos += 1
                else:
                    break
            name = self.raw[start:self.pos].decode("utf-8", "replace")
            if name != "t":
                self.error(f"unsupported variable {name!r}", UnsupportedVariable, start)
            return RatPoly([0, 1])
        self.error(f"unexpected {ch!r}")


def parse_poly(text: str) -> RatPoly:
    """Parse a polynomial in ``t`` with exact rational coefficients."""
    return _Parser(text).parse()
