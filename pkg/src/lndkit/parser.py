"""Text grammar for polynomial and rational-function expressions.

    expr    := ['+'|'-'] term (('+'|'-') term)*
    term    := factor (('*'|'/') factor)*
    factor  := base ('^' nonneg-int)?
    base    := rational-literal | identifier | '(' expr ')'
    rational-literal := int ('/' positive-int)?

A rational literal is only recognized where a base may start and not right
after '/', so ``x/2/5`` is ``x/10`` while ``3/2*x`` is ``(3/2)*x``.
"""

from __future__ import annotations

from dataclasses import dataclass

from gmpy2 import mpq

from lndkit.errors import ParseError
from lndkit.poly import Poly, RatFn, VarSet


@dataclass(frozen=True)
class Token:
    kind: str  # "int", "ident", "op", "end"
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line, col = line + 1, 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isascii() and ch.isalpha():
            j = i
            while j < n and text[j].isascii() and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("ident", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch in "+-*/^()":
            tokens.append(Token("op", ch, line, col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("end", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str, varset: VarSet):
        self.toks = tokenize(text)
        self.pos = 0
        self.vs = varset

    def peek(self) -> Token:
        return self.toks[self.pos]

    def take(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        return ParseError(msg, tok.line, tok.col)

    def at(self, text):
        t = self.peek()
        return t.kind == "op" and t.text == text

    def parse(self) -> RatFn:
        if self.peek().kind == "end":
            raise self.error("empty expression")
        value = self.expr()
        if self.peek().kind != "end":
            raise self.error(f"unexpected {self.peek().text!r}")
        return value

    def expr(self) -> RatFn:
        negate = False
        if self.at("-") or self.at("+"):
            negate = self.take().text == "-"
        value = self.term()
        if negate:
            value = -value
        while self.at("+") or self.at("-"):
            op = self.take().text
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self) -> RatFn:
        value = self.factor(after_slash=False)
        while self.at("*") or self.at("/"):
            op = self.take()
            rhs = self.factor(after_slash=op.text == "/")
            if op.text == "*":
                value = value * rhs
            else:
                if rhs.is_zero():
                    raise ParseError("division by the zero polynomial", op.line, op.col)
                value = value / rhs
        return value

    def factor(self, after_slash: bool) -> RatFn:
        value = self.base(after_slash)
        if self.at("^"):
            self.take()
            t = self.peek()
            if t.kind != "int":
                raise self.error("expected a nonnegative integer exponent")
            self.take()
            value = value ** int(t.text)
        return value

    def base(self, after_slash: bool) -> RatFn:
        t = self.peek()
        if t.kind == "int":
            self.take()
            q = mpq(int(t.text))
            if not after_slash and self.at("/") and self.toks[self.pos + 1].kind == "int":
                slash = self.take()
                d = self.take()
                if int(d.text) == 0:
                    raise ParseError("zero denominator in rational literal", slash.line, slash.col)
                q = mpq(int(t.text), int(d.text))
            return RatFn(Poly.constant(self.vs, q), reduced=True)
        if t.kind == "ident":
            self.take()
            if t.text not in self.vs:
                raise ParseError(f"unknown variable {t.text!r}", t.line, t.col)
            return RatFn(Poly.var(self.vs, t.text), reduced=True)
        if self.at("("):
            self.take()
            value = self.expr()
            if not self.at(")"):
                raise self.error("expected ')'")
            self.take()
            return value
        if t.kind == "end":
            raise self.error("unexpected end of input")
        raise self.error(f"unexpected {t.text!r}")


def parse_expr(text: str, varset: VarSet) -> RatFn:
    """Parse text into an exact rational function over varset."""
    return _Parser(text, varset).parse()


def parse_poly(text: str, varset: VarSet) -> Poly:
    """Parse text that must denote a polynomial."""
    value = parse_expr(text, varset)
    if not value.den.is_one():
        raise ParseError(f"expected a polynomial, got a rational function in {text!r}")
    return value.num
