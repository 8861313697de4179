"""Parser for the expression grammar.

    expr     := term (("+"|"-") term)*
    term     := factor (("*"|"/") factor)*
    factor   := atom ("^" exponent)?
    atom     := NUMBER | IDENT | "(" expr ")" | FUNC "(" expr ")"
    FUNC     := ln | exp | sin | cos | sqrt        (sqrt(u) -> u^(1/2))
    exponent := NUMBER | "(" ("-")? NUMBER ("/" NUMBER)? ")"
    NUMBER   := integer | integer "/" integer | decimal

Unary minus is allowed before atoms; decimals become exact rationals.
Parsing normalizes, so parse(print(e)) reproduces e.
"""

from __future__ import annotations

from fractions import Fraction as Q

from . import expr as ex

__all__ = ["parse_expr", "ParseError"]

_FUNCS = ("ln", "exp", "sin", "cos", "sqrt")


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class _Lexer:
    def __init__(self, source: str):
        self.src = source
        self.pos = 0
        self.tokens = []
        self._scan()
        self.idx = 0

    def _scan(self):
        src, n = self.src, len(self.src)
        i = 0
        while i < n:
            ch = src[i]
            if ch.isspace():
                i += 1
                continue
            if ch.isdigit() or (ch == "." and i + 1 < n and src[i + 1].isdigit()):
                j = i
                seen_dot = False
                while j < n and (src[j].isdigit() or (src[j] == "." and not seen_dot)):
                    if src[j] == ".":
                        seen_dot = True
                    j += 1
                self.tokens.append(("num", src[i:j], i))
                i = j
                continue
            if ch.isalpha() or ch == "_":
                j = i
                while j < n and (src[j].isalnum() or src[j] == "_"):
                    j += 1
                self.tokens.append(("ident", src[i:j], i))
                i = j
                continue
            if ch in "+-*/^()":
                self.tokens.append((ch, ch, i))
                i += 1
                continue
            raise ParseError(f"unexpected character {ch!r}", i)
        self.tokens.append(("end", "", n))

    def peek(self):
        return self.tokens[self.idx]

    def next(self):
        tok = self.tokens[self.idx]
        if tok[0] != "end":
            self.idx += 1
        return tok


def _number_value(text: str, pos: int) -> Q:
    try:
        if "." in text:
            intpart, fracpart = text.split(".", 1)
            scale = 10 ** len(fracpart)
            return Q(int(intpart or "0") * scale + int(fracpart or "0"), scale)
        return Q(int(text))
    except ValueError:
        raise ParseError(f"bad number {text!r}", pos) from None


class _Parser:
    def __init__(self, source: str, ctx=None):
        self.lex = _Lexer(source)
        self.ctx = ctx

    def parse(self):
        e = self.expr()
        kind, text, pos = self.lex.peek()
        if kind != "end":
            raise ParseError(f"unexpected {text!r}", pos)
        return e

    def expr(self):
        e = self.term()
        while True:
            kind, _, _ = self.lex.peek()
            if kind == "+":
                self.lex.next()
                e = ex.add(e, self.term())
            elif kind == "-":
                self.lex.next()
                e = ex.sub(e, self.term())
            else:
                return e

    def term(self):
        e = self.factor()
        while True:
            kind, _, _ = self.lex.peek()
            if kind == "*":
                self.lex.next()
                e = ex.mul(e, self.factor())
            elif kind == "/":
                self.lex.next()
                e = ex.div(e, self.factor())
            else:
                return e

    def factor(self):
        negate = False
        while self.lex.peek()[0] == "-":
            self.lex.next()
            negate = not negate
        e = self.atom()
        if self.lex.peek()[0] == "^":
            self.lex.next()
            e = ex.pow_(e, self.exponent())
        return ex.neg(e) if negate else e

    def atom(self):
        kind, text, pos = self.lex.next()
        if kind == "num":
            value = _number_value(text, pos)
            # NUMBER := integer "/" integer binds tighter only for pure
            # integer/integer pairs; at term level the "/" token already
            # handles it identically, so no lookahead is needed here
            return ex.num(value)
        if kind == "ident":
            if text in _FUNCS:
                k2, _, p2 = self.lex.next()
                if k2 != "(":
                    raise ParseError(f"expected '(' after {text}", p2)
                inner = self.expr()
                k3, _, p3 = self.lex.next()
                if k3 != ")":
                    raise ParseError("expected ')'", p3)
                return ex.fn(text, inner)
            if self.ctx is not None and not self.ctx.knows(text):
                raise ParseError(f"undeclared identifier {text!r}", pos)
            return ex.sym(text)
        if kind == "(":
            inner = self.expr()
            k2, _, p2 = self.lex.next()
            if k2 != ")":
                raise ParseError("expected ')'", p2)
            return inner
        raise ParseError(f"unexpected {text!r}" if text else "unexpected end of input", pos)

    def exponent(self):
        kind, text, pos = self.lex.peek()
        if kind == "num":
            self.lex.next()
            value = _number_value(text, pos)
            # greedy integer/integer rational exponent
            if value.denominator == 1 and "." not in text and self.lex.peek()[0] == "/":
                save = self.lex.idx
                self.lex.next()
                k2, t2, p2 = self.lex.peek()
                if k2 == "num" and "." not in t2:
                    self.lex.next()
                    return Q(int(text), int(t2))
                self.lex.idx = save
            return value
        if kind == "(":
            self.lex.next()
            negate = False
            if self.lex.peek()[0] == "-":
                self.lex.next()
                negate = True
            k2, t2, p2 = self.lex.next()
            if k2 != "num":
                raise ParseError("expected a number in exponent", p2)
            value = _number_value(t2, p2)
            if self.lex.peek()[0] == "/":
                self.lex.next()
                k3, t3, p3 = self.lex.next()
                if k3 != "num" or "." in t3:
                    raise ParseError("expected an integer denominator", p3)
                value = value / int(t3)
            k4, _, p4 = self.lex.next()
            if k4 != ")":
                raise ParseError("expected ')' in exponent", p4)
            return -value if negate else value
        raise ParseError("expected an exponent", pos)


def parse_expr(source: str, ctx=None) -> ex.Expr:
    """Parse source into a normalized Expr; identifiers are checked against
    ctx when one is supplied."""
    return _Parser(source, ctx).parse()
