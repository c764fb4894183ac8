"""Recursive-descent parser for the textual requirement syntax.

Grammar (lowest to highest precedence)::

    formula   := or_expr ("implies" formula)?
    or_expr   := and_expr ("or" and_expr)*
    and_expr  := until_expr ("and" until_expr)*
    until_expr:= unary ("until" interval unary)?
    unary     := "not" unary | "always" interval unary
               | "eventually" interval unary | atom
    atom      := "true" | "(" formula ")" | expr RELOP expr
    expr      := term (("+" | "-") term)*
    term      := factor ("*" factor)*        (one side must be a literal)
    factor    := NUMBER | IDENT | "abs" "(" expr ")" | "(" expr ")" | "-" factor
    interval  := "[" NUMBER "," NUMBER "]"
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .formula import (
    Abs,
    Always,
    And,
    Constant,
    Difference,
    Eventually,
    Expr,
    Formula,
    Implies,
    Interval,
    Not,
    Or,
    Predicate,
    Scale,
    SignalRef,
    StlError,
    Sum,
    TrueFormula,
    Until,
)

KEYWORDS = {"always", "eventually", "until", "not", "and", "or", "implies", "true", "abs"}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+|\n)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<op>->|<=|>=|==|!=|&&|\|\||=|<|>|\+|-|\*|/|\(|\)|\[|\]|,|!|&|\||~)
  """,
    re.VERBOSE,
)

_UNSUPPORTED = {"==", "!=", "=", "/", "!", "&&", "||", "&", "|", "~", "->"}


class StlSyntaxError(StlError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


@dataclass
class Token:
    kind: str  # num, ident, op, eof
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise StlSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        lexeme = m.group()
        if kind == "ws":
            if lexeme == "\n":
                line, col = line + 1, 1
            else:
                col += len(lexeme)
        else:
            tokens.append(Token(kind, lexeme, line, col))
            col += len(lexeme)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    # -- helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def error(self, message: str, tok: Token | None = None) -> StlSyntaxError:
        tok = tok or self.tok
        return StlSyntaxError(message, tok.line, tok.column)

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "ident") and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        tok = self.tok
        self.pos += 1
        return tok

    # -- formulas
    def parse(self) -> Formula:
        phi = self.formula()
        if self.tok.kind != "eof":
            if self.tok.kind == "op" and self.tok.text in _UNSUPPORTED:
                raise self.error(f"unknown operator {self.tok.text!r}")
            raise self.error(f"unexpected token {self.tok.text!r}")
        return phi

    def formula(self) -> Formula:
        left = self.or_expr()
        if self.at("implies"):
            self.pos += 1
            return Implies(left, self.formula())
        return left

    def or_expr(self) -> Formula:
        left = self.and_expr()
        while self.at("or"):
            self.pos += 1
            left = Or(left, self.and_expr())
        return left

    def and_expr(self) -> Formula:
        left = self.until_expr()
        while self.at("and"):
            self.pos += 1
            left = And(left, self.until_expr())
        return left

    def until_expr(self) -> Formula:
        left = self.unary()
        if self.at("until"):
            self.pos += 1
            interval = self.interval()
            return Until(interval, left, self.unary())
        return left

    def unary(self) -> Formula:
        tok = self.tok
        if self.at("not"):
            self.pos += 1
            return Not(self.unary())
        if self.at("always") or self.at("eventually"):
            self.pos += 1
            interval = self.interval()
            arg = self.unary()
            return Always(interval, arg) if tok.text == "always" else Eventually(interval, arg)
        if tok.kind == "ident" and tok.text not in KEYWORDS and self.peek().text == "[":
            raise self.error(f"unknown operator {tok.text!r}")
        return self.atom()

    def atom(self) -> Formula:
        if self.at("true"):
            self.pos += 1
            return TrueFormula()
        if self.at("("):
            # "(" may open a formula or an arithmetic expression; try the
            # formula reading first and fall back to a predicate.
            start = self.pos
            self.pos += 1
            first_error = None
            try:
                phi = self.formula()
                self.expect(")")
            except StlSyntaxError as exc:
                first_error = exc
                self.pos = start
            else:
                if not (self.tok.kind == "op" and self.tok.text in ("<", "<=", ">", ">=", "+", "-", "*")):
                    return phi
                self.pos = start
            try:
                return self.predicate()
            except StlSyntaxError as exc:
                # report whichever reading got further into the text
                if first_error is not None and (first_error.line, first_error.column) > (exc.line, exc.column):
                    raise first_error from None
                raise
        return self.predicate()

    def predicate(self) -> Predicate:
        lhs = self.expr()
        tok = self.tok
        if tok.kind == "op" and tok.text in ("<", "<=", ">", ">="):
            self.pos += 1
            return Predicate(lhs, tok.text, self.expr())
        if tok.kind == "op" and tok.text in _UNSUPPORTED:
            raise self.error(f"unknown operator {tok.text!r}")
        found = tok.text or "end of input"
        raise self.error(f"expected a comparison operator, found {found!r}")

    def interval(self) -> Interval:
        open_tok = self.expect("[")
        lo = self.signed_number()
        self.expect(",")
        hi = self.signed_number()
        self.expect("]")
        if lo < 0 or hi < 0:
            raise self.error(f"malformed interval [{lo:g},{hi:g}]: negative bound", open_tok)
        if lo > hi:
            raise self.error(f"malformed interval [{lo:g},{hi:g}]: lower bound exceeds upper bound", open_tok)
        return Interval(lo, hi)

    def signed_number(self) -> float:
        sign = 1.0
        if self.at("-"):
            self.pos += 1
            sign = -1.0
        if self.tok.kind != "num":
            raise self.error(f"expected a number, found {self.tok.text or 'end of input'!r}")
        value = float(self.tok.text)
        self.pos += 1
        return sign * value

    # -- arithmetic
    def expr(self) -> Expr:
        left = self.term()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            op = self.tok.text
            self.pos += 1
            right = self.term()
            left = Sum(left, right) if op == "+" else Difference(left, right)
        return left

    def term(self) -> Expr:
        left = self.factor()
        while self.at("*"):
            star = self.tok
            self.pos += 1
            right = self.factor()
            if isinstance(left, Constant):
                left = Scale(left.value, right)
            elif isinstance(right, Constant):
                left = Scale(right.value, left)
            else:
                raise self.error("multiplication requires a numeric literal operand", star)
        return left

    def factor(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.pos += 1
            return Constant(float(tok.text))
        if self.at("-"):
            self.pos += 1
            arg = self.factor()
            if isinstance(arg, Constant):
                return Constant(-arg.value)
            return Scale(-1.0, arg)
        if self.at("abs"):
            self.pos += 1
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return Abs(arg)
        if self.at("("):
            self.pos += 1
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "ident":
            if tok.text in KEYWORDS:
                raise self.error(f"unexpected keyword {tok.text!r}")
            self.pos += 1
            return SignalRef(tok.text)
        if tok.kind == "op" and tok.text in _UNSUPPORTED:
            raise self.error(f"unknown operator {tok.text!r}")
        raise self.error(f"unexpected token {tok.text or 'end of input'!r}")


def parse_stl(text: str) -> Formula:
    """Parse a requirement such as ``"always[0,20] (SPEED < 120)"``.

    Raises :class:`StlSyntaxError` carrying the line and column of the
    offending token.
    """
    return _Parser(text).parse()
