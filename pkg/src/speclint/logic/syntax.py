"""Textual dialect: tokenizer, recursive-descent parser and canonical printer.

Precedence from tightest to loosest: ``not``/``G``/``F`` (and ``U`` between
primaries), ``and``, ``or``, ``->`` (right associative), ``<->``.
``a <-> b`` is sugar for ``(a -> b) and (b -> a)``.
"""

from __future__ import annotations

import re
from fractions import Fraction

from speclint.logic.formula import (
    FALSE,
    TRUE,
    Always,
    And,
    Atom,
    Bottom,
    Eventually,
    Formula,
    FormulaError,
    Implies,
    Interval,
    Not,
    Or,
    Top,
    Until,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<num>\d+(?:\.\d*)?|\.\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><->|->|<=|>=|==|/\\|\\/|[<>()\[\],!/\-=])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"and", "or", "not", "true", "false", "G", "F", "U", "always", "eventually"}


class _Token:
    __slots__ = ("kind", "text", "line", "column")

    def __init__(self, kind, text, line, column):
        self.kind = kind
        self.text = text
        self.line = line
        self.column = column

    def __repr__(self):
        return f"{self.kind}:{self.text!r}@{self.line}:{self.column}"


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        if kind != "ws":
            if kind == "ident" and value in _KEYWORDS:
                kind = "kw"
            tokens.append(_Token(kind, value, line, pos - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rindex("\n") + 1
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.column)

    def accept(self, *texts) -> _Token | None:
        t = self.tok
        if t.kind in ("op", "kw") and t.text in texts:
            self.i += 1
            return t
        return None

    def expect(self, text):
        t = self.accept(text)
        if t is None:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return t

    def parse(self) -> Formula:
        f = self.iff()
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")
        return f

    def iff(self):
        f = self.imp()
        while self.accept("<->"):
            g = self.imp()
            f = And((Implies(f, g), Implies(g, f)))
        return f

    def imp(self):
        f = self.disj()
        if self.accept("->"):
            return Implies(f, self.imp())
        return f

    def disj(self):
        args = [self.conj()]
        while self.accept("or", "\\/"):
            args.append(self.conj())
        return args[0] if len(args) == 1 else Or(tuple(args))

    def conj(self):
        args = [self.unary()]
        while self.accept("and", "/\\"):
            args.append(self.unary())
        return args[0] if len(args) == 1 else And(tuple(args))

    def unary(self):
        if self.accept("not", "!"):
            return Not(self.unary())
        t = self.accept("G", "always", "F", "eventually")
        if t is not None:
            iv = self.interval()
            body = self.unary()
            return Always(iv, body) if t.text in ("G", "always") else Eventually(iv, body)
        return self.primary()

    def primary(self):
        f = self.simple()
        while self.accept("U"):
            iv = self.interval()
            f = Until(iv, f, self.simple())
        return f

    def simple(self):
        t = self.tok
        if self.accept("("):
            f = self.iff()
            self.expect(")")
            return f
        if self.accept("true"):
            return TRUE
        if self.accept("false"):
            return FALSE
        if t.kind == "ident":
            self.i += 1
            return self.atom(t.text)
        raise self.error(f"expected a formula, found {t.text or 'end of input'!r}")

    def atom(self, channel):
        t = self.tok
        if t.kind == "op" and t.text in ("==", "="):
            raise self.error("equality atoms are not supported; use a pair of inequalities")
        op = self.accept("<", "<=", ">", ">=")
        if op is None:
            return Atom(channel)
        return Atom(channel, op.text, self.rat(signed=True))

    def rat(self, signed=False) -> Fraction:
        start = self.tok
        negative = False
        if self.accept("-"):
            if not signed:
                raise self.error("negative interval bound", start)
            negative = True
        t = self.tok
        if t.kind != "num":
            raise self.error(f"expected a number, found {t.text or 'end of input'!r}")
        self.i += 1
        value = Fraction(t.text)
        if self.accept("/"):
            d = self.tok
            if d.kind != "num" or "." in t.text or "." in d.text:
                raise self.error("fraction literals need integer numerator and denominator", d)
            self.i += 1
            if int(d.text) == 0:
                raise self.error("zero denominator", d)
            value = Fraction(int(t.text), int(d.text))
        return -value if negative else value

    def interval(self) -> Interval:
        start = self.expect("[")
        lo = self.rat()
        self.expect(",")
        hi = self.rat()
        self.expect("]")
        try:
            return Interval(lo, hi)
        except FormulaError as e:
            raise self.error(str(e), start) from None


def parse(text: str) -> Formula:
    """Parse specification source into a formula.

    >>> parse("G[0,5](req -> F[0,10]ack)") == Always(Interval(0, 5), Implies(Atom("req"), Eventually(Interval(0, 10), Atom("ack"))))
    True
    """
    return _Parser(text).parse()


def format_rational(q: Fraction) -> str:
    """Exact text for a rational: a finite decimal when one exists, else ``n/d``."""
    q = Fraction(q)
    d = q.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{q.numerator}/{q.denominator}"
    if q.denominator == 1:
        return str(q.numerator)
    places = max(twos, fives)
    scaled = abs(q.numerator) * (10**places // q.denominator)
    digits = str(scaled).rjust(places + 1, "0")
    sign = "-" if q < 0 else ""
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


def _interval(iv: Interval) -> str:
    return f"[{format_rational(iv.lower)},{format_rational(iv.upper)}]"


def to_text(f: Formula) -> str:
    """Canonical, fully parenthesized source for ``f``."""
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bottom):
        return "false"
    if isinstance(f, Atom):
        if f.is_proposition:
            return f.channel
        return f"({f.channel} {f.op} {format_rational(f.bound)})"
    if isinstance(f, Not):
        return f"(not {to_text(f.arg)})"
    if isinstance(f, And):
        return "(" + " and ".join(to_text(a) for a in f.args) + ")"
    if isinstance(f, Or):
        return "(" + " or ".join(to_text(a) for a in f.args) + ")"
    if isinstance(f, Implies):
        return f"({to_text(f.antecedent)} -> {to_text(f.consequent)})"
    if isinstance(f, Always):
        return f"(G{_interval(f.interval)} {to_text(f.arg)})"
    if isinstance(f, Eventually):
        return f"(F{_interval(f.interval)} {to_text(f.arg)})"
    if isinstance(f, Until):
        return f"({to_text(f.left)} U{_interval(f.interval)} {to_text(f.right)})"
    raise TypeError(f"not a formula: {f!r}")
