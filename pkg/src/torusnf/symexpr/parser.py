"""Recursive-descent parser for coefficient expressions.

Grammar::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | '+' unary | power
    power   := atom ('^' unary)?          # exponent must be a real constant
    atom    := NUMBER | NUMBER 'j' | 'pi' | 'xi_' INT | '|xi|'
             | 'jap' '(' expr ')' | 'chi' '(' expr ',' expr ')'
             | 'psi' '(' expr ',' expr ')' | 'chi_d' '(' expr ',' expr ',' expr ')'
             | 'mask' '(' expr ',' expr ',' expr ',' expr ')' | '(' expr ')'

``xi_i`` is 1-based.  ``chi(t, g)`` is the even bump (1 on |t| <= g, 0 on
|t| >= 2g), ``psi(t, g) = 1 - chi(t, g)`` and ``chi_d(t, g, n)`` its n-th
derivative.  ``mask(e, t, lo, hi)`` is e where lo < |t| < hi and 0 elsewhere;
``hi`` may be ``inf``.
"""
from __future__ import annotations

import math
import re

from . import expr as E


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


_TOKEN = re.compile(
    r"""\s*(?:
        (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?j?)
      | (?P<absxi>\|\s*xi\s*\|)
      | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
      | (?P<op>[-+*/^(),])
    )""",
    re.VERBOSE,
)

_FUNCS = {"jap": 1, "chi": 2, "psi": 2, "chi_d": 3, "mask": 4}


def _tokenize(text: str):
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[start]!r}", start)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, d: int):
        self.toks = _tokenize(text)
        self.i = 0
        self.d = d

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, value: str):
        kind, v, pos = self.take()
        if v != value:
            raise ParseError(f"expected {value!r}, found {v or 'end of input'!r}", pos)

    def parse(self) -> E.Expr:
        e = self.expr()
        kind, v, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {v!r}", pos)
        return e

    def expr(self) -> E.Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            e = E.add(e, rhs) if op == "+" else E.sub(e, rhs)
        return e

    def term(self) -> E.Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.unary()
            e = E.mul(e, rhs) if op == "*" else E.mul(e, E.power(rhs, -1.0))
        return e

    def unary(self) -> E.Expr:
        kind, v, pos = self.peek()
        if kind == "op" and v in ("-", "+"):
            self.take()
            inner = self.unary()
            return E.neg(inner) if v == "-" else inner
        return self.power()

    def power(self) -> E.Expr:
        base = self.atom()
        if self.peek()[1] == "^" and self.peek()[0] == "op":
            _, _, pos = self.take()
            p = self.unary()
            return E.power(base, self._real_const(p, pos, "exponent"))
        return base

    def _real_const(self, e: E.Expr, pos: int, what: str) -> float:
        if not isinstance(e, E.Const) or e.value.imag != 0:
            raise ParseError(f"{what} must be a real constant", pos)
        return e.value.real

    def _int_const(self, e: E.Expr, pos: int, what: str) -> int:
        v = self._real_const(e, pos, what)
        if not float(v).is_integer() or v < 0:
            raise ParseError(f"{what} must be a non-negative integer", pos)
        return int(v)

    def _args(self, n: int):
        self.expect("(")
        args = []
        for j in range(n):
            pos = self.peek()[2]
            args.append((self.expr(), pos))
            if j < n - 1:
                self.expect(",")
        self.expect(")")
        return args

    def atom(self) -> E.Expr:
        kind, v, pos = self.take()
        if kind == "num":
            if v.endswith("j"):
                return E.const(complex(0.0, float(v[:-1])))
            return E.const(float(v))
        if kind == "absxi":
            return E.norm()
        if kind == "op" and v == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "name":
            if v == "pi":
                return E.const(math.pi)
            m = re.fullmatch(r"xi_(\d+)", v)
            if m:
                idx = int(m.group(1))
                if not 1 <= idx <= self.d:
                    raise ParseError(f"xi index {idx} out of range 1..{self.d}", pos)
                return E.xi(idx - 1)
            if v in _FUNCS:
                args = self._mask_args() if v == "mask" else self._args(_FUNCS[v])
                return self._call(v, args)
            raise ParseError(f"unknown identifier {v!r}", pos)
        raise ParseError(f"unexpected token {v or 'end of input'!r}", pos)

    def _call(self, name, args):
        if name == "jap":
            (s, pos), = args
            return E.jap(self._real_const(s, pos, "jap exponent"))
        if name in ("chi", "psi"):
            (t, _), (g, pos) = args
            gamma = self._real_const(g, pos, "bump width")
            if gamma <= 0:
                raise ParseError("bump width must be positive", pos)
            return E.bump(t, gamma) if name == "chi" else E.psi(t, gamma)
        if name == "chi_d":
            (t, _), (g, gpos), (n, npos) = args
            gamma = self._real_const(g, gpos, "bump width")
            if gamma <= 0:
                raise ParseError("bump width must be positive", gpos)
            return E.bump(t, gamma, self._int_const(n, npos, "derivative order"))
        (e, _), (t, _), (lo, lpos), (hi, hpos) = args
        return E.masked(e, t, lo, hi)

    def _mask_args(self):
        self.expect("(")
        e = self.expr()
        self.expect(",")
        t = self.expr()
        bounds = []
        for sep in (",", ","):
            self.expect(sep)
            bounds.append(self._bound())
        self.expect(")")
        return [(e, 0), (t, 0), (bounds[0], 0), (bounds[1], 0)]

    def _bound(self) -> float:
        kind, v, pos = self.peek()
        if kind == "name" and v == "inf":
            self.take()
            return math.inf
        return self._real_const(self.expr(), pos, "mask bound")


def parse(text: str, d: int) -> E.Expr:
    """Parse ``text`` into an expression in ``d`` frequency variables."""
    if d < 1:
        raise ValueError("dimension must be positive")
    return _Parser(text, d).parse()
