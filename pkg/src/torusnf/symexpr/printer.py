"""Text form of coefficient expressions, readable back by ``parse``."""
from __future__ import annotations

import math

from . import expr as E


def _num(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    r = repr(float(x))
    return r


def _const(c: complex) -> str:
    if c.imag == 0:
        return _num(c.real)
    if c.real == 0:
        return f"{_num(c.imag)}j"
    return f"({_num(c.real)} + {_num(c.imag)}j)"


def _atomic(e: E.Expr) -> bool:
    if isinstance(e, E.Const):
        c = e.value
        return c.imag == 0 and c.real >= 0
    return isinstance(e, (E.Xi, E.Jap, E.Bump, E.Masked)) or (isinstance(e, E.NormPow) and e.p == 1)


def _wrap(s: str, e: E.Expr) -> str:
    return s if _atomic(e) else f"({s})"


def to_string(e: E.Expr, max_len: int | None = None) -> str:
    """Render ``e``; beyond ``max_len`` characters a short placeholder is returned."""
    e = E.as_expr(e)
    memo: dict[int, str] = {}
    for node in E.Plan([e]).order:
        kids = [memo[c._serial] for c in node.children]
        memo[node._serial] = _render(node, kids)
        if max_len is not None and len(memo[node._serial]) > max_len:
            return f"<expr with {E.node_count([e])} nodes>"
    return memo[e._serial]


def _render(n: E.Expr, kids: list[str]) -> str:
    if isinstance(n, E.Const):
        return _const(n.value)
    if isinstance(n, E.Xi):
        return f"xi_{n.index + 1}"
    if isinstance(n, E.NormPow):
        return "|xi|" if n.p == 1 else f"|xi|^{_wrap_exp(n.p)}"
    if isinstance(n, E.Jap):
        return f"jap({_num(n.s)})"
    if isinstance(n, E.Add):
        return " + ".join(_wrap(s, c) if isinstance(c, E.Add) else s for s, c in zip(kids, n.children))
    if isinstance(n, E.Mul):
        return "*".join(_wrap(s, c) for s, c in zip(kids, n.children))
    if isinstance(n, E.Pow):
        return f"{_wrap(kids[0], n.children[0])}^{_wrap_exp(n.p)}"
    if isinstance(n, E.Bump):
        if n.order == 0:
            return f"chi({kids[0]}, {_num(n.gamma)})"
        return f"chi_d({kids[0]}, {_num(n.gamma)}, {n.order})"
    if isinstance(n, E.Masked):
        return f"mask({kids[0]}, {kids[1]}, {_num(n.lo)}, {_num(n.hi)})"
    raise TypeError(type(n).__name__)


def _wrap_exp(p: float) -> str:
    s = _num(p)
    return s if p >= 0 else f"({s})"
