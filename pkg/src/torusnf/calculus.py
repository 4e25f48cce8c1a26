"""Symbol calculus on finite Fourier series: Poisson and Moyal brackets, the
composition terms sigma_j, Lie (Egorov) series and the Weyl to classical map.

All x-derivatives act on a mode exp(i k.x) as multiplication by i k; all
xi-derivatives are structural.  For two modes the composition is exact:

    (a_k e^{ikx}) # (b_l e^{ilx}) = e^{i(k+l)x} a_k(xi + l/2) b_l(xi - k/2),

and sigma_j collects the degree-j part of the Taylor expansion of the right
hand side, which gives real combinatorial weights l^alpha k^beta / (2^j alpha! beta!)
with sign (-1)^|beta|.
"""
from __future__ import annotations

import logging
import math
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .lattice import multi_indices
from .symexpr import expr as E
from .symexpr.fourier import FourierSymbol, sum_symbols

log = logging.getLogger(__name__)


class OrderHypothesisError(ValueError):
    pass


class OrderedTerm(NamedTuple):
    sym: FourierSymbol
    order: float
    label: str


class DroppedTerm(NamedTuple):
    label: str
    order: float
    n_modes: int


def _check_dims(a: FourierSymbol, b: FourierSymbol):
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def _x_independent(a: FourierSymbol) -> bool:
    return all(not any(k) for k in a.terms)


@lru_cache(maxsize=None)
def _weights(d: int, j: int):
    """[(alpha, beta, w)] with |alpha|+|beta| = j and w = (1/2)^|a| (-1/2)^|b| / (a! b!)."""
    out = []
    for na in range(j + 1):
        for alpha in multi_indices(d, na):
            for beta in multi_indices(d, j - na):
                w = Fraction(1, 2 ** j) * (-1) ** (j - na)
                for n in alpha + beta:
                    w /= math.factorial(n)
                out.append((alpha, beta, w))
    return tuple(out)


def sigma_order(a: FourierSymbol, b: FourierSymbol, j: int) -> float:
    """Order of sigma_j(a, b): each xi-derivative on a costs a.delta, on b costs b.delta.

    Splits that multiply by a zero mode (x-independent factor) are excluded.
    """
    if a.is_zero() or b.is_zero():
        return -math.inf
    a_flat, b_flat = _x_independent(a), _x_independent(b)
    best = -math.inf
    for na in range(j + 1):
        nb = j - na
        # l^alpha needs a nonzero mode of b, k^beta a nonzero mode of a
        if (na and b_flat) or (nb and a_flat):
            continue
        best = max(best, a.order + b.order - a.delta * na - b.delta * nb)
    return best


def _pair_coefficient(ak: E.Expr, bl: E.Expr, kv, lv, j: int, d: int) -> E.Expr:
    parts = []
    for alpha, beta, w in _weights(d, j):
        c = float(w)
        for i in range(d):
            if alpha[i]:
                c *= lv[i] ** alpha[i]
            if beta[i]:
                c *= kv[i] ** beta[i]
        if c == 0.0:
            continue
        da = E.diff_multi(ak, alpha)
        if da.is_zero:
            continue
        db = E.diff_multi(bl, beta)
        if db.is_zero:
            continue
        parts.append(E.mul(E.const(c), da, db))
    return E.add(*parts)


def sigma_j(a: FourierSymbol, b: FourierSymbol, j: int) -> FourierSymbol:
    """Degree-j term of the composition expansion of Op(a) Op(b) (Weyl)."""
    _check_dims(a, b)
    if j < 0:
        raise ValueError("j must be non-negative")
    acc: dict[tuple, list] = {}
    for k, ak in a.terms.items():
        kv = a.k_vector(k)
        for l, bl in b.terms.items():
            lv = b.k_vector(l)
            c = _pair_coefficient(ak, bl, kv, lv, j, a.dim)
            if not c.is_zero:
                acc.setdefault(tuple(x + y for x, y in zip(k, l)), []).append(c)
    terms = {key: E.add(*cs) for key, cs in acc.items()}
    return FourierSymbol(a.dual, terms, sigma_order(a, b, j), min(a.delta, b.delta))


def poisson(a: FourierSymbol, b: FourierSymbol) -> FourierSymbol:
    """{a; b} = -grad_xi a . grad_x b + grad_x a . grad_xi b."""
    _check_dims(a, b)
    acc: dict[tuple, list] = {}
    for k, ak in a.terms.items():
        kv = a.k_vector(k)
        for l, bl in b.terms.items():
            lv = b.k_vector(l)
            parts = []
            for i in range(a.dim):
                if lv[i]:
                    parts.append(E.mul(E.const(-1j * lv[i]), E.differentiate(ak, i), bl))
                if kv[i]:
                    parts.append(E.mul(E.const(1j * kv[i]), ak, E.differentiate(bl, i)))
            c = E.add(*parts)
            if not c.is_zero:
                acc.setdefault(tuple(x + y for x, y in zip(k, l)), []).append(c)
    terms = {key: E.add(*cs) for key, cs in acc.items()}
    return FourierSymbol(a.dual, terms, sigma_order(a, b, 1), min(a.delta, b.delta))


def moyal_terms(a: FourierSymbol, b: FourierSymbol, J: int, floor: float = -math.inf,
                dropped: list | None = None, label: str = "moyal") -> list[OrderedTerm]:
    """Odd-order pieces -2i sigma_j(a, b), j <= J, of the Moyal bracket.

    Pieces whose order is below ``floor`` are not computed; each is recorded
    in ``dropped``.
    """
    out = []
    for j in range(1, J + 1, 2):
        order = sigma_order(a, b, j)
        if order == -math.inf:
            continue
        name = f"{label}[j={j}]"
        if order < floor:
            if dropped is not None:
                dropped.append(DroppedTerm(name, order, len(a) * len(b)))
            log.debug("dropped %s of order %.3f", name, order)
            continue
        s = sigma_j(a, b, j).scale(-2j)
        if not s.is_zero():
            out.append(OrderedTerm(s, order, name))
    return out


def moyal_truncated(a: FourierSymbol, b: FourierSymbol, J: int) -> FourierSymbol:
    """Symbol of (1/i)[Op(a), Op(b)] truncated to sigma_j with j <= J."""
    _check_dims(a, b)
    pieces = moyal_terms(a, b, J)
    order = sigma_order(a, b, 1)
    if not pieces:
        return FourierSymbol.zero(a.dual, order, min(a.delta, b.delta))
    return sum_symbols([t.sym for t in pieces], order=order, delta=min(a.delta, b.delta))


def generator_order_ok(g: FourierSymbol) -> bool:
    return g.is_zero() or g.order < g.delta


def lie_series_terms(terms: Sequence[OrderedTerm], g: FourierSymbol, J: int, j_max: int,
                     floor: float = -math.inf, dropped: list | None = None,
                     label: str = "ad") -> list[OrderedTerm]:
    """Terms (ad_g)^j a / j!, 1 <= j <= J, for a given as a list of ordered terms.

    The j = 0 term is not included.  Every bracket piece with order below
    ``floor`` is recorded in ``dropped`` instead of being computed.
    """
    if not generator_order_ok(g):
        raise OrderHypothesisError(f"generator order {g.order} must be below delta={g.delta}")
    if g.is_zero():
        return []
    out: list[OrderedTerm] = []
    current = list(terms)
    for j in range(1, J + 1):
        nxt: list[OrderedTerm] = []
        for t in current:
            for piece in moyal_terms(t.sym, g, j_max, floor, dropped, f"{label}^{j}({t.label})"):
                nxt.append(piece)
        if not nxt:
            break
        fact = 1.0 / j
        nxt = [OrderedTerm(p.sym.scale(fact), p.order, p.label) for p in nxt]
        out.extend(nxt)
        current = nxt
    if current and J >= 1 and dropped is not None:
        # the series is cut at J: the next level is dropped wholesale
        for t in current:
            o = t.order + sigma_order(t.sym, g, 1) - t.sym.order
            if o >= floor:
                dropped.append(DroppedTerm(f"{label}^{J + 1}({t.label})", o, len(t.sym) * len(g)))
    return out


def lie_series(a: FourierSymbol, g: FourierSymbol, J: int, j_max: int | None = None,
               floor: float = -math.inf, dropped: list | None = None) -> FourierSymbol:
    """sum_{j <= J} (ad_g)^j a / j! with ad_g a = {a, g}_M (Moyal truncated at ``j_max``)."""
    _check_dims(a, g)
    j_max = J if j_max is None else j_max
    extra = lie_series_terms([OrderedTerm(a, a.order, "a")], g, J, j_max, floor, dropped)
    return sum_symbols([a] + [t.sym for t in extra], order=a.order, delta=min(a.delta, g.delta))


def weyl_to_classical(a: FourierSymbol, J: int) -> FourierSymbol:
    """Classical (left) symbol of Op^w(a), expanded to |alpha| <= J.

    b_k(xi) = sum_alpha (k/2)^alpha / alpha! d^alpha a_k(xi), the Taylor series
    of a_k(xi + k/2).
    """
    terms = {}
    for key, ak in a.terms.items():
        kv = a.k_vector(key)
        parts = []
        for n in range(J + 1):
            for alpha in multi_indices(a.dim, n):
                c = 1.0
                for i, m in enumerate(alpha):
                    if m:
                        c *= (0.5 * kv[i]) ** m / math.factorial(m)
                if c == 0.0:
                    continue
                da = E.diff_multi(ak, alpha)
                if not da.is_zero:
                    parts.append(E.mul(E.const(c), da))
        terms[key] = E.add(*parts)
    return a.with_terms(terms)


def composition_exact(a: FourierSymbol, b: FourierSymbol, x, xi) -> np.ndarray:
    """(a # b)(x, xi) computed from the exact two-mode formula (for checks)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    total = np.zeros(len(x), dtype=complex)
    for k, ak in a.terms.items():
        kv = a.k_vector(k)
        for l, bl in b.terms.items():
            lv = b.k_vector(l)
            va = E.evaluate(ak, xi + 0.5 * lv)
            vb = E.evaluate(bl, xi - 0.5 * kv)
            total += va * vb * np.exp(1j * (x @ (kv + lv)))
    return total


__all__ = [
    "OrderedTerm",
    "DroppedTerm",
    "OrderHypothesisError",
    "sigma_j",
    "sigma_order",
    "poisson",
    "moyal_terms",
    "moyal_truncated",
    "lie_series",
    "lie_series_terms",
    "weyl_to_classical",
    "composition_exact",
]
