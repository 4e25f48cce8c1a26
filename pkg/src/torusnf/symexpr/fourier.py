"""Symbols a(x, xi) = sum_k a_k(xi) exp(i k.x) with finitely many modes k."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from ..lattice import DualLattice
from . import expr as E
from .parser import parse

Key = tuple  # integer coordinates of k in the dual basis


def _key(k) -> Key:
    return tuple(int(v) for v in np.atleast_1d(k))


@dataclass
class FourierSymbol:
    """Finite Fourier series in x with xi-dependent coefficients.

    Keys of ``terms`` are integer coordinates of dual lattice vectors.
    ``order`` and ``delta`` are bookkeeping: the symbol is declared to lie in
    the class of order ``order`` where each xi-derivative costs ``delta``.
    """

    dual: DualLattice
    terms: dict[Key, E.Expr] = field(default_factory=dict)
    order: float = 0.0
    delta: float = 1.0

    def __post_init__(self):
        clean = {}
        for k, e in self.terms.items():
            e = E.as_expr(e)
            key = _key(k)
            if len(key) != self.dim:
                raise ValueError(f"mode {key} has wrong dimension for d={self.dim}")
            if not e.is_zero:
                clean[key] = e
        self.terms = dict(sorted(clean.items()))

    @property
    def dim(self) -> int:
        return self.dual.dim

    @classmethod
    def from_strings(cls, dual: DualLattice, terms: Mapping, order: float, delta: float = 1.0):
        return cls(dual, {_key(k): parse(s, dual.dim) if isinstance(s, str) else s
                          for k, s in terms.items()}, order, delta)

    @classmethod
    def zero(cls, dual: DualLattice, order: float = -np.inf, delta: float = 1.0):
        return cls(dual, {}, order, delta)

    @classmethod
    def multiplier(cls, dual: DualLattice, e: E.Expr, order: float, delta: float = 1.0):
        """x-independent symbol (a Fourier multiplier)."""
        return cls(dual, {(0,) * dual.dim: e}, order, delta)

    # ------------------------------------------------------------------ access
    def coefficient(self, k) -> E.Expr:
        """Stored coefficient at integer mode ``k``, or the zero expression."""
        return self.terms.get(_key(k), E.ZERO)

    def coefficient_at_vector(self, vec) -> E.Expr:
        return self.coefficient(self.dual.coords_of(vec))

    def support(self) -> list[Key]:
        return list(self.terms)

    def k_vector(self, k) -> np.ndarray:
        return self.dual.vector(_key(k))

    def is_zero(self) -> bool:
        return not self.terms

    def __len__(self):
        return len(self.terms)

    # -------------------------------------------------------------- arithmetic
    def with_terms(self, terms, order=None, delta=None) -> "FourierSymbol":
        return FourierSymbol(self.dual, terms, self.order if order is None else order,
                             self.delta if delta is None else delta)

    def __add__(self, other: "FourierSymbol") -> "FourierSymbol":
        return sum_symbols([self, other])

    def scale(self, c) -> "FourierSymbol":
        c = E.as_expr(c)
        return self.with_terms({k: E.mul(c, e) for k, e in self.terms.items()})

    def __neg__(self):
        return self.scale(-1)

    def map(self, fn) -> "FourierSymbol":
        """Apply ``fn(k, expr)`` to every coefficient."""
        return self.with_terms({k: fn(k, e) for k, e in self.terms.items()})

    def shifted(self, kappa) -> "FourierSymbol":
        """The symbol with xi replaced by xi - kappa."""
        return self.map(lambda k, e: E.substitute_shift(e, kappa))

    # -------------------------------------------------------------- evaluation
    def coefficient_values(self, xi) -> dict[Key, np.ndarray]:
        keys = list(self.terms)
        vals = E.evaluate_many([self.terms[k] for k in keys], xi, self.dim)
        return dict(zip(keys, vals))

    def evaluate(self, x, xi) -> np.ndarray | complex:
        """a(x, xi) at paired points x[j], xi[j] (or a single pair)."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 1
        x2 = np.atleast_2d(x)
        xi2 = np.atleast_2d(np.asarray(xi, dtype=float))
        total = np.zeros(len(x2), dtype=complex)
        for k, v in self.coefficient_values(xi2).items():
            total += v * np.exp(1j * (x2 @ self.k_vector(k)))
        return complex(total[0]) if scalar else total

    # ------------------------------------------------------------------ checks
    def reality_defect(self, xi_samples) -> float:
        """max |a_{-k}(xi) - conj(a_k(xi))|; zero for real-valued symbols."""
        vals = self.coefficient_values(xi_samples)
        worst = 0.0
        for k, v in vals.items():
            mk = tuple(-c for c in k)
            other = vals.get(mk)
            if other is None:
                other = np.zeros_like(v)
            worst = max(worst, float(np.max(np.abs(other - np.conj(v)), initial=0.0)))
        return worst

    def is_real(self, xi_samples, tol: float = 1e-12) -> bool:
        return self.reality_defect(xi_samples) <= tol

    def evenness_defect(self, xi_samples) -> float:
        """max |a_k(-xi) - a_k(xi)| over stored modes."""
        xi_samples = np.atleast_2d(np.asarray(xi_samples, dtype=float))
        plus = self.coefficient_values(xi_samples)
        minus = self.coefficient_values(-xi_samples)
        return max((float(np.max(np.abs(plus[k] - minus[k]), initial=0.0)) for k in plus), default=0.0)

    def is_even(self, xi_samples, tol: float = 1e-12) -> bool:
        return self.evenness_defect(xi_samples) <= tol

    def order_profile(self, rng: np.random.Generator, n_rays: int = 5,
                      radii: Iterable[float] = tuple(np.geomspace(10, 1e3, 12))) -> np.ndarray:
        """|a_k(xi)| <xi>^{-order} along random rays; rows are rays, columns radii.

        The maximum over modes is taken; bounded rows are consistent with the
        declared order.
        """
        radii = np.asarray(list(radii), dtype=float)
        dirs = rng.normal(size=(n_rays, self.dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        pts = (dirs[:, None, :] * radii[None, :, None]).reshape(-1, self.dim)
        weight = (1.0 + np.sum(pts ** 2, axis=1)) ** (-0.5 * self.order)
        worst = np.zeros(len(pts))
        for v in self.coefficient_values(pts).values():
            worst = np.maximum(worst, np.abs(v) * weight)
        return worst.reshape(n_rays, len(radii))


def sum_symbols(symbols: Iterable[FourierSymbol], order=None, delta=None) -> FourierSymbol:
    """Sum of symbols; the order is the maximum and delta the smallest loss."""
    symbols = list(symbols)
    if not symbols:
        raise ValueError("nothing to sum")
    acc: dict[Key, list] = {}
    for s in symbols:
        for k, e in s.terms.items():
            acc.setdefault(k, []).append(e)
    terms = {k: E.add(*es) for k, es in acc.items()}
    nonzero = [s for s in symbols if not s.is_zero()] or symbols
    m = max(s.order for s in nonzero) if order is None else order
    dl = min(s.delta for s in nonzero) if delta is None else delta
    return FourierSymbol(symbols[0].dual, terms, m, dl)


def cosine_potential(dual: DualLattice, modes, amplitude: float = 1.0, order: float = 0.0) -> FourierSymbol:
    """sum over ``modes`` of 2*amplitude*cos(k.x): coefficient ``amplitude`` at +-k."""
    terms: dict[Key, E.Expr] = {}
    for k in modes:
        k = _key(k)
        for kk in (k, tuple(-c for c in k)):
            terms[kk] = E.add(terms.get(kk, E.ZERO), E.const(amplitude))
    return FourierSymbol(dual, terms, order, 1.0)
