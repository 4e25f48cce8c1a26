"""Small-divisor cutoffs and the mean / nonresonant / resonant / tail splitting.

For a nonzero dual vector k the cutoffs are

* chi_k(xi)   = chi(2 |k|^tau (xi.k) / <xi>^delta)   (resonant zone around xi.k = 0)
* d_k(xi)     = (1 - chi_k(xi)) / (xi.k)             (0 where chi_k = 1)
* chit_k(xi)  = chi(|k| / <xi>^epsilon)              (large |k| cut)

with chi the even bump of ``symexpr`` (plateau [-gamma, gamma], support
[-2 gamma, 2 gamma]) and psi(t) = 1 - chi(t).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .lattice import DualLattice
from .symexpr import expr as E
from .symexpr.fourier import FourierSymbol
from .symexpr.smoothstep import bump as _bump_values

EPS_TOL = 1e-12


class InvalidParamsError(ValueError):
    pass


@dataclass(frozen=True)
class NFParams:
    """Normal-form parameters.

    Attributes
    ----------
    M : order of the principal part |xi|^M.
    frak_e : gap between M and the order of the perturbation.
    delta : loss per xi-derivative of the symbol class.
    tau, epsilon, gamma : small-divisor exponent, k-range exponent, cutoff width.
    d : dimension.
    n_target : number of normal-form steps.
    j_max : depth of the Moyal and Lie expansions.
    floor : order below which expansion terms are dropped; defaults to
        M - frak_e - (n_target + 1) rho.
    """

    M: float
    frak_e: float
    delta: float
    tau: float
    epsilon: float
    gamma: float
    d: int
    n_target: int = 3
    j_max: int = 6
    floor: float | None = None

    @property
    def rho(self) -> float:
        return 4.0 * self.delta + self.frak_e - 4.0

    @property
    def order_floor(self) -> float:
        """Terms of order below this are dropped from the expansions."""
        if self.floor is not None:
            return self.floor
        return self.M - self.frak_e - (self.n_target + 1) * self.rho

    def problems(self, dual: DualLattice | None = None) -> list[str]:
        out = []
        if self.M <= 0:
            out.append(f"M must be positive (got {self.M})")
        if self.frak_e <= 0:
            out.append(f"frak_e must be positive (got {self.frak_e})")
        if not (1.0 - self.frak_e / 4.0 < self.delta < 1.0):
            out.append(f"need 1 - frak_e/4 < delta < 1 (got delta={self.delta}, frak_e={self.frak_e})")
        if self.rho <= 0:
            out.append(f"rho = 4 delta + frak_e - 4 must be positive (got {self.rho})")
        cap = 0.5 if dual is None else min(dual.min_gap_r, 0.5)
        if not (0.0 < self.gamma < cap):
            out.append(f"need 0 < gamma < {cap:g} (got {self.gamma})")
        if self.epsilon <= 0 or self.epsilon > self.delta / (1.0 + self.tau) + EPS_TOL:
            out.append(f"need 0 < epsilon <= delta/(1+tau) = {self.delta / (1 + self.tau):g} (got {self.epsilon})")
        if self.tau <= self.d - 1:
            out.append(f"need tau > d - 1 = {self.d - 1} (got {self.tau})")
        if dual is not None and dual.dim != self.d:
            out.append(f"dimension mismatch: params d={self.d}, lattice d={dual.dim}")
        if self.n_target < 0 or self.j_max < 1:
            out.append("n_target must be >= 0 and j_max >= 1")
        return out

    def validate(self, dual: DualLattice | None = None) -> "NFParams":
        errs = self.problems(dual)
        if errs:
            raise InvalidParamsError("; ".join(errs))
        return self


# ------------------------------------------------------------- expressions


def bump(t, gamma: float):
    """The even bump chi evaluated at t (scalar or array)."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return _bump_values(t, gamma)


def psi_radial(gamma: float) -> E.Expr:
    """psi(|xi|): vanishes for |xi| <= gamma, equals 1 for |xi| >= 2 gamma."""
    return E.psi(E.norm(), gamma)


def _check_k(k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    if not np.any(k):
        raise ValueError("cutoffs are defined for nonzero k only")
    return k


def resonance_arg(k, p: NFParams) -> E.Expr:
    """2 |k|^tau (xi.k) <xi>^{-delta}."""
    k = _check_k(k)
    nk = float(np.linalg.norm(k))
    return E.mul(E.const(2.0 * nk ** p.tau), E.linear(k), E.jap(-p.delta))


def chi_k(k, p: NFParams) -> E.Expr:
    return E.bump(resonance_arg(k, p), p.gamma)


def d_k(k, p: NFParams) -> E.Expr:
    k = _check_k(k)
    arg = resonance_arg(k, p)
    inner = E.mul(E.sub(E.ONE, E.bump(arg, p.gamma)), E.power(E.linear(k), -1.0))
    return E.masked(inner, arg, p.gamma)


def chi_tilde_k(k, p: NFParams) -> E.Expr:
    k = _check_k(k)
    return E.bump(E.mul(E.const(float(np.linalg.norm(k))), E.jap(-p.epsilon)), p.gamma)


def evaluate_cutoffs(k, xi, p: NFParams):
    """(chi_k, d_k, chit_k) at one xi or an (N, d) array of xi."""
    k = _check_k(k)
    vals = E.evaluate_many([chi_k(k, p), d_k(k, p), chi_tilde_k(k, p)], xi, p.d)
    if np.ndim(vals[0]) == 0:
        return tuple(float(complex(v).real) for v in vals)
    return tuple(np.real(v) for v in vals)


# ---------------------------------------------------------------- splitting


class Split(NamedTuple):
    mean: E.Expr
    nr: FourierSymbol
    res: FourierSymbol
    tail: FourierSymbol


def split_symbol(a: FourierSymbol, p: NFParams) -> Split:
    """a = <a> + a_nr + a_res + a_tail, mode by mode."""
    zero_key = (0,) * a.dim
    nr, res, tail = {}, {}, {}
    for key, coef in a.terms.items():
        if key == zero_key:
            continue
        k = a.k_vector(key)
        ck = chi_k(k, p)
        ct = chi_tilde_k(k, p)
        nr[key] = E.mul(E.sub(E.ONE, ck), ct, coef)
        res[key] = E.mul(ck, ct, coef)
        tail[key] = E.mul(E.sub(E.ONE, ct), coef)
    mean = a.coefficient(zero_key)
    return Split(
        mean,
        a.with_terms(nr),
        a.with_terms(res),
        # smoothing: faster than any power of <xi>
        a.with_terms(tail, order=-math.inf),
    )


__all__ = [
    "NFParams",
    "InvalidParamsError",
    "bump",
    "psi_radial",
    "resonance_arg",
    "chi_k",
    "d_k",
    "chi_tilde_k",
    "evaluate_cutoffs",
    "Split",
    "split_symbol",
]
