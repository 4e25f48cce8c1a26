"""Iterative normal form h_n = h0 + z^(n) + v_n for h0 = psi(|xi|) |xi|^M.

Each step removes the nonresonant part of v_n by conjugating with
exp(i Op^w(g)), where g solves the homological equation
{h0; g} + v_n^nr = (smoothing defect).
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .calculus import (
    DroppedTerm,
    OrderedTerm,
    generator_order_ok,
    moyal_terms,
    sigma_j,
    sigma_order,
)
from .cutoffs import NFParams, psi_radial, resonance_arg, split_symbol
from .lattice import DualLattice
from .symexpr import expr as E
from .symexpr.fourier import FourierSymbol, sum_symbols
from .symexpr.printer import to_string

log = logging.getLogger(__name__)

ORDER_TOL = 1e-9
MAX_LIE_DEPTH = 40
EXPORT_MAX_CHARS = 2000


class ConsistencyError(RuntimeError):
    pass


class PreconditionError(ValueError):
    pass


class RealityError(ArithmeticError):
    pass


def principal_symbol(dual: DualLattice, p: NFParams) -> FourierSymbol:
    """h0 = psi(|xi|) |xi|^M as a Fourier multiplier (classical, loss 1 per derivative)."""
    return FourierSymbol.multiplier(dual, E.mul(psi_radial(p.gamma), E.norm_pow(p.M)), p.M, 1.0)


def _sample_points(rng: np.random.Generator, d: int, n: int = 40, lo: float = 2.0, hi: float = 60.0):
    dirs = rng.normal(size=(n, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return dirs * rng.uniform(lo, hi, size=(n, 1))


@dataclass
class Perturbation:
    """Perturbing symbol v0 and (optionally) a Floquet shift kappa.

    ``v0`` is stored unshifted; the normal form runs on it, and the shift is
    applied when comparing with the spectrum of the shifted operator.
    """

    v0: FourierSymbol
    kappa: np.ndarray | None = None
    symmetric_flag: bool | None = None

    def __post_init__(self):
        rng = np.random.default_rng(12345)
        pts = _sample_points(rng, self.v0.dim)
        defect = self.v0.reality_defect(pts)
        if defect > 1e-10:
            raise PreconditionError(f"perturbation is not real (defect {defect:.3g})")
        even = self.v0.is_even(pts, tol=1e-12)
        if self.symmetric_flag is None:
            self.symmetric_flag = even
        elif self.symmetric_flag and not even:
            raise PreconditionError("perturbation declared symmetric but is not even in xi")
        if self.kappa is not None:
            self.kappa = np.asarray(self.kappa, dtype=float)
            if self.kappa.shape != (self.v0.dim,):
                raise PreconditionError("kappa has the wrong dimension")

    def shifted_symbol(self) -> FourierSymbol:
        """v0 with xi replaced by xi - kappa."""
        if self.kappa is None or not np.any(self.kappa):
            return self.v0
        return self.v0.shifted(self.kappa)


def homological_defect_factor(p: NFParams) -> E.Expr:
    """1 - psi^2 - psi psi' |xi| / M; multiplies a_nr in {h0; g} + a_nr."""
    ps = psi_radial(p.gamma)
    dpsi = E.neg(E.bump(E.norm(), p.gamma, 1))
    return E.sub(E.ONE, E.add(E.mul(ps, ps), E.mul(E.const(1.0 / p.M), ps, dpsi, E.norm())))


def solve_homological(a_nr: FourierSymbol, p: NFParams) -> FourierSymbol:
    """Generator g with {h0; g} + a_nr smoothing.

    g_k = (1/M) psi(|xi|) |xi|^{2-M} (-i) a_nr_k / (xi.k); a_nr_k carries the
    factor (1 - chi_k), so the quotient is masked to the region where it is
    nonzero.
    """
    zero = (0,) * a_nr.dim
    if not a_nr.coefficient(zero).is_zero:
        raise PreconditionError("nonresonant part must have no mean (k = 0) term")
    radial = E.mul(E.const(-1j / p.M), psi_radial(p.gamma), E.norm_pow(2.0 - p.M))
    if p.M > 2:
        radial = E.masked(radial, E.norm(), p.gamma)
    terms = {}
    for key, coef in a_nr.terms.items():
        k = a_nr.k_vector(key)
        quotient = E.masked(E.mul(coef, E.power(E.linear(k), -1.0)), resonance_arg(k, p), p.gamma)
        terms[key] = E.mul(radial, quotient)
    order = a_nr.order + 2.0 - p.M - p.delta if a_nr.terms else -math.inf
    return FourierSymbol(a_nr.dual, terms, order, p.delta)


def homological_defect(a_nr: FourierSymbol, p: NFParams) -> FourierSymbol:
    """{h0; g} + a_nr for g = solve_homological(a_nr), in closed form."""
    factor = homological_defect_factor(p)
    return a_nr.with_terms({k: E.mul(factor, c) for k, c in a_nr.terms.items()}, order=-math.inf)


@dataclass
class StepRecord:
    n: int
    pieces: list[tuple[str, float, int]]
    dropped: list[DroppedTerm]


@dataclass
class NFState:
    n: int
    params: NFParams
    h0: FourierSymbol
    z_mean: list[E.Expr]
    z_res: FourierSymbol
    v: FourierSymbol
    g_list: list[FourierSymbol] = field(default_factory=list)
    history: list[StepRecord] = field(default_factory=list)

    @property
    def dual(self) -> DualLattice:
        return self.h0.dual

    def declared_v_order(self, n: int | None = None) -> float:
        n = self.n if n is None else n
        p = self.params
        return p.M - p.frak_e - n * p.rho

    def z_symbol(self) -> FourierSymbol:
        """z^(n) = <z^(n)> + z^(n,res) as one symbol."""
        zero = (0,) * self.dual.dim
        parts = [self.z_res]
        if self.z_mean:
            parts.append(FourierSymbol(self.dual, {zero: E.add(*self.z_mean)},
                                       self.params.M - self.params.frak_e, self.params.delta))
        return sum_symbols(parts)

    def full_symbol(self) -> FourierSymbol:
        return sum_symbols([self.h0, self.z_symbol(), self.v])

    def z_mean_values(self, xi) -> np.ndarray:
        """Array of shape (n, N): z_j at each point."""
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        if not self.z_mean:
            return np.zeros((0, len(xi)), dtype=complex)
        return np.array(E.evaluate_many(self.z_mean, xi, self.dual.dim))


def initial_state(pert: Perturbation, p: NFParams) -> NFState:
    dual = pert.v0.dual
    p.validate(dual)
    v0 = pert.v0
    if abs(v0.order - (p.M - p.frak_e)) > ORDER_TOL and not v0.is_zero():
        log.warning("perturbation declared order %g differs from M - frak_e = %g",
                    v0.order, p.M - p.frak_e)
    v0 = v0.with_terms(v0.terms, order=p.M - p.frak_e, delta=p.delta)
    return NFState(
        n=0,
        params=p,
        h0=principal_symbol(dual, p),
        z_mean=[],
        z_res=FourierSymbol.zero(dual, p.M - p.frak_e, p.delta),
        v=v0,
    )


def _ad_levels(level: list[OrderedTerm], g: FourierSymbol, start: int, p: NFParams,
               floor: float, dropped: list) -> list[OrderedTerm]:
    """Higher Lie terms from ``level`` = (ad_g)^start h / start!: returns the
    terms (ad_g)^j h / j! for j > start until all fall below the floor."""
    out = []
    j = start
    while level:
        j += 1
        if j > MAX_LIE_DEPTH:
            for t in level:
                dropped.append(DroppedTerm(f"depth-cut({t.label})", t.order, len(t.sym)))
            break
        nxt = []
        for t in level:
            nxt.extend(moyal_terms(t.sym, g, p.j_max, floor, dropped, f"ad^{j}<{t.label}>"))
        level = [OrderedTerm(t.sym.scale(1.0 / j), t.order, t.label) for t in nxt]
        out.extend(level)
    return out


def nf_step(state: NFState, keep_pieces: bool = False) -> NFState:
    """One normal-form step n -> n+1."""
    p = state.params
    floor = p.order_floor
    dual = state.dual
    v = state.v
    split = split_symbol(v, p)
    g = solve_homological(split.nr, p)
    if not generator_order_ok(g):
        raise ConsistencyError(f"generator order {g.order} is not below delta")

    dropped: list[DroppedTerm] = []
    pieces: list[OrderedTerm] = []
    if not split.tail.is_zero():
        pieces.append(OrderedTerm(split.tail, -math.inf, "tail"))

    if not g.is_zero():
        nr_order = split.nr.order
        defect = homological_defect(split.nr, p)
        # Lie level 1: {h_n, g}_M with its Poisson part in closed form
        level1: list[OrderedTerm] = [OrderedTerm(-split.nr, nr_order, "{h0,g}:-nr")]
        if not defect.is_zero():
            level1.append(OrderedTerm(defect, -math.inf, "{h0,g}:defect"))
        for j in range(3, p.j_max + 1, 2):
            o = sigma_order(state.h0, g, j)
            name = f"{{h0,g}}[j={j}]"
            if o < floor:
                dropped.append(DroppedTerm(name, o, len(g)))
                continue
            s = sigma_j(state.h0, g, j).scale(-2j)
            if not s.is_zero():
                level1.append(OrderedTerm(s, o, name))
        rest = state.z_symbol()
        rest = sum_symbols([rest, v]) if not rest.is_zero() else v
        for part, name in ((rest, "{z+v,g}"),):
            if not part.is_zero():
                level1.extend(moyal_terms(part, g, p.j_max, floor, dropped, name))
        # -nr cancels against v's nr part; everything else of level 1 stays
        pieces.extend(t for t in level1 if t.label != "{h0,g}:-nr")
        pieces.extend(_ad_levels(level1, g, 1, p, floor, dropped))

    declared = state.declared_v_order(state.n + 1)
    for t in pieces:
        if t.order > declared + ORDER_TOL:
            raise ConsistencyError(f"term {t.label} has order {t.order:.4f} above the declared {declared:.4f}")
    if pieces:
        v_next = sum_symbols([t.sym for t in pieces], order=declared, delta=p.delta)
    else:
        v_next = FourierSymbol.zero(dual, declared, p.delta)

    z_mean = state.z_mean + [split.mean]
    z_res = sum_symbols([state.z_res, split.res], order=state.z_res.order, delta=p.delta)
    g_named = g.with_terms(g.terms)
    record = StepRecord(state.n + 1, [(t.label, t.order, len(t.sym)) for t in pieces], dropped)
    for d in dropped:
        log.debug("step %d dropped %s (order %.3f)", state.n + 1, d.label, d.order)
    return NFState(
        n=state.n + 1,
        params=p,
        h0=state.h0,
        z_mean=z_mean,
        z_res=z_res,
        v=v_next,
        g_list=state.g_list + [g_named],
        history=state.history + [record],
    )


def run(pert: Perturbation, p: NFParams, n_target: int | None = None) -> NFState:
    """Apply ``n_target`` normal-form steps (default ``p.n_target``)."""
    n_target = p.n_target if n_target is None else n_target
    state = initial_state(pert, p)
    for _ in range(n_target):
        state = nf_step(state)
    return state


def lambda_n(state: NFState, xi, kappa=None, imag_tol: float = 1e-10):
    """lambda_n(xi) = |xi - kappa|^M + sum_j z_j(xi - kappa).

    Defined for |xi - kappa| >= 2 gamma, where psi = 1.
    """
    xi = np.asarray(xi, dtype=float)
    scalar = xi.ndim == 1
    pts = np.atleast_2d(xi)
    if kappa is not None:
        pts = pts - np.asarray(kappa, dtype=float)
    nrm = np.linalg.norm(pts, axis=1)
    if np.any(nrm < 2 * state.params.gamma):
        raise PreconditionError("lambda_n needs |xi| >= 2 gamma")
    lam = nrm ** state.params.M + state.z_mean_values(pts).sum(axis=0)
    if np.any(np.abs(np.imag(lam)) > imag_tol * np.maximum(1.0, np.abs(lam))):
        raise RealityError(f"lambda_n has imaginary part {np.max(np.abs(np.imag(lam))):.3g}")
    lam = np.real(lam)
    return float(lam[0]) if scalar else lam


# ------------------------------------------------------------------- export


def _symbol_doc(s: FourierSymbol) -> dict:
    return {
        "order": None if s.order == -math.inf else s.order,
        "delta": s.delta,
        "support": [list(k) for k in s.terms],
        "terms": {",".join(map(str, k)): to_string(e, EXPORT_MAX_CHARS) for k, e in s.terms.items()},
    }


def export_state(state: NFState) -> dict:
    """JSON-ready description of a state: supports, printed coefficients, orders."""
    p = state.params
    return {
        "n": state.n,
        "params": {
            "M": p.M, "frak_e": p.frak_e, "delta": p.delta, "tau": p.tau,
            "epsilon": p.epsilon, "gamma": p.gamma, "d": p.d, "rho": p.rho,
            "n_target": p.n_target, "j_max": p.j_max, "order_floor": p.order_floor,
        },
        "h0": _symbol_doc(state.h0),
        "z_mean": [
            {"j": j, "order": p.M - p.frak_e - j * p.rho, "expr": to_string(z, EXPORT_MAX_CHARS)}
            for j, z in enumerate(state.z_mean)
        ],
        "z_res": _symbol_doc(state.z_res),
        "v": _symbol_doc(state.v),
        "generators": [_symbol_doc(g) for g in state.g_list],
        "steps": [
            {
                "n": r.n,
                "pieces": [{"label": lab, "order": None if o == -math.inf else o, "modes": m}
                           for lab, o, m in r.pieces],
                "dropped": [{"label": d.label, "order": d.order, "modes": d.n_modes} for d in r.dropped],
            }
            for r in state.history
        ],
    }


def export_json(state: NFState, **kw) -> str:
    return json.dumps(export_state(state), **kw)


__all__ = [
    "Perturbation",
    "NFState",
    "StepRecord",
    "ConsistencyError",
    "PreconditionError",
    "RealityError",
    "principal_symbol",
    "solve_homological",
    "homological_defect",
    "homological_defect_factor",
    "initial_state",
    "nf_step",
    "run",
    "lambda_n",
    "export_state",
    "export_json",
]
