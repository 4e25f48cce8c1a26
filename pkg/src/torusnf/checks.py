"""Acceptance checks shared by ``torusnf verify`` and the test suite.

Each check returns a :class:`CheckResult`.  Slope fits use a resolution
floor of ``FLOOR_FACTOR * eps * ||H||``: differences below it are roundoff,
and a sweep that sits entirely below it is reported as unresolved
(slope -inf) rather than fitted.
"""
from __future__ import annotations

import functools
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import calculus as C
from . import normalform as N
from . import presets
from . import quantize as Q
from . import resonance as Rz
from . import spectra as S
from .cutoffs import NFParams, split_symbol
from .lattice import DualLattice, Lattice, dual_basis, modes_in_ball, nonzero_vectors, random_basis
from .symexpr import expr as E
from .symexpr.fourier import FourierSymbol

FLOOR_FACTOR = 10.0
EPS = float(np.finfo(float).eps)


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    tolerance: str
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} [{self.number:2d}] {self.name} ({self.tolerance}) {self.seconds:.1f}s"

    def as_dict(self) -> dict:
        return {
            "number": self.number,
            "name": self.name,
            "passed": bool(self.passed),
            "tolerance": self.tolerance,
            "details": jsonable(self.details),
            "seconds": round(self.seconds, 3),
        }


def jsonable(obj):
    """Plain-Python copy of nested dicts/lists of numpy scalars and arrays.

    Non-finite floats become the strings "inf", "-inf" or "nan" so that the
    report stays valid JSON.
    """
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(obj, complex):
        return [jsonable(obj.real), jsonable(obj.imag)]
    return obj


def resolution_floor(eig: S.Eigensystem) -> float:
    return FLOOR_FACTOR * EPS * float(np.max(np.abs(eig.values), initial=1.0))


def _fit_doc(fit: S.SlopeFit) -> dict:
    return {"slope": fit.slope, "below_resolution": fit.below_resolution, "censored": fit.censored}


# ------------------------------------------------------------- shared setups


class PresetContext:
    """NF state and truncated operator for a preset; the eigensystem and the
    conjugation are computed on first use."""

    def __init__(self, name: str):
        self.cfg = presets.get(name).validate()
        self.dual = self.cfg.dual()
        self.p = self.cfg.params()
        self.pert = self.cfg.perturbation_obj(self.dual)
        self.state = N.run(self.pert, self.p)
        self.modes = modes_in_ball(self.dual, self.cfg.R_trunc)
        self.H = S.operator_for(self.pert, self.p.M, self.modes)

    @functools.cached_property
    def eig(self) -> S.Eigensystem:
        return S.eigensolve(self.H)

    @functools.cached_property
    def U(self) -> np.ndarray:
        return Q.conjugation_unitary(self.state.g_list, self.H.modes)

    @property
    def floor(self) -> float:
        return resolution_floor(self.eig)


@functools.lru_cache(maxsize=None)
def preset_context(name: str) -> PresetContext:
    return PresetContext(name)


def _sweep_indices(ctx, lo: float, hi: float, margin: float) -> np.ndarray:
    """Nonresonant interior modes with lo <= |xi - kappa| <= hi."""
    pts = ctx.H.modes.points
    nrm = np.linalg.norm(pts, axis=1)
    ok, _ = Rz.nonresonant_mask(pts, ctx.p, ctx.dual)
    interior = np.zeros(len(pts), dtype=bool)
    interior[ctx.H.interior(margin)] = True
    return np.nonzero(ok & interior & (nrm >= lo) & (nrm <= hi))[0]


def _index_of_value(ctx, xi: float) -> int:
    return ctx.modes.index_of((int(round(xi)),))


def random_real_symbol(rng: np.random.Generator, dual: DualLattice, n_pairs: int = 3,
                       kmax: int = 2, order: float = 1.0) -> FourierSymbol:
    """Random real symbol: a_{-k} = conj(a_k), coefficients built from
    Japanese brackets, linear factors and a bump of |xi|."""
    d = dual.dim
    terms: dict[tuple, E.Expr] = {}

    def real_shape() -> list[E.Expr]:
        s = float(rng.uniform(-1.0, order))
        i = int(rng.integers(d))
        return [
            E.jap(s),
            E.mul(E.xi(i), E.jap(s - 1.0)),
            E.mul(E.bump(E.mul(E.const(0.2), E.norm()), 0.4), E.jap(float(rng.uniform(-1.0, order)))),
        ]

    mean_w = rng.normal(size=3)
    terms[(0,) * d] = E.add(*[E.mul(E.const(float(w)), f) for w, f in zip(mean_w, real_shape())])
    for _ in range(n_pairs):
        k = tuple(int(v) for v in rng.integers(-kmax, kmax + 1, size=d))
        if not any(k):
            continue
        w = rng.normal(size=3) + 1j * rng.normal(size=3)
        shapes = real_shape()
        plus = E.add(*[E.mul(E.const(complex(c)), f) for c, f in zip(w, shapes)])
        minus = E.add(*[E.mul(E.const(complex(np.conj(c))), f) for c, f in zip(w, shapes)])
        kneg = tuple(-v for v in k)
        terms[k] = E.add(terms.get(k, E.ZERO), plus)
        terms[kneg] = E.add(terms.get(kneg, E.ZERO), minus)
    return FourierSymbol(dual, terms, order, 1.0)


def _free_case(M: float, shift: float, R: float = 10.0) -> dict:
    """Normal form and spectrum for V = shift (a constant) on Z^2."""
    dual = DualLattice.integer(2)
    p = NFParams(M=M, frak_e=2.0, delta=0.75, tau=2.0, epsilon=0.25, gamma=0.4, d=2, n_target=2)
    zero = (0, 0)
    terms = {zero: E.const(shift)} if shift else {}
    pert = N.Perturbation(FourierSymbol(dual, terms, M - p.frak_e, p.delta))
    state = N.run(pert, p)
    modes = modes_in_ball(dual, R)
    H = Q.hamiltonian(pert.v0, M, modes)
    eig = S.eigensolve(H)
    idx = np.nonzero(modes.norms >= 1.0)[0]
    matched = S.match_many(state, H, idx, eig, np.eye(len(modes)))
    pts = modes.points[idx]
    exact = np.linalg.norm(pts, axis=1) ** M + shift
    got = np.array([m.lambda_matched for m in matched])
    pred = np.array([m.lambda_pred for m in matched])
    scale = np.maximum(1.0, np.abs(exact))
    resid = np.array([m.residual for m in matched]) / scale
    probe = np.random.default_rng(7).uniform(-40, 40, size=(50, 2))
    probe = probe[np.linalg.norm(probe, axis=1) >= 1.0]
    zvals = state.z_mean_values(probe)
    z0_err = float(np.max(np.abs(zvals[0] - shift))) if len(zvals) else abs(shift)
    zhigher = float(np.max(np.abs(zvals[1:]), initial=0.0))
    return {
        "M": M,
        "modes": len(idx),
        "eig_rel_err": float(np.max(np.abs(got - exact) / scale)),
        "pred_rel_err": float(np.max(np.abs(pred - exact) / scale)),
        "max_rel_residual": float(resid.max()),
        "z0_err": z0_err,
        "z_higher_max": zhigher,
        "z_res_zero": state.z_res.is_zero(),
        "generators_zero": all(g.is_zero() for g in state.g_list),
        "remainder_zero": state.v.is_zero(),
    }


# ------------------------------------------------------------------ criteria


def check_free(seed: int = 0) -> CheckResult:
    tol = 1e-12
    cases = [_free_case(M, 0.0) for M in (1.0, 2.0, 3.0)]
    ok = all(
        c["eig_rel_err"] <= tol and c["pred_rel_err"] <= tol and c["max_rel_residual"] <= tol
        and c["z0_err"] <= tol and c["z_higher_max"] <= tol and c["z_res_zero"] and c["generators_zero"]
        for c in cases
    )
    return CheckResult(1, "exactness at V=0", ok, "1e-12 relative", {"cases": cases})


def check_constant_shift(seed: int = 0, c: float = 0.7) -> CheckResult:
    tol = 1e-12
    cases = [_free_case(M, c) for M in (1.0, 2.0, 3.0)]
    ok = all(
        x["eig_rel_err"] <= tol and x["pred_rel_err"] <= tol and x["z0_err"] <= tol
        and x["z_higher_max"] <= tol and x["z_res_zero"]
        for x in cases
    )
    return CheckResult(2, "constant shift", ok, "1e-12", {"shift": c, "cases": cases})


def check_hermiticity(seed: int = 0, n_symbols: int = 20) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    rows = []
    for _ in range(n_symbols):
        dual = dual_basis(Lattice(random_basis(rng, 2)))
        a = random_real_symbol(rng, dual)
        # about 300 modes whatever the covolume
        radius = math.sqrt(300.0 * abs(np.linalg.det(dual.basis)) / math.pi)
        modes = modes_in_ball(dual, radius)
        H = Q.weyl_matrix(a, modes)
        kmax = max(float(np.linalg.norm(a.k_vector(k))) for k in a.terms)
        inner = H.interior(kmax)
        scale = max(1.0, float(np.max(np.abs(H.matrix), initial=0.0)))
        rel = H.hermitian_defect(inner) / scale
        worst = max(worst, rel)
        rows.append({"modes": len(modes), "interior": len(inner), "rel_defect": rel})
    return CheckResult(3, "Weyl hermiticity", worst <= 1e-12, "1e-12 relative",
                       {"worst": worst, "symbols": rows})


def check_composition_symmetry(seed: int = 0, n_points: int = 30) -> CheckResult:
    rng = np.random.default_rng(seed + 1)
    dual = DualLattice.integer(2)
    a = random_real_symbol(rng, dual, order=1.0)
    b = random_real_symbol(rng, dual, order=0.5)
    x = rng.uniform(0, 2 * np.pi, size=(n_points, 2))
    xi = rng.normal(size=(n_points, 2)) * 4.0
    per_j = {}
    for j in range(5):
        ab = C.sigma_j(a, b, j).evaluate(x, xi)
        ba = C.sigma_j(b, a, j).evaluate(x, xi)
        per_j[j] = float(np.max(np.abs(ab - (-1) ** j * ba)))
    worst = max(per_j.values())
    return CheckResult(4, "composition symmetry", worst <= 1e-10, "1e-10",
                       {"max_abs_by_j": per_j, "points": n_points})


def check_homological(seed: int = 0, n_points: int = 40) -> CheckResult:
    ctx = preset_context("mathieu-1d")
    p = ctx.p
    nr = split_symbol(ctx.pert.v0.with_terms(ctx.pert.v0.terms, order=p.M - p.frak_e, delta=p.delta), p).nr
    g = N.solve_homological(nr, p)
    bracket = C.poisson(ctx.state.h0, g)
    xi = np.geomspace(20.0, 200.0, n_points)[:, None]
    ok, _ = Rz.nonresonant_mask(xi, p, ctx.dual)
    xi = xi[ok]
    bv = bracket.coefficient_values(xi)
    nv = nr.coefficient_values(xi)
    keys = set(bv) | set(nv)
    resid = np.zeros(len(xi))
    scale = np.zeros(len(xi))
    for k in keys:
        r = bv.get(k, 0.0) + nv.get(k, 0.0)
        resid = np.maximum(resid, np.abs(r))
        scale = np.maximum(scale, np.abs(nv.get(k, 0.0)))
    floor = FLOOR_FACTOR * EPS * float(max(scale.max(), 1.0))
    fit = S.fit_loglog(xi[:, 0], resid, floor)
    closed = N.homological_defect(nr, p).coefficient_values(xi)
    closed_max = float(max((np.max(np.abs(v)) for v in closed.values()), default=0.0))
    details = {"points": len(xi), "max_residual": float(resid.max()), "floor": floor,
               "closed_form_max": closed_max, **_fit_doc(fit)}
    return CheckResult(5, "homological residual", fit.ok(-2.0), "slope <= -2", details)


def check_eigen_asymptotics(seed: int = 0) -> CheckResult:
    ctx = preset_context("mathieu-1d")
    xs = [16.0, 24.0, 32.0, 48.0, 64.0]
    idx = [_index_of_value(ctx, x) for x in xs]
    matched = S.match_many(ctx.state, ctx.H, idx, ctx.eig, ctx.U)
    err = np.array([abs(m.lambda_pred - m.lambda_matched) for m in matched])
    fit = S.fit_loglog(xs, err, ctx.floor)
    p = ctx.p
    bound = -(p.frak_e + 2 * p.rho - p.M) + 0.5
    oracle = S.mathieu_oracle(5)
    details = {
        "xi": xs,
        "errors": err,
        "overlaps": [m.overlap for m in matched],
        "floor": ctx.floor,
        "bound": bound,
        "err_at_64": float(err[-1]),
        "oracle_low_spectrum_diff": float(np.max(np.abs(ctx.eig.values[: len(oracle)] - oracle))),
        **_fit_doc(fit),
    }
    ok = fit.ok(bound) and err[-1] < 1e-2 and not any(m.ambiguous for m in matched)
    return CheckResult(6, "eigenvalue asymptotics", ok, f"slope <= {bound:g}, err(64) < 1e-2", details)


def check_unbounded(seed: int = 0) -> CheckResult:
    ctx = preset_context("unbounded-2d")
    p = ctx.p
    idx = _sweep_indices(ctx, 10.0, 18.0, margin=6.0)
    matched = S.match_many(ctx.state, ctx.H, idx, ctx.eig, ctx.U)
    pts = ctx.H.modes.points[idx]
    jap = np.sqrt(1.0 + np.sum(pts * pts, axis=1))
    resid = np.array([m.residual for m in matched])
    expo = p.M - p.frak_e - 2 * p.rho
    scaled = resid * jap ** (-expo)
    fit = S.fit_loglog(jap, scaled, ctx.floor)
    # bounded means no growth trend; same 0.5 slack as the eigenvalue fits
    bound = 0.5
    details = {"points": len(idx), "exponent": expo, "constant": float(scaled.max()),
               "scaled_min": float(scaled.min()), "floor": ctx.floor, "bound": bound, **_fit_doc(fit)}
    ok = len(idx) >= 10 and fit.ok(bound)
    return CheckResult(7, "unbounded perturbation", ok, f"scaled residual slope <= {bound:g}", details)


def check_splitting(seed: int = 0) -> CheckResult:
    ctx = preset_context("mathieu-1d")
    xs = [16.0, 20.0, 24.0, 28.0, 32.0, 40.0, 48.0]
    ok_nr, _ = Rz.nonresonant_mask(np.array(xs)[:, None], ctx.p, ctx.dual)
    xs = [x for x, ok in zip(xs, ok_nr) if ok]
    scan = S.splitting_scan(ctx.state, ctx.pert, ctx.H, xs, ctx.eig, ctx.U)
    split = np.array([abs(s[1]) for s in scan])
    fit = S.fit_loglog(xs, split, ctx.floor)
    pts = np.array(xs)[:, None]
    zp = ctx.state.z_mean_values(pts)
    zm = ctx.state.z_mean_values(-pts)
    even = float(np.max(np.abs(zp - zm), initial=0.0))
    details = {"xi": xs, "splitting": split, "floor": ctx.floor, "z_even_defect": even, **_fit_doc(fit)}
    return CheckResult(8, "symmetry splitting", fit.ok(-3.0) and even <= 1e-10,
                       "slope <= -3, z even to 1e-10", details)


def check_density(seed: int = 0) -> CheckResult:
    cfg = presets.get("square-2d")
    dual, p = cfg.dual(), cfg.params()
    rows = Rz.census(p, dual, [50, 100, 200, 400], seed=seed)
    C_fit, table = Rz.density_constant_check(rows, -0.25, fit_R=50)
    details = {
        "C": C_fit,
        "threshold_R": Rz.density_threshold(p, dual),
        "rows": [{"R": r.R, "total": r.total, "nonres": r.nonres, "fraction": r.fraction,
                  "vacuous": r.vacuous_count} for r in rows],
        "bound_checks": [{"R": R, "resonant": f, "bound": b, "holds": h} for R, f, b, h in table],
    }
    return CheckResult(9, "density census", all(h for *_, h in table), "1 - f <= C R^-0.25", details)


def check_inclusion(seed: int = 0, samples: int = 100_000, R: float = 200.0) -> CheckResult:
    cfg = presets.get("square-2d")
    dual, p = cfg.dual(), cfg.params()
    ks = nonzero_vectors(dual, 4.0, strict=False).points
    total, rows = 0, []
    for i, k in enumerate(ks):
        res = Rz.inclusion_check(k, R, p, dual, samples=samples, seed=seed + i)
        total += res.violations
        rows.append({"k": list(res.k), "violations": res.violations,
                     "margin": Rz.inclusion_margin(k, R, p, dual.min_gap_r)})
    details = {"k_count": len(ks), "violations": total, "samples_per_k": samples,
               "admissible": R > Rz.inclusion_threshold(p, dual),
               "threshold_R": Rz.inclusion_threshold(p, dual),
               "min_margin": min(r["margin"] for r in rows), "per_k": rows}
    return CheckResult(10, "layer inclusion", total == 0, "0 violations", details)


def check_conjugation_gain(seed: int = 0) -> CheckResult:
    ctx = preset_context("mathieu-1d")
    p = ctx.p
    one = N.run(ctx.pert, p, n_target=1)
    U1 = Q.conjugation_unitary(one.g_list, ctx.H.modes)
    Hn = Q.TruncatedOperator(ctx.H.modes, U1 @ ctx.H.matrix @ U1.conj().T)
    idx = _sweep_indices(ctx, 16.0, 48.0, margin=16.0)
    idx = idx[ctx.H.modes.points[idx, 0] > 0]
    xs = ctx.H.modes.points[idx, 0]
    floor = ctx.floor * math.sqrt(len(ctx.H))
    before = S.fit_loglog(xs, Q.row_coupling(ctx.H, idx), floor)
    after = S.fit_loglog(xs, Q.row_coupling(Hn, idx), floor)
    gain = before.slope - after.slope
    need = p.rho - 0.3
    details = {"points": len(idx), "slope_before": before.slope, "slope_after": after.slope,
               "gain": gain, "required": need, "floor": floor,
               "after_below_resolution": after.below_resolution}
    return CheckResult(11, "conjugation efficacy", gain >= need, f"gain >= {need:g}", details)


def check_orthogonality(seed: int = 0) -> CheckResult:
    ctx = preset_context("mathieu-1d")
    xs = [s * x for x in range(16, 26) for s in (1, -1)]
    ok_nr, _ = Rz.nonresonant_mask(np.array(xs, dtype=float)[:, None], ctx.p, ctx.dual)
    idx = [_index_of_value(ctx, x) for x in xs]
    qm = S.quasimodes(ctx.state, ctx.H.modes, idx, ctx.U)
    worst = float(S.pairwise_overlaps(qm).max())
    ok = worst <= 1e-10 and bool(np.all(ok_nr)) and len(set(xs)) == 20
    return CheckResult(12, "quasimode orthogonality", ok, "1e-10",
                       {"xi": xs, "all_nonresonant": bool(np.all(ok_nr)), "max_overlap": worst})


def check_floquet(seed: int = 0) -> CheckResult:
    ctx = preset_context("floquet-2d")
    p, kappa = ctx.p, ctx.pert.kappa
    # free part: V = 0 with the same shift
    free = N.Perturbation(FourierSymbol.zero(ctx.dual, p.M - p.frak_e, p.delta), kappa=kappa)
    free_state = N.run(free, p)
    H0 = S.operator_for(free, p.M, ctx.modes)
    free_idx = np.nonzero(np.linalg.norm(H0.modes.points, axis=1) >= 2 * p.gamma)[0]
    exact = np.linalg.norm(H0.modes.points[free_idx], axis=1) ** p.M
    diag = np.real(np.diag(H0.matrix))[free_idx]
    pred = N.lambda_n(free_state, H0.modes.points[free_idx])
    offdiag = float(np.max(np.abs(H0.matrix - np.diag(np.diag(H0.matrix)))))
    free_err = float(max(np.max(np.abs(diag - exact) / np.maximum(1, exact)),
                         np.max(np.abs(pred - exact) / np.maximum(1, exact)), offdiag))

    # perturbed: the shifted-mode operator against direct quantization of the shifted symbol
    Hd = S.shifted_operator_direct(ctx.pert, p.M, ctx.modes)
    route = float(np.max(np.abs(Hd.matrix - ctx.H.matrix)))
    route_rel = route / max(1.0, float(np.max(np.abs(ctx.H.matrix))))
    direct = S.eigensolve(Hd)
    on_shifted = Q.TruncatedOperator(ctx.H.modes, Hd.matrix)
    idx = _sweep_indices(ctx, 10.0, 18.0, margin=6.0)
    matched = S.match_many(ctx.state, on_shifted, idx, direct, ctx.U)
    err = np.array([abs(m.lambda_pred - m.lambda_matched) for m in matched])
    nrm = np.linalg.norm(ctx.H.modes.points[idx], axis=1)
    fit = S.fit_loglog(nrm, err, resolution_floor(direct))
    bound = -(p.frak_e + 2 * p.rho - p.M) + 0.5
    details = {"free_rel_err": free_err, "route_max_diff": route,
               "points": len(idx), "max_error": float(err.max()) if len(err) else None,
               "bound": bound, **_fit_doc(fit)}
    ok = (free_err <= 1e-12 and route_rel <= 1e-12 and len(idx) >= 10
          and fit.ok(bound) and float(err.max()) < 1e-2)
    return CheckResult(13, "Floquet shift", ok, f"1e-12 free; slope <= {bound:g}, err < 1e-2", details)


CRITERIA: dict[int, Callable[..., CheckResult]] = {
    1: check_free,
    2: check_constant_shift,
    3: check_hermiticity,
    4: check_composition_symmetry,
    5: check_homological,
    6: check_eigen_asymptotics,
    7: check_unbounded,
    8: check_splitting,
    9: check_density,
    10: check_inclusion,
    11: check_conjugation_gain,
    12: check_orthogonality,
    13: check_floquet,
}


def run_check(number: int, seed: int = 0) -> CheckResult:
    fn = CRITERIA[number]
    t0 = time.perf_counter()
    res = fn(seed=seed)
    res.seconds = time.perf_counter() - t0
    return res


def run_all(numbers=None, seed: int = 0, on_result: Callable[[CheckResult], None] | None = None) -> list[CheckResult]:
    out = []
    for n in sorted(CRITERIA if numbers is None else numbers):
        r = run_check(n, seed)
        if on_result is not None:
            on_result(r)
        out.append(r)
    return out


__all__ = ["CheckResult", "CRITERIA", "run_check", "run_all", "preset_context", "random_real_symbol",
           "resolution_floor", "jsonable", "PresetContext"]
