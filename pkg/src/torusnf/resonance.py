"""Nonresonant frequencies, lattice census and resonant-layer measures.

A frequency xi is nonresonant when every dual vector k with
0 < |k| < <xi>^epsilon satisfies |xi.k| > 2 gamma <xi>^delta / |k|^tau.
If no k lies in that range the condition holds vacuously; such points are
counted separately.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .cutoffs import NFParams
from .lattice import DualLattice, modes_in_ball, nonzero_vectors

CHUNK = 1 << 16


def _jap(points: np.ndarray) -> np.ndarray:
    return np.sqrt(1.0 + np.sum(points * points, axis=1))


def nonresonant_mask(points, p: NFParams, dual: DualLattice) -> tuple[np.ndarray, np.ndarray]:
    """Boolean arrays (nonresonant, vacuous) for an (N, d) array of frequencies."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(pts)
    ok = np.ones(n, dtype=bool)
    vacuous = np.ones(n, dtype=bool)
    if n == 0:
        return ok, vacuous
    jap = _jap(pts)
    kr = jap ** p.epsilon
    ks = nonzero_vectors(dual, float(kr.max()), strict=True)
    if len(ks) == 0:
        return ok, vacuous
    kvec = ks.points
    knorm = np.linalg.norm(kvec, axis=1)
    ktau = knorm ** p.tau
    for s in range(0, n, CHUNK):
        sl = slice(s, s + CHUNK)
        dots = np.abs(pts[sl] @ kvec.T)
        in_range = knorm[None, :] < kr[sl, None]
        bound = 2.0 * p.gamma * (jap[sl, None] ** p.delta) / ktau[None, :]
        bad = in_range & ~(dots > bound)
        ok[sl] = ~np.any(bad, axis=1)
        vacuous[sl] = ~np.any(in_range, axis=1)
    return ok, vacuous


def is_nonresonant(xi, p: NFParams, dual: DualLattice) -> bool:
    ok, _ = nonresonant_mask(np.atleast_2d(xi), p, dual)
    return bool(ok[0])


def is_vacuous(xi, p: NFParams, dual: DualLattice) -> bool:
    _, vac = nonresonant_mask(np.atleast_2d(xi), p, dual)
    return bool(vac[0])


# ---------------------------------------------------------------- thresholds


def _radius_threshold(base: float, expo: float) -> float:
    """Smallest R* with base < R^expo for every R > R* (inf if never)."""
    if base <= 0:
        return 0.0
    if abs(expo) < 1e-12:
        return 0.0 if base < 1.0 else math.inf
    if expo < 0:
        return math.inf
    return base ** (1.0 / expo)


def density_threshold(p: NFParams, dual: DualLattice) -> float:
    """Radius beyond which the density estimate is asserted."""
    e_t = p.epsilon * (p.tau + 1.0)
    return _radius_threshold(dual.min_gap_r * 2.0 ** e_t, p.delta - e_t)


def inclusion_threshold(p: NFParams, dual: DualLattice) -> float:
    """Radius beyond which every widened layer sits in the doubled layer."""
    e_t = p.epsilon * (p.tau + 1.0)
    return _radius_threshold(dual.min_gap_r * 2.0 ** e_t / (2.0 * p.gamma), p.delta - e_t)


# -------------------------------------------------------------------- census


@dataclass(frozen=True)
class CensusRow:
    R: float
    total: int
    nonres: int
    fraction: float
    vacuous_count: int
    seed: int | None
    admissible: bool

    @property
    def resonant_fraction(self) -> float:
        """1 - fraction with vacuous points left out."""
        denom = self.total - self.vacuous_count
        if denom <= 0:
            return 0.0
        return 1.0 - (self.nonres - self.vacuous_count) / denom


def census(p: NFParams, dual: DualLattice, R_list: Iterable[float], kappa=None,
           seed: int | None = None) -> list[CensusRow]:
    """Exhaustive count of nonresonant lattice points in balls B_R.

    With ``kappa`` the test is applied to xi - kappa (Floquet shift).
    """
    thr = density_threshold(p, dual)
    rows = []
    for R in sorted(float(r) for r in R_list):
        modes = modes_in_ball(dual, R)
        pts = modes.points if kappa is None else modes.points - np.asarray(kappa, dtype=float)
        ok, vac = nonresonant_mask(pts, p, dual)
        total = len(modes)
        nonres = int(ok.sum())
        rows.append(CensusRow(R, total, nonres, nonres / total if total else 0.0,
                              int(vac.sum()), seed, R > thr))
    return rows


def census_csv(rows: Sequence[CensusRow]) -> str:
    buf = io.StringIO()
    fields = ["R", "total", "nonres", "fraction", "vacuous_count", "seed", "admissible"]
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(asdict(r))
    return buf.getvalue()


def density_constant_check(rows: Sequence[CensusRow], exponent: float, fit_R: float | None = None):
    """Fit C in 1 - fraction <= C R^exponent at the first (or given) radius
    and report, per remaining row, whether the bound holds.

    Returns (C, [(R, 1 - fraction, C R^exponent, holds)]).
    """
    rows = sorted(rows, key=lambda r: r.R)
    base = rows[0] if fit_R is None else next(r for r in rows if r.R == fit_R)
    C = base.resonant_fraction / base.R ** exponent
    out = []
    for r in rows:
        if r is base:
            continue
        bound = C * r.R ** exponent
        out.append((r.R, r.resonant_fraction, bound, r.resonant_fraction <= bound))
    return C, out


# ---------------------------------------------------------- Monte Carlo layers


def sample_ball(rng: np.random.Generator, n: int, d: int, radius: float) -> np.ndarray:
    """Uniform samples in the d-ball."""
    x = rng.normal(size=(n, d))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return x * (radius * rng.uniform(size=(n, 1)) ** (1.0 / d))


def layer_half_width(k, R: float, p: NFParams, factor: float = 2.0) -> float:
    """Half-width along k/|k| of {|xi.k| < factor gamma R^delta / |k|^tau}."""
    nk = float(np.linalg.norm(k))
    return factor * p.gamma * R ** p.delta / nk ** (p.tau + 1.0)


def strip_fraction(half_width: float, R: float, d: int) -> float:
    """Volume fraction of {|x_1| < w} inside the d-ball of radius R (d <= 3)."""
    w = min(half_width, R)
    t = w / R
    if d == 1:
        return t
    if d == 2:
        return (2.0 / math.pi) * (t * math.sqrt(1.0 - t * t) + math.asin(t))
    if d == 3:
        return 1.5 * t - 0.5 * t ** 3
    raise ValueError("closed form available for d <= 3 only")


@dataclass(frozen=True)
class MCEstimate:
    value: float
    stderr: float
    samples: int
    seed: int | None


def layer_measure_mc(k, R: float, p: NFParams, samples: int = 100_000,
                     rng: np.random.Generator | None = None, seed: int | None = 0) -> MCEstimate:
    """Monte Carlo estimate of |A_k| / |B_R|, A_k = {xi in B_R : |xi.k| < 2 gamma R^delta / |k|^tau}."""
    k = np.asarray(k, dtype=float)
    if not np.any(k):
        raise ValueError("k must be nonzero")
    if samples < 10_000:
        raise ValueError("use at least 10^4 samples")
    rng = np.random.default_rng(seed) if rng is None else rng
    xi = sample_ball(rng, samples, len(k), R)
    nk = np.linalg.norm(k)
    hit = np.abs(xi @ k) < 2.0 * p.gamma * R ** p.delta / nk ** p.tau
    f = hit.mean()
    return MCEstimate(float(f), float(math.sqrt(max(f * (1 - f), 0.0) / samples)), samples, seed)


def layer_union_mc(R: float, p: NFParams, dual: DualLattice, samples: int = 100_000,
                   seed: int | None = 0) -> tuple[float, float]:
    """(sum over layers, measure of their union) as fractions of |B_R|, for 0 < |k| < (2R)^epsilon."""
    rng = np.random.default_rng(seed)
    ks = nonzero_vectors(dual, (2.0 * R) ** p.epsilon).points
    xi = sample_ball(rng, samples, dual.dim, R)
    thr = 2.0 * p.gamma * R ** p.delta / np.linalg.norm(ks, axis=1) ** p.tau
    hits = np.abs(xi @ ks.T) < thr[None, :]
    return float(hits.mean(axis=0).sum()), float(np.any(hits, axis=1).mean())


@dataclass(frozen=True)
class InclusionResult:
    k: tuple
    violations: int
    samples: int
    admissible: bool
    threshold: float


def inclusion_check(k, R: float, p: NFParams, dual: DualLattice, samples: int = 100_000,
                    r: float | None = None, rng: np.random.Generator | None = None,
                    seed: int | None = 0) -> InclusionResult:
    """Sample xi in A_k and h in B_r; count cases with xi + h outside the
    doubled layer {xi in B_2R : |xi.k| < 4 gamma R^delta / |k|^tau}."""
    k = np.asarray(k, dtype=float)
    if not np.any(k):
        raise ValueError("k must be nonzero")
    d = len(k)
    r = dual.min_gap_r if r is None else float(r)
    rng = np.random.default_rng(seed) if rng is None else rng
    nk = float(np.linalg.norm(k))
    khat = k / nk
    w = layer_half_width(k, R, p)
    # orthonormal frame with khat first
    q, _ = np.linalg.qr(np.column_stack([khat, np.eye(d)])[:, :d])
    if q[:, 0] @ khat < 0:
        q[:, 0] *= -1
    xi = np.empty((0, d))
    while len(xi) < samples:
        m = 2 * (samples - len(xi)) + 16
        local = np.column_stack([rng.uniform(-w, w, m)] + [rng.uniform(-R, R, m) for _ in range(d - 1)])
        cand = local @ q.T
        cand = cand[np.linalg.norm(cand, axis=1) < R]
        cand = cand[np.abs(cand @ k) < 2.0 * p.gamma * R ** p.delta / nk ** p.tau]
        xi = np.vstack([xi, cand])
    xi = xi[:samples]
    h = sample_ball(rng, samples, d, r) if r > 0 else np.zeros((samples, d))
    moved = xi + h
    inside = (np.linalg.norm(moved, axis=1) < 2.0 * R) & (
        np.abs(moved @ k) < 4.0 * p.gamma * R ** p.delta / nk ** p.tau)
    thr = inclusion_threshold(p, dual)
    admissible = R > thr and nk < (2.0 * R) ** p.epsilon
    return InclusionResult(tuple(k.tolist()), int((~inside).sum()), samples, admissible, thr)


def inclusion_margin(k, R: float, p: NFParams, r: float) -> float:
    """4 gamma R^delta/|k|^tau - (2 gamma R^delta/|k|^tau + r |k|): the worst-case slack."""
    nk = float(np.linalg.norm(k))
    return 2.0 * p.gamma * R ** p.delta / nk ** p.tau - r * nk


__all__ = [
    "nonresonant_mask",
    "is_nonresonant",
    "is_vacuous",
    "density_threshold",
    "inclusion_threshold",
    "CensusRow",
    "census",
    "census_csv",
    "density_constant_check",
    "sample_ball",
    "strip_fraction",
    "layer_half_width",
    "MCEstimate",
    "layer_measure_mc",
    "layer_union_mc",
    "InclusionResult",
    "inclusion_check",
    "inclusion_margin",
]
