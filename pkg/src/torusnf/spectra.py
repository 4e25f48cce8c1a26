"""Diagonalization oracle, quasimodes and eigenvalue matching.

The quasimode attached to a mode xi is phi = U^dagger e_xi, with
U = exp(iG_n) ... exp(iG_1) the normal-form conjugation restricted to the
truncation.  It is matched to the eigenvalue cluster of H on which it has the
largest projection; clusters absorb (near-)multiplicities such as the +-xi
pairs of an even perturbation.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .lattice import ModeSet
from .normalform import NFState, Perturbation, PreconditionError, lambda_n
from .quantize import TruncatedOperator, hermitian_eigh, conjugation_unitary, hamiltonian, weyl_matrix
from .resonance import nonresonant_mask

AMBIGUOUS_OVERLAP = 0.5
CLUSTER_RTOL = 1e-9


@dataclass
class Eigensystem:
    values: np.ndarray
    vectors: np.ndarray
    clusters: list[np.ndarray]

    def cluster_of(self, j: int) -> int:
        for c, members in enumerate(self.clusters):
            if j in members:
                return c
        raise IndexError(j)


def _clusters(values: np.ndarray, rtol: float) -> list[np.ndarray]:
    out, start = [], 0
    scale = max(1.0, float(np.max(np.abs(values), initial=0.0)))
    for j in range(1, len(values) + 1):
        if j == len(values) or values[j] - values[j - 1] > rtol * scale:
            out.append(np.arange(start, j))
            start = j
    return out


def eigensolve(H: TruncatedOperator, herm_tol: float = 1e-10, cluster_rtol: float = CLUSTER_RTOL) -> Eigensystem:
    """Ascending eigenvalues and orthonormal eigenvectors of a Hermitian H."""
    m = H.matrix
    scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
    if H.hermitian_defect() > herm_tol * scale:
        raise ValueError(f"matrix is not Hermitian (defect {H.hermitian_defect():.3g})")
    w, V = hermitian_eigh(m)
    res = np.linalg.norm(m @ V - V * w, axis=0)
    if np.any(res > 1e-9 * np.linalg.norm(m, 2)):
        raise ArithmeticError("eigenpair residual above tolerance")
    return Eigensystem(w, V, _clusters(w, cluster_rtol))


@dataclass
class MatchedEigenvalue:
    xi: tuple
    lambda_pred: float
    lambda_matched: float
    overlap: float
    residual: float
    nonresonant: bool
    ambiguous: bool
    eig_index: int

    def as_row(self) -> dict:
        d = asdict(self)
        d["xi"] = list(self.xi)
        return d


@dataclass
class QuasimodeSet:
    """Quasimodes for a list of mode indices, with the conjugation they came from."""

    modes: ModeSet
    indices: np.ndarray
    phis: np.ndarray  # columns
    U: np.ndarray


def quasimodes(state: NFState, modes: ModeSet, indices: Sequence[int], U: np.ndarray | None = None) -> QuasimodeSet:
    indices = np.asarray(indices, dtype=int)
    if U is None:
        U = conjugation_unitary(state.g_list, modes)
    phis = U.conj().T[:, indices]
    return QuasimodeSet(modes, indices, phis, U)


def quasimode_residuals(H: TruncatedOperator, qm: QuasimodeSet, lam: np.ndarray) -> np.ndarray:
    """||H phi - lambda phi|| per quasimode."""
    r = H.matrix @ qm.phis - qm.phis * lam[None, :]
    return np.linalg.norm(r, axis=0)


def conjugated_residuals(H: TruncatedOperator, qm: QuasimodeSet, lam: np.ndarray) -> np.ndarray:
    """||(U H U^dagger - lambda) e_xi||; equals ``quasimode_residuals`` by unitarity."""
    Hn = qm.U @ H.matrix @ qm.U.conj().T
    cols = Hn[:, qm.indices].copy()
    cols[qm.indices, np.arange(len(qm.indices))] -= lam
    return np.linalg.norm(cols, axis=0)


def match_many(state: NFState, H: TruncatedOperator, indices: Sequence[int],
               eig: Eigensystem | None = None, U: np.ndarray | None = None) -> list[MatchedEigenvalue]:
    """Match quasimodes of the given modes to eigenpairs of H, injectively.

    Each eigenvalue cluster offers as many slots as its size; the assignment
    maximizes the total projection weight of the quasimodes onto the clusters.
    """
    eig = eigensolve(H) if eig is None else eig
    modes = H.modes
    qm = quasimodes(state, modes, indices, U)
    pts = modes.points[qm.indices]
    lam = lambda_n(state, pts)
    lam = np.atleast_1d(lam)
    resid = quasimode_residuals(H, qm, lam)
    ok, _ = nonresonant_mask(pts, state.params, state.dual)
    coeff = eig.vectors.conj().T @ qm.phis  # (n_eig, n_q)
    # projection weight per cluster
    slot_eig, slot_weight_rows = [], []
    for members in eig.clusters:
        w = np.sqrt(np.sum(np.abs(coeff[members]) ** 2, axis=0))
        # within a cluster, prefer the member with the larger individual overlap
        for j in members:
            slot_eig.append(j)
            slot_weight_rows.append(w + 1e-12 * np.abs(coeff[j]))
    weights = np.array(slot_weight_rows)  # (n_slots, n_q)
    # restrict candidate slots to keep the assignment small
    cand = np.unique(np.argsort(-weights, axis=0)[: max(8, 2 * len(qm.indices))].ravel())
    # rows come back in quasimode order
    rows, cols = linear_sum_assignment(-weights[cand].T)
    out = []
    for q, s in zip(rows, cols):
        slot = cand[s]
        j = slot_eig[slot]
        ov = float(weights[slot, q])
        out.append(MatchedEigenvalue(
            xi=tuple(float(v) for v in pts[q]),
            lambda_pred=float(lam[q]),
            lambda_matched=float(eig.values[j]),
            overlap=min(ov, 1.0),
            residual=float(resid[q]),
            nonresonant=bool(ok[q]),
            ambiguous=ov < AMBIGUOUS_OVERLAP,
            eig_index=int(j),
        ))
    return out


def _index_of_point(modes: ModeSet, xi, candidates) -> int:
    for i in candidates:
        if np.allclose(modes.points[i], xi, rtol=0, atol=1e-12):
            return int(i)
    raise KeyError(xi)


def match_by_overlap(state: NFState, H: TruncatedOperator, xi, eig: Eigensystem | None = None,
                     U: np.ndarray | None = None) -> MatchedEigenvalue:
    """Match the quasimode at the mode whose point is ``xi``."""
    idx = _index_of_point(H.modes, np.asarray(xi, dtype=float), range(len(H.modes)))
    return match_many(state, H, [idx], eig, U)[0]


def pairwise_overlaps(qm: QuasimodeSet) -> np.ndarray:
    """|<phi_i, phi_j>| for i != j (diagonal set to 0)."""
    G = np.abs(qm.phis.conj().T @ qm.phis)
    np.fill_diagonal(G, 0.0)
    return G


def splitting_scan(state: NFState, pert: Perturbation, H: TruncatedOperator, xi_list,
                   eig: Eigensystem | None = None, U: np.ndarray | None = None):
    """[(xi, lambda_xi - lambda_{-xi})] from injectively matched eigenvalues."""
    if not pert.symmetric_flag:
        raise PreconditionError("splitting scan needs a perturbation even in xi")
    modes = H.modes
    lookup = {tuple(np.round(p, 12)): i for i, p in enumerate(modes.points)}
    idx = []
    for xi in xi_list:
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        try:
            idx += [lookup[tuple(np.round(xi, 12))], lookup[tuple(np.round(-xi, 12))]]
        except KeyError:
            raise KeyError(f"+-{xi} not both in the truncation") from None
    matched = match_many(state, H, idx, eig, U)
    out = []
    for j in range(0, len(matched), 2):
        a, b = matched[j], matched[j + 1]
        out.append((a.xi, a.lambda_matched - b.lambda_matched, a, b))
    return out


# ------------------------------------------------------------------- Floquet


def floquet_shift(pert: Perturbation, kappa) -> Perturbation:
    """Same perturbation, with Floquet parameter ``kappa``."""
    kappa = np.asarray(kappa, dtype=float)
    if not np.any(kappa):
        return pert
    return Perturbation(pert.v0, kappa=kappa, symmetric_flag=pert.symmetric_flag)


def operator_for(pert: Perturbation, M: float, modes: ModeSet) -> TruncatedOperator:
    """H on the (shifted, if Floquet) mode points."""
    m = modes if pert.kappa is None else modes.shifted(pert.kappa)
    return hamiltonian(pert.v0, M, m)


def shifted_operator_direct(pert: Perturbation, M: float, modes: ModeSet) -> TruncatedOperator:
    """Independent route: quantize |xi - kappa|^M + v(x, xi - kappa) on unshifted lattice points."""
    kappa = np.zeros(modes.dim) if pert.kappa is None else pert.kappa
    H = weyl_matrix(pert.shifted_symbol(), modes)
    H.matrix[np.diag_indices(len(modes))] += np.linalg.norm(modes.points - kappa, axis=1) ** M
    return H


# -------------------------------------------------------------- slope fits


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    below_resolution: bool
    censored: int

    def ok(self, bound: float) -> bool:
        return self.slope <= bound


def fit_loglog(x, y, floor: float = 0.0) -> SlopeFit:
    """Least-squares slope of log y against log x.

    Values at or below ``floor`` are raised to it; this can only make the
    fitted decay shallower.  If every value is at or below the floor the
    decay is unresolved and the slope is reported as -inf.
    """
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    low = y <= floor
    if np.all(low):
        return SlopeFit(-math.inf, -math.inf, True, int(low.sum()))
    yy = np.maximum(y, floor) if floor > 0 else y
    if np.any(yy <= 0):
        raise ValueError("cannot fit zeros without a positive floor")
    slope, icpt = np.polyfit(np.log(x), np.log(yy), 1)
    return SlopeFit(float(slope), float(icpt), False, int(low.sum()))


def mathieu_oracle(n_max: int, q_scaled: float = 4.0) -> np.ndarray:
    """Sorted eigenvalues of -u'' + 2 cos(x) u on 2 pi periodic functions.

    Uses the even-order Mathieu characteristic values: lambda = a_{2n}(q)/4
    and b_{2n}(q)/4 with q = 4.
    """
    from scipy.special import mathieu_a, mathieu_b

    vals = [mathieu_a(0, q_scaled) / 4.0]
    for n in range(1, n_max + 1):
        vals += [mathieu_a(2 * n, q_scaled) / 4.0, mathieu_b(2 * n, q_scaled) / 4.0]
    return np.sort(np.array(vals))


__all__ = [
    "Eigensystem",
    "MatchedEigenvalue",
    "QuasimodeSet",
    "eigensolve",
    "quasimodes",
    "quasimode_residuals",
    "conjugated_residuals",
    "match_many",
    "match_by_overlap",
    "pairwise_overlaps",
    "splitting_scan",
    "floquet_shift",
    "operator_for",
    "shifted_operator_direct",
    "SlopeFit",
    "fit_loglog",
    "mathieu_oracle",
]
