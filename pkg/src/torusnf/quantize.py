"""Matrices of Weyl and classical quantizations on a truncated Fourier basis,
and conjugation by exp(i G).

Entry (row r, column c) of Op^w(a) is a_{k_r - k_c}((p_r + p_c) / 2); the
classical quantization uses a_{k_r - k_c}(p_c).  Here k are integer mode
coordinates and p the (possibly Floquet-shifted) frequency points.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .lattice import ModeSet
from .symexpr import expr as E
from .symexpr.fourier import FourierSymbol


class NonHermitianError(ValueError):
    pass


@dataclass
class TruncatedOperator:
    modes: ModeSet
    matrix: np.ndarray

    def __post_init__(self):
        n = len(self.modes)
        if self.matrix.shape != (n, n):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match {n} modes")

    def __len__(self):
        return len(self.modes)

    def __add__(self, other: "TruncatedOperator") -> "TruncatedOperator":
        _same_modes(self.modes, other.modes)
        return TruncatedOperator(self.modes, self.matrix + other.matrix)

    def __sub__(self, other: "TruncatedOperator") -> "TruncatedOperator":
        _same_modes(self.modes, other.modes)
        return TruncatedOperator(self.modes, self.matrix - other.matrix)

    def hermitian_defect(self, rows: np.ndarray | None = None) -> float:
        m = self.matrix
        if rows is not None:
            m = m[np.ix_(rows, rows)]
        return float(np.max(np.abs(m - m.conj().T), initial=0.0))

    def is_hermitian(self, tol: float = 1e-12, rows=None) -> bool:
        return self.hermitian_defect(rows) <= tol

    def interior(self, margin: float) -> np.ndarray:
        """Indices of modes at distance >= ``margin`` from the truncation boundary."""
        return interior_indices(self.modes, margin)

    def to_text(self) -> str:
        return dump_text(self)

    def save_npz(self, path) -> None:
        np.savez(path, coords=self.modes.coords, points=self.modes.points, matrix=self.matrix)

    @classmethod
    def load_npz(cls, path) -> "TruncatedOperator":
        with np.load(path) as f:
            return cls(ModeSet(f["coords"], f["points"]), f["matrix"])


def _same_modes(a: ModeSet, b: ModeSet):
    if len(a) != len(b) or not np.array_equal(a.coords, b.coords):
        raise ValueError("operators live on different mode sets")


def interior_indices(modes: ModeSet, margin: float) -> np.ndarray:
    """Modes whose lattice neighbours within ``margin`` all belong to the truncation.

    The truncation is a ball in lattice coordinates around the origin, so the
    test is |k| + margin <= R with R the largest mode norm.
    """
    norms = np.linalg.norm(modes.points + _shift_of(modes), axis=1)
    radius = norms.max(initial=0.0)
    return np.nonzero(norms + margin <= radius + 1e-9)[0]


def _shift_of(modes: ModeSet) -> np.ndarray:
    """kappa such that points = lattice vectors - kappa (zero when unshifted)."""
    if len(modes) == 0:
        return np.zeros(modes.coords.shape[1])
    # lattice vectors are linear in coords; recover the affine offset from the first mode
    idx = np.nonzero(np.all(modes.coords == 0, axis=1))[0]
    if len(idx):
        return -modes.points[idx[0]]
    return np.zeros(modes.dim)


class _Lookup:
    """Vectorized mode-coordinate -> index map."""

    def __init__(self, coords: np.ndarray):
        coords = np.asarray(coords, dtype=np.int64)
        self.lo = coords.min(axis=0) if len(coords) else np.zeros(coords.shape[1], np.int64)
        span = (coords.max(axis=0) - self.lo + 1) if len(coords) else np.ones(coords.shape[1], np.int64)
        self.span = span
        self.stride = np.cumprod(np.concatenate([[1], span[:-1]])).astype(np.int64)
        codes = (coords - self.lo) @ self.stride
        self.order = np.argsort(codes)
        self.codes = codes[self.order]

    def find(self, coords: np.ndarray) -> np.ndarray:
        """Index of each coordinate row, -1 if absent."""
        rel = coords - self.lo
        inside = np.all((rel >= 0) & (rel < self.span), axis=1)
        codes = np.where(inside, rel @ self.stride, -1)
        pos = np.searchsorted(self.codes, codes)
        pos = np.clip(pos, 0, len(self.codes) - 1)
        ok = inside & (self.codes[pos] == codes)
        return np.where(ok, self.order[pos], -1)


def _assemble(a: FourierSymbol, modes: ModeSet, midpoint: bool) -> np.ndarray:
    if a.dim != modes.dim:
        raise ValueError(f"symbol dimension {a.dim} does not match modes {modes.dim}")
    n = len(modes)
    out = np.zeros((n, n), dtype=complex)
    lookup = _Lookup(modes.coords)
    cols = np.arange(n)
    for key, coef in a.terms.items():
        rows = lookup.find(modes.coords + np.asarray(key, dtype=np.int64))
        ok = rows >= 0
        if not np.any(ok):
            continue
        r, c = rows[ok], cols[ok]
        pts = 0.5 * (modes.points[r] + modes.points[c]) if midpoint else modes.points[c]
        out[r, c] += E.evaluate(coef, pts)
    return out


def weyl_matrix(a: FourierSymbol, modes: ModeSet) -> TruncatedOperator:
    """Op^w(a) restricted to ``modes``."""
    return TruncatedOperator(modes, _assemble(a, modes, midpoint=True))


def classical_matrix(a: FourierSymbol, modes: ModeSet) -> TruncatedOperator:
    """Op^cl(a) restricted to ``modes``."""
    return TruncatedOperator(modes, _assemble(a, modes, midpoint=False))


def hamiltonian(v: FourierSymbol, M: float, modes: ModeSet) -> TruncatedOperator:
    """(-Delta)^{M/2} + Op^w(v): diagonal |p|^M plus the Weyl matrix of v."""
    H = weyl_matrix(v, modes)
    H.matrix[np.diag_indices(len(modes))] += np.linalg.norm(modes.points, axis=1) ** M
    return H


def hermitian_eigh(m: np.ndarray, driver: str = "evr") -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of the Hermitian part of ``m``; real arithmetic when ``m`` is real."""
    herm = 0.5 * (m + m.conj().T)
    if np.iscomplexobj(herm) and not np.any(herm.imag):
        herm = herm.real
    return scipy.linalg.eigh(herm, driver=driver)


def unitary(G: TruncatedOperator, tol: float = 1e-10) -> np.ndarray:
    """exp(i G) for Hermitian G, via its eigendecomposition."""
    defect = G.hermitian_defect()
    scale = max(1.0, float(np.max(np.abs(G.matrix), initial=0.0)))
    if defect > tol * scale:
        raise NonHermitianError(f"generator is not Hermitian (defect {defect:.3g})")
    # generator spectra pile up near zero, where divide-and-conquer is the faster driver
    w, V = hermitian_eigh(G.matrix, driver="evd")
    return (V * np.exp(1j * w)) @ V.conj().T


def unitarity_defect(U: np.ndarray) -> float:
    return float(np.max(np.abs(U.conj().T @ U - np.eye(len(U))), initial=0.0))


def exp_conjugate(H: TruncatedOperator, G: TruncatedOperator) -> TruncatedOperator:
    """exp(iG) H exp(-iG)."""
    _same_modes(H.modes, G.modes)
    U = unitary(G)
    if unitarity_defect(U) > 1e-10:
        raise ArithmeticError("exp(iG) failed the unitarity check")
    return TruncatedOperator(H.modes, U @ H.matrix @ U.conj().T)


def conjugation_unitary(generators: Sequence[FourierSymbol], modes: ModeSet) -> np.ndarray:
    """U_n = exp(iG_n) ... exp(iG_1) for G_j = Op^w(g_j)."""
    U = np.eye(len(modes), dtype=complex)
    for g in generators:
        if g.is_zero():
            continue
        U = unitary(weyl_matrix(g, modes)) @ U
    return U


def row_coupling(H: TruncatedOperator, rows: np.ndarray | None = None) -> np.ndarray:
    """sum_{r != c} |H[r, c]| for the chosen columns c."""
    m = np.abs(H.matrix)
    idx = np.arange(len(H)) if rows is None else np.asarray(rows)
    total = m[:, idx].sum(axis=0) - m[idx, idx]
    return total


def dump_text(H: TruncatedOperator) -> str:
    """Text dump: header, one line per mode (coords then point), then the
    row-major complex entries as ``re im`` pairs, one row per line."""
    buf = io.StringIO()
    n, d = len(H.modes), H.modes.dim
    buf.write(f"# modes {n} dim {d}\n")
    for c, p in zip(H.modes.coords, H.modes.points):
        buf.write(" ".join(str(int(v)) for v in c) + " " + " ".join(repr(float(v)) for v in p) + "\n")
    buf.write("# matrix row-major re im\n")
    for row in H.matrix:
        buf.write(" ".join(f"{float(z.real)!r} {float(z.imag)!r}" for z in row) + "\n")
    return buf.getvalue()


def load_text(text: str) -> TruncatedOperator:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    n, d = int(head[2]), int(head[4])
    coords = np.array([[int(v) for v in ln.split()[:d]] for ln in lines[1:1 + n]], dtype=int).reshape(n, d)
    points = np.array([[float(v) for v in ln.split()[d:]] for ln in lines[1:1 + n]]).reshape(n, d)
    vals = np.array([[float(v) for v in ln.split()] for ln in lines[2 + n:2 + 2 * n]]).reshape(n, n, 2)
    return TruncatedOperator(ModeSet(coords, points), vals[..., 0] + 1j * vals[..., 1])


__all__ = [
    "TruncatedOperator",
    "NonHermitianError",
    "weyl_matrix",
    "classical_matrix",
    "hamiltonian",
    "hermitian_eigh",
    "unitary",
    "unitarity_defect",
    "exp_conjugate",
    "conjugation_unitary",
    "interior_indices",
    "row_coupling",
    "dump_text",
    "load_text",
]
