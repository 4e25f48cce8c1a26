"""Lattices, dual lattices and mode enumeration.

A lattice is stored by the matrix whose *columns* are its generators.  Dual
vectors are addressed by their integer coordinates in the dual basis, which
keeps Fourier supports and their sums exact.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

TWO_PI = 2.0 * np.pi
DET_TOL = 1e-12
_NORM_DIGITS = 12


class InvalidLatticeError(ValueError):
    pass


@dataclass(frozen=True)
class Lattice:
    basis: np.ndarray

    def __post_init__(self):
        b = np.array(self.basis, dtype=float)
        if b.ndim != 2 or b.shape[0] != b.shape[1] or b.shape[0] == 0:
            raise InvalidLatticeError(f"basis must be a square matrix, got shape {b.shape}")
        scale = max(1.0, float(np.max(np.abs(b))))
        if abs(np.linalg.det(b)) <= DET_TOL * scale ** b.shape[0]:
            raise InvalidLatticeError("lattice basis is singular")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @classmethod
    def from_rows(cls, rows) -> "Lattice":
        """Build from generators listed one per row (config-file layout)."""
        return cls(np.array(rows, dtype=float).T)


@dataclass(frozen=True)
class DualLattice:
    basis: np.ndarray
    min_gap_r: float = field(default=0.0)

    def __post_init__(self):
        b = np.array(self.basis, dtype=float)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise InvalidLatticeError(f"dual basis must be square, got shape {b.shape}")
        if abs(np.linalg.det(b)) <= DET_TOL:
            raise InvalidLatticeError("dual basis is singular")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)
        if not self.min_gap_r:
            object.__setattr__(self, "min_gap_r", 0.5 * _shortest_vector_length(b))
        if self.min_gap_r <= 0:
            raise InvalidLatticeError("min_gap_r must be positive")

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def vector(self, coords) -> np.ndarray:
        """Real vector(s) of the dual points with the given integer coordinates."""
        c = np.asarray(coords, dtype=float)
        return c @ self.basis.T

    def coords_of(self, vec) -> tuple[int, ...]:
        """Integer coordinates of a dual vector; raises if ``vec`` is off-lattice."""
        v = np.asarray(vec, dtype=float)
        c = np.linalg.solve(self.basis, v)
        ci = np.rint(c)
        if np.max(np.abs(c - ci), initial=0.0) > 1e-8:
            raise ValueError(f"{vec} is not a point of the dual lattice")
        return tuple(int(x) for x in ci)

    @classmethod
    def integer(cls, d: int) -> "DualLattice":
        """The dual lattice Z^d (lattice generated by 2*pi times the identity)."""
        return cls(np.eye(d))


def dual_basis(lat: Lattice) -> DualLattice:
    """Dual lattice: generators b_i with b_i . e_j = 2*pi*delta_ij."""
    # columns of 2*pi*(B^T)^{-1} are the b_i
    dual = TWO_PI * np.linalg.solve(lat.basis.T, np.eye(lat.dim))
    return DualLattice(dual)


def _coordinate_box(basis: np.ndarray, radius: float) -> np.ndarray:
    """Integer coordinate vectors covering every lattice point with norm <= radius."""
    inv = np.linalg.inv(basis)
    bounds = np.floor(radius * np.linalg.norm(inv, axis=1) + 1e-9).astype(int)
    axes = [np.arange(-n, n + 1) for n in bounds]
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=1)


def _shortest_vector_length(basis: np.ndarray) -> float:
    bound = float(np.min(np.linalg.norm(basis, axis=0)))
    coords = _coordinate_box(basis, bound)
    coords = coords[np.any(coords != 0, axis=1)]
    norms = np.linalg.norm(coords @ basis.T, axis=1)
    return float(np.min(norms))


@dataclass(frozen=True)
class ModeSet:
    """Ordered lattice points: integer coordinates and the matching real vectors.

    ``points`` may be shifted away from the lattice (Floquet case); differences
    between points are always lattice vectors given by ``coords``.
    """

    coords: np.ndarray
    points: np.ndarray

    def __len__(self) -> int:
        return len(self.coords)

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.points, axis=1)

    def index_map(self) -> dict[tuple[int, ...], int]:
        return {tuple(int(v) for v in c): i for i, c in enumerate(self.coords)}

    def index_of(self, coords) -> int:
        key = tuple(int(v) for v in np.atleast_1d(coords))
        try:
            return self.index_map()[key]
        except KeyError:
            raise KeyError(f"mode {key} not in the truncation") from None

    def shifted(self, kappa) -> "ModeSet":
        return ModeSet(self.coords, self.points - np.asarray(kappa, dtype=float))


def _sort_modes(coords: np.ndarray, points: np.ndarray) -> np.ndarray:
    norms = np.round(np.linalg.norm(points, axis=1), _NORM_DIGITS)
    keys = [np.round(points[:, i], _NORM_DIGITS) for i in reversed(range(points.shape[1]))]
    return np.lexsort(keys + [norms])


def modes_in_ball(dual: DualLattice, R: float) -> ModeSet:
    """All dual points with |xi| <= R, sorted by (norm, lexicographic components)."""
    if R < 0:
        raise ValueError("radius must be non-negative")
    coords = _coordinate_box(dual.basis, R)
    points = dual.vector(coords)
    keep = np.linalg.norm(points, axis=1) <= R * (1 + 1e-12) + 1e-12
    coords, points = coords[keep], points[keep]
    order = _sort_modes(coords, points)
    return ModeSet(coords[order].astype(int), points[order])


def counting_ratio(dual: DualLattice, R: float, predicate: Callable[[np.ndarray], bool]) -> float:
    """Fraction of dual points in the closed ball of radius R satisfying ``predicate``."""
    if R <= 0:
        raise ValueError("radius must be positive")
    modes = modes_in_ball(dual, R)
    if len(modes) == 0:
        raise ValueError("empty ball")
    hits = sum(1 for p in modes.points if predicate(p))
    return hits / len(modes)


def nonzero_vectors(dual: DualLattice, R: float, strict: bool = True) -> ModeSet:
    """Nonzero dual vectors with |k| < R (or <= R when ``strict`` is False)."""
    modes = modes_in_ball(dual, R)
    n = modes.norms
    keep = n > 0
    keep &= (n < R) if strict else np.ones_like(keep)
    return ModeSet(modes.coords[keep], modes.points[keep])


def multi_indices(d: int, order: int) -> list[tuple[int, ...]]:
    """All multi-indices in N^d with total degree ``order``."""
    out = []
    for combo in itertools.combinations_with_replacement(range(d), order):
        alpha = [0] * d
        for i in combo:
            alpha[i] += 1
        out.append(tuple(alpha))
    return out


def random_basis(rng: np.random.Generator, d: int, cond_max: float = 50.0) -> np.ndarray:
    while True:
        b = rng.normal(size=(d, d))
        if np.linalg.cond(b) < cond_max:
            return b


__all__: Sequence[str] = [
    "Lattice",
    "DualLattice",
    "ModeSet",
    "InvalidLatticeError",
    "dual_basis",
    "modes_in_ball",
    "counting_ratio",
    "nonzero_vectors",
    "multi_indices",
]
