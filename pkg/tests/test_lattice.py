import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from torusnf.lattice import (
    DualLattice,
    InvalidLatticeError,
    Lattice,
    counting_ratio,
    dual_basis,
    modes_in_ball,
    multi_indices,
    nonzero_vectors,
    random_basis,
)


def test_dual_of_2pi_identity_is_integer_lattice():
    dual = dual_basis(Lattice(2 * np.pi * np.eye(2)))
    np.testing.assert_allclose(dual.basis, np.eye(2), atol=1e-15)
    assert dual.min_gap_r == pytest.approx(0.5)


def test_dual_of_identity_scales_by_2pi():
    dual = dual_basis(Lattice(np.eye(2)))
    np.testing.assert_allclose(dual.basis, 2 * np.pi * np.eye(2))
    assert dual.min_gap_r == pytest.approx(math.pi)


def test_hexagonal_dual():
    lat = Lattice.from_rows([[1.0, 0.0], [0.5, math.sqrt(3) / 2]])
    dual = dual_basis(lat)
    b1 = 2 * np.pi * np.array([1.0, -1 / math.sqrt(3)])
    b2 = 2 * np.pi * np.array([0.0, 2 / math.sqrt(3)])
    np.testing.assert_allclose(dual.basis[:, 0], b1, atol=1e-12)
    np.testing.assert_allclose(dual.basis[:, 1], b2, atol=1e-12)


def test_singular_basis_rejected():
    with pytest.raises(InvalidLatticeError):
        Lattice(np.array([[1.0, 2.0], [2.0, 4.0]]))


@given(st.integers(0, 2**31 - 1), st.integers(1, 3))
def test_duality_pairing(seed, d):
    rng = np.random.default_rng(seed)
    lat = Lattice(random_basis(rng, d))
    dual = dual_basis(lat)
    np.testing.assert_allclose(dual.basis.T @ lat.basis, 2 * np.pi * np.eye(d), atol=1e-9)


@pytest.mark.parametrize("R,count", [(0.5, 1), (1.0, 5), (10.0, 317)])
def test_ball_counts(R, count):
    assert len(modes_in_ball(DualLattice.integer(2), R)) == count


def test_ball_count_matches_brute_force():
    brute = sum(1 for a in range(-10, 11) for b in range(-10, 11) if a * a + b * b <= 100)
    assert len(modes_in_ball(DualLattice.integer(2), 10.0)) == brute


@given(st.integers(0, 2**31 - 1), st.floats(0.5, 6.0))
def test_ball_sorted_and_complete(seed, R):
    rng = np.random.default_rng(seed)
    dual = dual_basis(Lattice(random_basis(rng, 2)))
    modes = modes_in_ball(dual, R)
    n = modes.norms
    assert np.all(np.diff(n) >= -1e-12)
    assert np.all(n <= R + 1e-9)
    np.testing.assert_allclose(modes.points, modes.coords @ dual.basis.T, atol=1e-9)
    # coordinates are unique
    assert len({tuple(c) for c in modes.coords}) == len(modes)


def test_counting_ratio_trivial_predicates():
    dual = DualLattice.integer(2)
    assert counting_ratio(dual, 5.0, lambda p: True) == 1.0
    assert counting_ratio(dual, 5.0, lambda p: False) == 0.0


def test_nonzero_vectors_strictness():
    dual = DualLattice.integer(2)
    assert len(nonzero_vectors(dual, 1.0, strict=True)) == 0
    assert len(nonzero_vectors(dual, 1.0, strict=False)) == 4


def test_index_map_round_trip():
    modes = modes_in_ball(DualLattice.integer(2), 4.0)
    for i in (0, 7, len(modes) - 1):
        assert modes.index_of(tuple(modes.coords[i])) == i


def test_shifted_modes():
    modes = modes_in_ball(DualLattice.integer(2), 3.0)
    sh = modes.shifted([0.3, 0.0])
    np.testing.assert_allclose(sh.points, modes.points - [0.3, 0.0])
    np.testing.assert_array_equal(sh.coords, modes.coords)


@pytest.mark.parametrize("d,order,count", [(1, 3, 1), (2, 2, 3), (3, 2, 6)])
def test_multi_indices(d, order, count):
    idx = multi_indices(d, order)
    assert len(idx) == count
    assert all(sum(a) == order for a in idx)
