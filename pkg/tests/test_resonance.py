import numpy as np
import pytest

from torusnf import resonance as Rz
from torusnf.cutoffs import NFParams
from torusnf.lattice import DualLattice

Z2 = DualLattice.integer(2)
STD = NFParams(M=2, frak_e=2, delta=0.75, tau=2, epsilon=0.25, gamma=0.4, d=2)


def test_zero_divisor_is_resonant():
    assert not Rz.is_nonresonant([7.0, 0.0], STD, Z2)


def test_origin_is_vacuous():
    assert Rz.is_vacuous([0.0, 0.0], STD, Z2) and Rz.is_nonresonant([0.0, 0.0], STD, Z2)


def test_hand_enumeration_13_7():
    xi = np.array([13.0, 7.0])
    jap = np.sqrt(1 + xi @ xi)
    kr = jap**0.25
    ks = [np.array(k) for k in [(1, 0), (0, 1), (1, 1), (1, -1)] if np.hypot(*k) < kr]
    by_hand = all(abs(xi @ k) > 2 * 0.4 * jap**0.75 / np.linalg.norm(k) ** 2 for k in ks)
    assert Rz.is_nonresonant(xi, STD, Z2) == by_hand


def test_census_deterministic_and_trending():
    rows = Rz.census(STD, Z2, [50, 100], seed=3)
    assert Rz.census_csv(rows) == Rz.census_csv(Rz.census(STD, Z2, [50, 100], seed=3))
    assert rows[1].fraction >= rows[0].fraction - 0.05
    assert rows[0].total == sum(1 for a in range(-50, 51) for b in range(-50, 51) if a * a + b * b <= 2500)


def test_degenerate_gamma_flagged():
    bad = NFParams(M=2, frak_e=2, delta=0.75, tau=2, epsilon=0.25, gamma=0.6, d=2)
    assert bad.problems(Z2)
    rows = Rz.census(bad, Z2, [30])
    assert rows[0].fraction < 0.5


def test_mc_layer_matches_strip_area():
    k = np.array([1.0, 0.0])
    R = 100.0
    est = Rz.layer_measure_mc(k, R, STD, samples=100_000, seed=0)
    exact = Rz.strip_fraction(Rz.layer_half_width(k, R, STD), R, 2)
    assert abs(est.value - exact) <= 3 * est.stderr


def test_layer_fraction_shrinks():
    k = [1.0, 2.0]
    a = Rz.layer_measure_mc(k, 100.0, STD, seed=1).value
    b = Rz.layer_measure_mc(k, 10_000.0, STD, seed=1).value
    assert b < a


def test_mc_needs_enough_samples():
    with pytest.raises(ValueError):
        Rz.layer_measure_mc([1.0, 0.0], 10.0, STD, samples=100)


def test_layer_union_bounded_by_sum():
    total, union = Rz.layer_union_mc(200.0, STD, Z2, samples=20_000)
    assert union <= total + 1e-12


def test_inclusion_trivial_without_shift():
    res = Rz.inclusion_check([1.0, 1.0], 200.0, STD, Z2, samples=10_000, r=0.0)
    assert res.violations == 0


def test_inclusion_standard_params():
    res = Rz.inclusion_check([2.0, 1.0], 200.0, STD, Z2, samples=100_000)
    assert res.violations == 0
    assert Rz.inclusion_margin([2.0, 1.0], 200.0, STD, Z2.min_gap_r) > 0
