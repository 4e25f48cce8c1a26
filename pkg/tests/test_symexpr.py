import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from torusnf.lattice import DualLattice
from torusnf.symexpr import (
    FourierSymbol,
    ParseError,
    cosine_potential,
    differentiate,
    evaluate,
    parse,
    to_string,
)
from torusnf.symexpr import expr as E
from torusnf.symexpr.smoothstep import bump, bump_derivative


def test_parse_constant():
    e = parse("2", 1)
    assert evaluate(e, [[3.0]]) == pytest.approx(2.0)


def test_parse_product():
    e = parse("xi_1 * jap(-0.5)", 2)
    assert e is E.mul(E.xi(0), E.jap(-0.5))


def test_jap_at_origin():
    assert evaluate(parse("jap(0.5)", 2), [[0.0, 0.0]]) == pytest.approx(1.0)


def test_atoms():
    assert evaluate(E.norm(), [[3.0, 4.0]]) == pytest.approx(5.0)
    assert evaluate(E.jap(2.0), [[1.0, 1.0]]) == 3.0
    assert evaluate(E.psi(E.norm(), 0.4), [[1.0, 0.0]]) == 1.0


def test_derivative_examples():
    sq = E.norm_pow(2.0)
    assert differentiate(sq, 0) is E.mul(E.const(2.0), E.xi(0))
    pts = np.random.default_rng(0).normal(size=(10, 3))
    s = 0.7
    got = evaluate(differentiate(E.jap(s), 1), pts)
    jap = np.sqrt(1 + np.sum(pts**2, axis=1))
    np.testing.assert_allclose(got, s * pts[:, 1] * jap ** (s - 2), rtol=1e-13)


@pytest.mark.parametrize("text,pos", [("xi_1 +", 6), ("foo(2)", 0), ("xi_3", 0), ("(1 + 2", 6)])
def test_parse_errors_carry_position(text, pos):
    with pytest.raises(ParseError) as info:
        parse(text, 2)
    assert info.value.position == pos


def test_inf_only_in_mask_bounds():
    parse("mask(xi_1, xi_2, 0.4, inf)", 2)
    with pytest.raises(ParseError):
        parse("inf + 1", 2)


# random expression trees ---------------------------------------------------

_leaf = st.one_of(
    st.floats(-3, 3, allow_nan=False).map(lambda c: E.const(round(c, 3))),
    st.integers(0, 1).map(E.xi),
    st.sampled_from([-1.5, -0.5, 0.5, 1.0]).map(E.jap),
    st.just(E.norm()),
)


def _extend(children):
    return st.one_of(
        st.tuples(children, children).map(lambda t: E.add(*t)),
        st.tuples(children, children).map(lambda t: E.mul(*t)),
        children.map(E.neg),
        st.tuples(children, st.sampled_from([0.3, 0.4])).map(
            lambda t: E.bump(E.mul(E.const(0.1), t[0]), t[1])),
        children.map(lambda c: E.mul(c, E.jap(-1.0))),
    )


exprs = st.recursive(_leaf, _extend, max_leaves=8)


@given(exprs)
def test_print_parse_round_trip(e):
    assert parse(to_string(e), 2) is e


@given(exprs, st.integers(0, 2**31 - 1))
def test_derivative_matches_finite_differences(e, seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(1.0, 6.0, size=(20, 2)) * rng.choice([-1, 1], size=(20, 2))
    h = 1e-5
    for i in range(2):
        step = np.zeros(2)
        step[i] = h
        fd = (evaluate(e, pts + step) - evaluate(e, pts - step)) / (2 * h)
        exact = evaluate(differentiate(e, i), pts)
        val = np.abs(evaluate(e, pts))
        assert np.all(np.abs(exact - fd) <= 1e-6 * (1 + val) * (1 + np.abs(exact)))


@given(exprs)
def test_interning_makes_equal_trees_identical(e):
    again = parse(to_string(e), 2)
    assert again is e and hash(again) == hash(e)


# bump ---------------------------------------------------------------------


def test_bump_plateau_and_support():
    assert bump(0.0, 0.4) == 1.0
    assert bump(1.0, 0.4) == 0.0
    assert 0.0 < bump(0.6, 0.4) < 1.0


def test_bump_monotone_on_transition():
    t = np.linspace(0.4, 0.8, 100)
    assert np.all(np.diff(bump(t, 0.4)) <= 0)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_bump_derivatives_match_finite_differences(order):
    t = np.linspace(0.42, 0.78, 37)
    h = 1e-5
    fd = (bump_derivative(t + h, 0.4, order - 1) - bump_derivative(t - h, 0.4, order - 1)) / (2 * h)
    np.testing.assert_allclose(bump_derivative(t, 0.4, order), fd, atol=1e-4 * 10**order)


def test_masked_zero_outside_band():
    e = E.masked(E.power(E.xi(0), -1.0), E.xi(0), 0.5)
    vals = evaluate(e, [[0.0], [0.2], [1.0]])
    np.testing.assert_array_equal(vals[:2], [0.0, 0.0])
    assert vals[2] == 1.0


# Fourier symbols ------------------------------------------------------------


def test_cosine_coefficients():
    dual = DualLattice.integer(2)
    v = cosine_potential(dual, [(1, 0)])
    assert v.coefficient((1, 0)) is E.ONE and v.coefficient((-1, 0)) is E.ONE
    assert v.coefficient((0, 1)).is_zero


def test_multiplier_has_only_zero_mode():
    dual = DualLattice.integer(2)
    m = FourierSymbol.multiplier(dual, E.jap(1.0), 1.0)
    assert m.coefficient((1, 0)).is_zero


def test_cos_times_jap_coefficient():
    dual = DualLattice.integer(2)
    v = FourierSymbol.from_strings(dual, {(1, 0): "0.5*jap(0.5)", (-1, 0): "0.5*jap(0.5)"}, 0.5)
    x = np.array([[0.3, 1.1]])
    xi = np.array([[2.0, -1.0]])
    expected = math.cos(0.3) * math.sqrt(1 + 5.0) ** 0.5
    assert v.evaluate(x, xi)[0] == pytest.approx(expected)
    assert v.is_real(xi) and v.is_even(np.array([[2.0, 1.0], [3.0, 4.0]]))


def test_shifted_symbol_substitutes():
    dual = DualLattice.integer(2)
    v = FourierSymbol.from_strings(dual, {(0, 0): "xi_1 * xi_1"}, 2.0)
    s = v.shifted([0.5, 0.0])
    assert evaluate(s.coefficient((0, 0)), [[2.0, 0.0]]) == pytest.approx(2.25)
