import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from torusnf import calculus as C
from torusnf.checks import random_real_symbol
from torusnf.lattice import DualLattice
from torusnf.symexpr import FourierSymbol, evaluate
from torusnf.symexpr import expr as E

Z2 = DualLattice.integer(2)


def quadratic():
    return FourierSymbol.multiplier(Z2, E.norm_pow(2.0), 2.0)


def wave(k, coef=None):
    return FourierSymbol(Z2, {tuple(k): coef or E.ONE}, 0.0)


def _samples(seed, n=30, scale=4.0):
    rng = np.random.default_rng(seed)
    return rng.uniform(0, 2 * np.pi, size=(n, 2)), rng.normal(size=(n, 2)) * scale


def test_poisson_of_quadratic_and_wave():
    br = C.poisson(quadratic(), wave((1, 2)))
    assert list(br.terms) == [(1, 2)]
    xi = np.array([[0.3, -1.2], [2.0, 5.0]])
    np.testing.assert_allclose(evaluate(br.coefficient((1, 2)), xi), -2j * (xi @ [1, 2]))


@given(st.integers(0, 2**31 - 1))
def test_poisson_antisymmetric(seed):
    rng = np.random.default_rng(seed)
    a, b = random_real_symbol(rng, Z2), random_real_symbol(rng, Z2, order=0.5)
    x, xi = _samples(seed)
    np.testing.assert_allclose(C.poisson(a, b).evaluate(x, xi), -C.poisson(b, a).evaluate(x, xi), atol=1e-10)


@given(st.integers(0, 2**31 - 1))
def test_sigma0_is_product(seed):
    rng = np.random.default_rng(seed)
    a, b = random_real_symbol(rng, Z2), random_real_symbol(rng, Z2)
    x, xi = _samples(seed)
    np.testing.assert_allclose(C.sigma_j(a, b, 0).evaluate(x, xi), a.evaluate(x, xi) * b.evaluate(x, xi),
                               rtol=1e-12, atol=1e-12)


@given(st.integers(0, 2**31 - 1), st.integers(0, 4))
def test_sigma_symmetry(seed, j):
    rng = np.random.default_rng(seed)
    a, b = random_real_symbol(rng, Z2), random_real_symbol(rng, Z2, order=0.5)
    x, xi = _samples(seed)
    np.testing.assert_allclose(C.sigma_j(a, b, j).evaluate(x, xi),
                               (-1) ** j * C.sigma_j(b, a, j).evaluate(x, xi), atol=1e-10)


def test_sigma3_of_quadratic_vanishes():
    assert C.sigma_j(quadratic(), wave((1, 0), E.jap(0.5)), 3).is_zero()


def test_moyal_j1_is_poisson():
    rng = np.random.default_rng(3)
    a, b = random_real_symbol(rng, Z2), random_real_symbol(rng, Z2)
    x, xi = _samples(3)
    np.testing.assert_allclose(C.moyal_truncated(a, b, 1).evaluate(x, xi), C.poisson(a, b).evaluate(x, xi),
                               atol=1e-12)


def test_moyal_of_quadratic_is_exactly_poisson():
    b = wave((1, -1), E.mul(E.xi(0), E.jap(-0.5)))
    x, xi = _samples(4)
    np.testing.assert_allclose(C.moyal_truncated(quadratic(), b, 5).evaluate(x, xi),
                               C.poisson(quadratic(), b).evaluate(x, xi), atol=1e-12)


def test_expansion_converges_to_exact_composition():
    rng = np.random.default_rng(5)
    a = FourierSymbol(Z2, {(1, 0): E.jap(0.5), (0, -1): E.mul(E.xi(1), E.jap(-1.0))}, 0.5)
    b = FourierSymbol(Z2, {(1, 1): E.jap(-0.5), (-1, 0): E.const(0.3)}, 0.0)
    x = rng.uniform(0, 2 * np.pi, size=(10, 2))
    xi = rng.normal(size=(10, 2)) * 3 + 30
    exact = C.composition_exact(a, b, x, xi)
    series = sum(C.sigma_j(a, b, j).evaluate(x, xi) for j in range(10))
    np.testing.assert_allclose(series, exact, rtol=1e-9)


def test_moyal_terms_respect_floor():
    rng = np.random.default_rng(6)
    a, b = random_real_symbol(rng, Z2), random_real_symbol(rng, Z2)
    dropped = []
    pieces = C.moyal_terms(a, b, 5, floor=C.sigma_order(a, b, 3) + 0.1, dropped=dropped)
    assert [t.label for t in pieces] == ["moyal[j=1]"]
    assert {d.label for d in dropped} == {"moyal[j=3]", "moyal[j=5]"}


def test_symmetric_and_skew_give_symmetric_moyal_terms():
    a = FourierSymbol(Z2, {(1, 0): E.jap(0.5), (-1, 0): E.jap(0.5)}, 0.5)
    b = FourierSymbol(Z2, {(0, 1): E.mul(E.const(1j), E.xi(0), E.jap(-1.0)),
                           (0, -1): E.mul(E.const(-1j), E.xi(0), E.jap(-1.0))}, 0.0)
    x, xi = _samples(8)
    for t in C.moyal_terms(a, b, 5):
        np.testing.assert_allclose(t.sym.evaluate(x, xi), t.sym.evaluate(x, -xi), atol=1e-12)


def test_lie_series_with_zero_generator_is_identity():
    rng = np.random.default_rng(9)
    a = random_real_symbol(rng, Z2)
    out = C.lie_series(a, FourierSymbol.zero(Z2), J=3)
    x, xi = _samples(9)
    np.testing.assert_allclose(out.evaluate(x, xi), a.evaluate(x, xi))


def test_lie_series_first_order():
    a = FourierSymbol(Z2, {(1, 0): E.jap(1.0), (-1, 0): E.jap(1.0)}, 1.0, 0.75)
    g = FourierSymbol(Z2, {(0, 1): E.mul(E.const(0.1j), E.jap(-1.0)),
                           (0, -1): E.mul(E.const(-0.1j), E.jap(-1.0))}, -1.0, 0.75)
    dropped = []
    out = C.lie_series(a, g, J=1, j_max=1, dropped=dropped)
    x, xi = _samples(10)
    expected = a.evaluate(x, xi) + C.poisson(a, g).evaluate(x, xi)
    np.testing.assert_allclose(out.evaluate(x, xi), expected, atol=1e-12)


def test_lie_series_preserves_evenness():
    a = FourierSymbol(Z2, {(1, 0): E.jap(1.0), (-1, 0): E.jap(1.0)}, 1.0, 0.75)
    g = FourierSymbol(Z2, {(0, 1): E.mul(E.const(0.1j), E.xi(1), E.jap(-2.0)),
                           (0, -1): E.mul(E.const(-0.1j), E.xi(1), E.jap(-2.0))}, -1.0, 0.75)
    out = C.lie_series(a, g, J=5, j_max=3)
    x, xi = _samples(11)
    np.testing.assert_allclose(out.evaluate(x, xi), out.evaluate(x, -xi), atol=1e-12)


def test_weyl_to_classical_fixed_points():
    m = FourierSymbol.multiplier(Z2, E.jap(1.0), 1.0)
    v = FourierSymbol(Z2, {(1, 0): E.ONE, (-1, 0): E.ONE}, 0.0)
    x, xi = _samples(12)
    for a in (m, v):
        np.testing.assert_allclose(C.weyl_to_classical(a, 4).evaluate(x, xi), a.evaluate(x, xi))
