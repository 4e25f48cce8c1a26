import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from torusnf.cutoffs import InvalidParamsError, NFParams, evaluate_cutoffs, split_symbol
from torusnf.lattice import DualLattice
from torusnf.resonance import nonresonant_mask
from torusnf.symexpr import FourierSymbol, cosine_potential, evaluate
from torusnf.symexpr import expr as E

STD = dict(M=2.0, frak_e=2.0, delta=0.75, tau=2.0, epsilon=0.25, gamma=0.4, d=2)


def std(**kw):
    return NFParams(**{**STD, **kw})


def test_standard_params_valid():
    p = std().validate(DualLattice.integer(2))
    assert p.rho == pytest.approx(1.0)


@pytest.mark.parametrize("bad", [
    dict(delta=1.0), dict(delta=-0.1), dict(frak_e=0.5), dict(gamma=0.6),
    dict(epsilon=0.5), dict(tau=0.5), dict(gamma=0.0),
])
def test_invalid_params(bad):
    with pytest.raises(InvalidParamsError):
        std(**bad).validate(DualLattice.integer(2))


def test_gamma_must_stay_below_min_gap():
    dual = DualLattice.integer(2)
    assert not std(gamma=0.45).problems(dual)
    assert std(gamma=0.49).problems(DualLattice(np.eye(2) * 0.5))


def test_cutoffs_at_zero_divisor():
    p = std()
    chi, d, _ = evaluate_cutoffs([0, 1], [5.0, 0.0], p)
    assert chi == 1.0 and d == 0.0


def test_cutoffs_far_from_resonance():
    p = std()
    xi = np.array([30.0, 0.0])
    chi, d, _ = evaluate_cutoffs([1, 0], xi, p)
    assert chi == 0.0 and d == pytest.approx(1 / 30.0)


def test_d_k_derivative_decay_along_ray():
    p = std()
    k = np.array([1.0, 0.0])
    r = np.geomspace(20, 400, 12)
    pts = np.stack([r, 0.3 * r], axis=1)
    h = 1e-4
    _, dp, _ = evaluate_cutoffs(k, pts + [h, 0], p)
    _, dm, _ = evaluate_cutoffs(k, pts - [h, 0], p)
    grad = np.abs(dp - dm) / (2 * h)
    jap = np.sqrt(1 + np.sum(pts**2, axis=1))
    scaled = grad * jap ** (2 * p.delta)
    assert scaled.max() / scaled.min() < 50


def _random_symbol(rng, dual):
    terms = {(0, 0): E.jap(float(rng.uniform(-1, 1)))}
    for _ in range(3):
        k = tuple(int(v) for v in rng.integers(-3, 4, size=2))
        terms[k] = E.add(terms.get(k, E.ZERO), E.mul(E.const(float(rng.normal())), E.jap(0.5)))
    return FourierSymbol(dual, terms, 1.0)


@given(st.integers(0, 2**31 - 1))
def test_split_reassembles(seed):
    rng = np.random.default_rng(seed)
    dual = DualLattice.integer(2)
    p = std()
    a = _random_symbol(rng, dual)
    parts = split_symbol(a, p)
    xi = rng.normal(size=(15, 2)) * 20
    x = rng.uniform(0, 2 * np.pi, size=(15, 2))
    mean = evaluate(parts.mean, xi)
    total = mean + parts.nr.evaluate(x, xi) + parts.res.evaluate(x, xi) + parts.tail.evaluate(x, xi)
    np.testing.assert_allclose(total, a.evaluate(x, xi), atol=1e-12)


def test_multiplier_split_is_mean_only():
    dual = DualLattice.integer(2)
    m = FourierSymbol.multiplier(dual, E.jap(0.5), 0.5)
    parts = split_symbol(m, std())
    assert parts.nr.is_zero() and parts.res.is_zero() and parts.tail.is_zero()


def test_potential_mean():
    dual = DualLattice.integer(2)
    v = FourierSymbol(dual, {(0, 0): E.const(0.25), (1, 0): E.ONE, (-1, 0): E.ONE}, 0.0)
    assert split_symbol(v, std()).mean is E.const(0.25)


def test_resonant_part_vanishes_on_nonresonant_points():
    dual = DualLattice.integer(2)
    p = std()
    v = cosine_potential(dual, [(1, 0), (0, 1), (1, 1)])
    res = split_symbol(v, p).res
    pts = np.array([[a, b] for a in range(-40, 41, 3) for b in range(-40, 41, 7)], dtype=float)
    ok, _ = nonresonant_mask(pts, p, dual)
    for coef in res.terms.values():
        assert np.all(evaluate(coef, pts[ok]) == 0.0)
