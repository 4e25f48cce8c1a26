import math

import numpy as np
import pytest

from torusnf import normalform as N
from torusnf import quantize as Q
from torusnf import spectra as S
from torusnf.cutoffs import NFParams
from torusnf.lattice import DualLattice, modes_in_ball
from torusnf.symexpr import FourierSymbol, cosine_potential
from torusnf.symexpr import expr as E

Z1 = DualLattice.integer(1)
P1 = NFParams(M=2.0, frak_e=2.0, delta=0.75, tau=0.5, epsilon=0.5, gamma=0.4, d=1, n_target=2)


@pytest.fixture(scope="module")
def mathieu64():
    pert = N.Perturbation(cosine_potential(Z1, [(1,)]))
    st = N.run(pert, P1)
    modes = modes_in_ball(Z1, 64)
    H = S.operator_for(pert, 2.0, modes)
    return st, pert, H, S.eigensolve(H)


def _continued_fraction_even(n_terms=200):
    """Low even-parity eigenvalues of -u'' + 2 cos x u via the tridiagonal cosine-basis matrix."""
    # cosine basis cos(m x), m = 0..n: entries m^2 on the diagonal, couplings 1 (sqrt 2 to m = 0)
    T = np.diag(np.arange(n_terms, dtype=float) ** 2)
    off = np.ones(n_terms - 1)
    off[0] = math.sqrt(2)
    T += np.diag(off, 1) + np.diag(off, -1)
    return np.linalg.eigvalsh(T)


def test_low_spectrum_matches_recursion_oracle(mathieu64):
    *_, eig = mathieu64
    even = _continued_fraction_even()[:5]
    assert np.min(np.abs(eig.values[:12, None] - even[None, :]), axis=0).max() < 1e-6


def test_scipy_mathieu_oracle(mathieu64):
    *_, eig = mathieu64
    np.testing.assert_allclose(eig.values[:11], S.mathieu_oracle(5), atol=1e-9)


def test_eigensolve_rejects_non_hermitian():
    modes = modes_in_ball(Z1, 3)
    H = Q.TruncatedOperator(modes, np.triu(np.ones((7, 7))).astype(complex))
    with pytest.raises(ValueError):
        S.eigensolve(H)


@pytest.mark.parametrize("c", [0.0, 0.4])
def test_free_and_constant_cases(c):
    dual = DualLattice.integer(2)
    p = NFParams(M=2, frak_e=2, delta=0.75, tau=2, epsilon=0.25, gamma=0.4, d=2, n_target=1)
    pert = N.Perturbation(FourierSymbol(dual, {(0, 0): E.const(c)} if c else {}, 0.0))
    st = N.run(pert, p)
    modes = modes_in_ball(dual, 6)
    H = S.operator_for(pert, 2.0, modes)
    idx = np.nonzero(modes.norms >= 1)[0]
    out = S.match_many(st, H, idx)
    for m, i in zip(out, idx):
        assert m.overlap == pytest.approx(1.0) and m.residual == 0.0
        assert m.lambda_matched == pytest.approx(modes.norms[i] ** 2 + c, rel=1e-14)
    if c == 0.0:
        for m in out:
            assert m.lambda_matched == m.lambda_pred


def test_matching_is_injective(mathieu64):
    st, _, H, eig = mathieu64
    idx = [H.modes.index_of((s * x,)) for x in range(10, 30) for s in (1, -1)]
    out = S.match_many(st, H, idx, eig)
    assert len({m.eig_index for m in out}) == len(out)
    assert [m.xi for m in out] == [tuple(H.modes.points[i]) for i in idx]


def test_eigenvalue_near_prediction(mathieu64):
    st, _, H, eig = mathieu64
    m = S.match_by_overlap(st, H, [32.0], eig)
    assert abs(m.lambda_pred - m.lambda_matched) < 10 * 32.0**-2
    assert not m.ambiguous and m.nonresonant


def test_residuals_agree_with_conjugated_form(mathieu64):
    st, _, H, _ = mathieu64
    idx = [H.modes.index_of((x,)) for x in (16, 20, 24)]
    qm = S.quasimodes(st, H.modes, idx)
    lam = N.lambda_n(st, H.modes.points[idx])
    np.testing.assert_allclose(S.quasimode_residuals(H, qm, lam), S.conjugated_residuals(H, qm, lam), atol=1e-10)


def test_splitting_zero_without_potential():
    p = P1
    pert = N.Perturbation(FourierSymbol(Z1, {(0,): E.const(0.2)}, 0.0))
    st = N.run(pert, p)
    H = S.operator_for(pert, 2.0, modes_in_ball(Z1, 20))
    for _, diff, *_ in S.splitting_scan(st, pert, H, [5.0, 9.0]):
        assert diff == 0.0


def test_splitting_needs_symmetry():
    odd = N.Perturbation(FourierSymbol(Z1, {(1,): E.xi(0), (-1,): E.xi(0)}, 1.0))
    st = N.initial_state(odd, NFParams(M=2, frak_e=1.0, delta=0.9, tau=0.5, epsilon=0.5, gamma=0.4, d=1))
    H = S.operator_for(odd, 2.0, modes_in_ball(Z1, 10))
    with pytest.raises(N.PreconditionError):
        S.splitting_scan(st, odd, H, [5.0])


def test_floquet_zero_shift_is_identity():
    pert = N.Perturbation(cosine_potential(Z1, [(1,)]))
    assert S.floquet_shift(pert, [0.0]) is pert


def test_floquet_free_spectrum():
    dual = DualLattice.integer(2)
    pert = N.Perturbation(FourierSymbol.zero(dual, 0.0), kappa=[0.3, 0.0])
    modes = modes_in_ball(dual, 6)
    H = S.operator_for(pert, 2.0, modes)
    np.testing.assert_allclose(np.sort(S.eigensolve(H).values),
                               np.sort(np.linalg.norm(modes.points - [0.3, 0.0], axis=1) ** 2), rtol=1e-13)
    np.testing.assert_array_equal(S.shifted_operator_direct(pert, 2.0, modes).matrix, H.matrix)


def test_fit_censoring():
    x = [1.0, 2.0, 4.0]
    assert S.fit_loglog(x, [1e-20] * 3, floor=1e-15).slope == -math.inf
    fit = S.fit_loglog(x, [1.0, 0.25, 0.0625])
    assert fit.slope == pytest.approx(-2.0) and not fit.below_resolution
    raw = S.fit_loglog(x, [1.0, 0.25, 1e-30])
    raised = S.fit_loglog(x, [1.0, 0.25, 1e-30], floor=1e-3)
    assert raised.censored == 1 and raised.slope > raw.slope
