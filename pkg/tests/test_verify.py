import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from swiptrelay.channel import SnrCoefficients, SystemParams, db_to_linear
from swiptrelay.corrmat import exp_correlation
from swiptrelay.mc import StreamSpec
from swiptrelay.verify import (Curvature, MajorizationPair, SchurClaim, Verdict,
                               curvature_exact, curvature_probe, diversity_slope,
                               expected_curvature_sign, cofactor_residual, cofactor_terms,
                               loglog_slope, majorizes, random_majorization_pair,
                               schur_ordering_check)

P = SystemParams()


# -- majorization --------------------------------------------------------------------------------

def test_majorizes_examples():
    assert majorizes([3, 0, 0], [1, 1, 1])
    assert not majorizes([1, 1, 1], [3, 0, 0])
    assert majorizes([2, 1, 0], [0, 2, 1])  # order does not matter
    assert not majorizes([2, 1], [2, 2])  # different totals
    with pytest.raises(ValueError):
        majorizes([1, 2], [1, 2, 0])


@given(st.lists(st.floats(0, 10), min_size=1, max_size=6))
@settings(max_examples=100, deadline=None)
def test_majorization_reflexive_and_uniform_bottom(v):
    assert majorizes(v, v)
    mean = sum(v) / len(v)
    assert majorizes(v, [mean] * len(v), tol=1e-9)


@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 6), st.booleans())
@settings(max_examples=60, deadline=None)
def test_random_pairs_are_valid(seed, n, equal_top):
    if equal_top and n < 3:
        n = 3
    pair = random_majorization_pair(np.random.default_rng(seed), n, equal_top=equal_top)
    assert majorizes(pair.va, pair.vb)
    assert np.all(pair.vb > 0) and np.all(pair.va >= -1e-12)
    assert abs(pair.va.sum() - n) < 1e-12
    if equal_top:
        assert abs(pair.va[0] - pair.vb[0]) < 1e-12


def test_pair_validation():
    with pytest.raises(ValueError):
        MajorizationPair(np.array([1.0, 1.0]), np.array([2.0, 0.0]))
    with pytest.raises(ValueError):
        MajorizationPair(np.array([0.0, 2.0]), np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        random_majorization_pair(np.random.default_rng(0), 2, equal_top=True)


# -- cofactor identity ------------------------------------------------------------------------------

def test_cofactor_hand_example():
    # r = (1, 2, 3), l = 1: terms r_m det(minor) with alternating signs
    t = cofactor_terms([1.0, 2.0, 3.0], 1)
    assert np.allclose(t, [1 * 1, -2 * 2, 3 * 1])
    assert cofactor_residual([1.0, 2.0, 3.0], 1) == 0.0
    with pytest.raises(ValueError):
        cofactor_terms([1.0, 2.0], 2)


def test_cofactor_random_sets():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 7))
        r = rng.uniform(0.1, 3.0, n)
        for l in range(1, n):
            worst = max(worst, cofactor_residual(r, l, scaled=True))
    assert worst < 1e-10


def test_cofactor_matches_numpy_determinants():
    r = np.array([0.3, 1.1, 2.0, 2.7])
    n = r.size
    a = r[None, :] ** np.arange(n)[:, None]
    for m in range(n):
        minor = np.delete(a[:-1], m, axis=1)
        ref = (-1) ** (m + 1 + n) * r[m] ** (n - 2) * np.linalg.det(minor)
        assert cofactor_terms(r, 1)[m] == pytest.approx(ref, rel=1e-12)


# -- curvature ------------------------------------------------------------------------------------

def _sympy_second_derivative(which, x0, y0, m1, n1):
    x, y = sp.symbols("x y", positive=True)
    r = m1 * n1 * x ** 2 * y / (m1 * x + n1 * x * y + 1)
    if which is Curvature.C_OF_Y:
        f, var = sp.log(1 + r, 2), y
    elif which is Curvature.CH_OF_X:
        f, var = sp.log(r, 2), x
    else:
        f, var = r, x
    return float(sp.diff(f, var, 2).subs({x: x0, y: y0}))


@pytest.mark.parametrize("which", list(Curvature))
@pytest.mark.parametrize("x,y,db", [(1.0, 1.0, 20.0), (0.3, 2.5, 30.0), (4.0, 0.2, 10.0)])
def test_curvature_exact_matches_symbolic(which, x, y, db):
    rho = db_to_linear(db)
    k = SnrCoefficients.of(P, rho)
    ref = _sympy_second_derivative(which, x, y, k.m1, k.n1)
    assert curvature_exact(which, x, y, P, rho) == pytest.approx(ref, rel=1e-9)
    assert curvature_probe(which, x, y, P, rho) == pytest.approx(ref, rel=1e-4)


def test_curvature_signs():
    rng = np.random.default_rng(1)
    for _ in range(100):
        x, y = rng.uniform(0.05, 10, 2)
        rho = db_to_linear(rng.uniform(0, 60))
        for which in Curvature:
            assert np.sign(curvature_exact(which, x, y, P, rho)) == expected_curvature_sign(which)
    with pytest.raises(ValueError):
        curvature_probe("CofY", 0.0, 1.0, P, 100.0)


# -- Schur orderings ------------------------------------------------------------------------------

@pytest.mark.parametrize("claim", [SchurClaim.TX_INST, SchurClaim.TX_STAT,
                                   SchurClaim.RX_INST_HIGH, SchurClaim.RX_INST_LOW])
def test_schur_claims_consistent_on_strong_pair(claim):
    pair = MajorizationPair(np.array([2.6, 0.3, 0.1]), np.array([1.2, 1.0, 0.8]))
    res = schur_ordering_check(claim, pair, P, db_to_linear(20.0), 400_000, StreamSpec(2))
    assert res.verdict is Verdict.CONSISTENT
    assert res.margin_sigmas > 3


def test_schur_proxy_snr_and_validation():
    pair = MajorizationPair(np.array([2.6, 0.3, 0.1]), np.array([1.2, 1.0, 0.8]))
    res = schur_ordering_check("RxInstHigh", pair, P, 1.0, 2000, StreamSpec(0))
    assert res.rho_db == pytest.approx(50.0)
    with pytest.raises(ValueError):
        schur_ordering_check("RxStatEqualTop", pair, P, 100.0, 2000, StreamSpec(0))
    with pytest.raises(ValueError):
        schur_ordering_check("TxInst", MajorizationPair(np.array([2.0, 0.0]), np.array([1.0, 1.0])),
                             P, 100.0, 2000, StreamSpec(0))


def test_schur_degenerate_pair_is_inconclusive():
    v = np.array([1.5, 1.0, 0.5])
    res = schur_ordering_check("TxInst", MajorizationPair(v, v.copy()), P, 100.0, 20_000, StreamSpec(4))
    assert res.verdict is Verdict.INCONCLUSIVE
    assert res.diff.mean == 0.0


# -- diversity ------------------------------------------------------------------------------------

def test_loglog_slope_exact_power_law():
    db = np.arange(30, 61, 5)
    assert loglog_slope(db, 10 ** (-2.0 * db / 10.0)) == pytest.approx(-2.0, abs=1e-12)


def test_diversity_slope_instantaneous_two_antennas():
    p = P.with_(n=2)
    c = exp_correlation(2, 0.5)
    s = diversity_slope("inst", p, c, c, (45.0, 55.0))
    assert -2.1 <= s <= -1.5


def test_diversity_slope_statistical_reference():
    s = diversity_slope("stat", P, exp_correlation(3, 0.5), exp_correlation(3, 0.8), (40.0, 60.0))
    assert s == pytest.approx(-1.0, abs=0.15)


def test_diversity_slope_validation():
    c = exp_correlation(3, 0.5)
    with pytest.raises(ValueError):
        diversity_slope("inst", P, c, c, (40.0, 45.0))
    with pytest.raises(ValueError):
        diversity_slope("none", P, c, c, (40.0, 60.0))
    with pytest.raises(ValueError):
        diversity_slope("inst", P, c, c, (40.0, 60.0), points=4)


def test_diversity_slope_monte_carlo_no_csi():
    c = exp_correlation(3, 0.5)
    s = diversity_slope("none", P, c, exp_correlation(3, 0.8), (40.0, 60.0), evaluator="montecarlo",
                        points=5, mc_samples=1_000_000, spec=StreamSpec(8))
    assert s == pytest.approx(-1.0, abs=0.25)
    assert math.isfinite(s)
