import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from swiptrelay.analytic import (HighSnrRangeWarning, Hypoexponential, OutageCoefficients,
                                 capacity_ub_inst, capacity_ub_stat, capacity_upper_bound,
                                 golden_section_max, optimize_theta, outage_exact_inst,
                                 outage_exact_stat, outage_exact_stat_report,
                                 outage_highsnr_inst, outage_highsnr_stat, outage_lb_inst,
                                 partial_fraction_weights, pdf_h1_sq, surv_h2_sq)
from swiptrelay.channel import SystemParams, db_to_linear
from swiptrelay.corrmat import exp_correlation
from swiptrelay.mc import StreamSpec, estimate_capacity, estimate_outage
from swiptrelay.specfun import integrate_interval, integrate_semi_infinite

P = SystemParams()
CR, CT = exp_correlation(3, 0.5), exp_correlation(3, 0.8)
ER, ET = CR.eigen(), CT.eigen()


def distinct_values(n):
    return st.lists(st.floats(0.05, 5.0), min_size=n, max_size=n).filter(
        lambda v: min(abs(a - b) for i, a in enumerate(v) for b in v[i + 1:]) > 0.05 if n > 1 else True)


# -- partial fractions and the hypoexponential law -----------------------------------------------

@given(st.integers(2, 6).flatmap(distinct_values))
@settings(max_examples=80, deadline=None)
def test_partial_fraction_identities(v):
    n = len(v)
    assert abs(partial_fraction_weights(v, n - 1).sum() - 1) < 1e-8
    for k in range(n - 1):
        w = partial_fraction_weights(v, k)
        assert abs(w.sum()) < 1e-8 * np.abs(w).max()


def test_partial_fraction_rejects_repeats():
    with pytest.raises(ValueError):
        partial_fraction_weights([1.0, 1.0], 1)


def test_hypoexp_hand_examples():
    h = Hypoexponential([2.0, 1.0])
    assert h.pdf(1.0) == pytest.approx(math.exp(-0.5) - math.exp(-1), rel=1e-12)
    assert h.pdf(1.0) == pytest.approx(0.238651, abs=1e-6)
    assert h.sf(1.0) == pytest.approx(0.845182, abs=1e-6)
    assert h.sf(0.0) == 1.0 and h.cdf(0.0) == 0.0
    one = Hypoexponential([2.0])
    assert one.pdf(1.0) == pytest.approx(0.5 * math.exp(-0.5), rel=1e-14)
    assert pdf_h1_sq(1.0, [2.0, 1.0]) == h.pdf(1.0)
    assert surv_h2_sq(1.0, [2.0, 1.0]) == h.sf(1.0)


@pytest.mark.parametrize("values", [ER.values, ET.values, [3.0, 2.0, 1.0, 0.5], [1.0 + 1e-5, 1.0, 1.0 - 1e-5]])
def test_hypoexp_pdf_normalised_and_mean(values):
    h = Hypoexponential(values)
    assert integrate_semi_infinite(h.pdf, 0.0) == pytest.approx(1.0, abs=1e-9)
    assert integrate_semi_infinite(lambda x: x * h.pdf(x), 0.0) == pytest.approx(h.mean, rel=1e-8)
    for x in (0.3, 1.0, 4.0):
        assert integrate_interval(h.pdf, 0.0, x) == pytest.approx(h.cdf(x), abs=1e-10)


def test_hypoexp_small_x_accuracy():
    # for x -> 0 the CDF is x^N / (N! prod lambda); the series keeps full precision
    lam = np.array([3.0, 2.0, 1.0])
    h = Hypoexponential(lam)
    for x in (1e-6, 1e-4):
        assert h.cdf(x) == pytest.approx(x ** 3 / (6 * lam.prod()), rel=1e-3)
    xs = np.linspace(0, 30, 301)
    assert np.all(np.diff(h.cdf(xs)) >= 0) and np.all(h.pdf(xs) >= 0)


def test_surv_against_monte_carlo():
    rng = np.random.default_rng(0)
    e = rng.exponential(size=(500_000, 3)) * ET.raw_values
    y = e.sum(axis=1)
    for t in (0.5, 2.0, 6.0):
        emp = np.mean(y > t)
        assert abs(surv_h2_sq(t, ET.values) - emp) < 4 * math.sqrt(emp * (1 - emp) / y.size)


# -- instantaneous outage ---------------------------------------------------------------------------

def test_outage_coefficients_threshold_limit():
    k = OutageCoefficients.of(P, 100.0)
    assert k.x0 == pytest.approx(P.gamma_th * P.D1 / ((1 - P.theta) * 100.0))
    assert k.threshold(1e12) < 1e-10
    assert np.isinf(k.threshold(k.x0)) or k.threshold(k.x0) > 1e10


@pytest.mark.parametrize("db", [10.0, 20.0])
def test_exact_inst_matches_monte_carlo(db):
    rho = db_to_linear(db)
    est = estimate_outage("inst", P, CR, CT, rho, 1_000_000, StreamSpec(11))
    assert abs(outage_exact_inst(P, ER, ET, rho) - est.mean) < 4 * est.stderr


def test_exact_inst_threshold_limits():
    rho = 100.0
    assert outage_exact_inst(P.with_(gamma_th=1e-9), ER, ET, rho) < 1e-12
    assert outage_exact_inst(P.with_(gamma_th=1e9), ER, ET, rho) == pytest.approx(1.0, abs=1e-12)


def test_exact_inst_monotone():
    rhos = db_to_linear(np.arange(0, 61, 5))
    v = [outage_exact_inst(P, ER, ET, r) for r in rhos]
    assert all(b < a for a, b in zip(v, v[1:]))
    g = [outage_exact_inst(SystemParams.from_db(t), ER, ET, 100.0) for t in (-5, 0, 5, 10)]
    assert all(b > a for a, b in zip(g, g[1:]))


def test_exact_inst_single_antenna_direct_integral():
    # N = 1: 1 - int_{x0}^inf e^{-x/l} / l * exp(-g(x)/s) dx
    p = P.with_(n=1)
    k = OutageCoefficients.of(p, 1000.0)
    lam, sig = 1.0, 1.0
    direct = 1 - integrate_semi_infinite(
        lambda x: np.exp(-x / lam) / lam * np.exp(-k.threshold(x) / sig) * (x > k.x0), k.x0)
    assert outage_exact_inst(p, [lam], [sig], 1000.0) == pytest.approx(direct, rel=1e-7)


def test_lower_bound_below_exact():
    for db in range(0, 61, 5):
        rho = db_to_linear(db)
        assert outage_lb_inst(P, ER, ET, rho) <= outage_exact_inst(P, ER, ET, rho) + 1e-12
    for r in (0.0, 0.3, 0.9):
        e = exp_correlation(2, r).eigen()
        p2 = P.with_(n=2)
        assert outage_lb_inst(p2, e, e, 100.0) <= outage_exact_inst(p2, e, e, 100.0) + 1e-12


def test_lower_bound_threshold_limit_and_mutation():
    tiny = P.with_(gamma_th=1e-12)
    assert abs(outage_lb_inst(tiny, ER, ET, 100.0, clamp=False)) < 1e-5
    wrong = outage_lb_inst(tiny, ER, ET, 100.0, clamp=False, leading_factor=2.0)
    assert wrong == pytest.approx(-1.0, abs=1e-5)


def test_highsnr_inst_slope_and_warnings():
    with pytest.warns(HighSnrRangeWarning):
        outage_highsnr_inst(P, ER, ET, db_to_linear(10.0))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        a = outage_highsnr_inst(P, ER, ET, db_to_linear(50.0))
        b = outage_highsnr_inst(P, ER, ET, db_to_linear(60.0))
    # order rho^-N ln rho: log-log slope a little above -N
    slope = (math.log10(b) - math.log10(a))
    assert -3.0 < slope < -2.5
    with pytest.raises(ValueError):
        outage_highsnr_inst(P, ER, exp_correlation(2, 0.5).eigen(), 1e5)


def test_highsnr_stat_warns_and_decreases_with_sigma1():
    with pytest.warns(HighSnrRangeWarning):
        outage_highsnr_stat(P, ER, ET, db_to_linear(20.0))
    rho = db_to_linear(50.0)
    vals = [outage_highsnr_stat(P, ER, exp_correlation(3, r).eigen(), rho) for r in (0.0, 0.4, 0.8)]
    assert vals[0] > vals[1] > vals[2] > 0


# -- statistical outage -------------------------------------------------------------------------

@pytest.mark.parametrize("db", [10.0, 20.0])
def test_exact_stat_matches_monte_carlo(db):
    rho = db_to_linear(db)
    est = estimate_outage("stat", P, CR, CT, rho, 1_000_000, StreamSpec(12))
    assert abs(outage_exact_stat(P, ER, ET, rho) - est.mean) < 4 * est.stderr


def test_stat_outage_not_below_inst():
    for db in (0, 10, 20, 30):
        rho = db_to_linear(db)
        assert outage_exact_stat(P, ER, ET, rho) >= outage_exact_inst(P, ER, ET, rho) - 1e-12


def test_stat_reduces_to_inst_for_single_antenna():
    p = P.with_(n=1)
    rep = outage_exact_stat_report(p, [1.0], [1.0], 100.0)
    assert rep.value == outage_exact_inst(p, [1.0], [1.0], 100.0)
    assert math.isnan(rep.printed)


def test_stat_report_flags_closed_form():
    rep = outage_exact_stat_report(P, ER, ET, 100.0)
    assert rep.value == pytest.approx(outage_exact_stat(P, ER, ET, 100.0), rel=1e-12)
    # the typeset closed form does not converge for this configuration
    assert rep.flagged


# -- capacity ------------------------------------------------------------------------------------

@pytest.mark.parametrize("mode", ["inst", "stat"])
@pytest.mark.parametrize("db", [0.0, 20.0, 40.0])
def test_capacity_bounds_above_monte_carlo(mode, db):
    rho = db_to_linear(db)
    est = estimate_capacity(mode, P, CR, CT, rho, 200_000, StreamSpec(13))
    assert capacity_upper_bound(mode, P, ER, ET, rho) >= est.mean - 3 * est.stderr


def test_capacity_bounds_increase_with_rho():
    rhos = db_to_linear(np.arange(-10, 61, 10))
    for fn in (capacity_ub_inst, capacity_ub_stat):
        v = [fn(P, ER, ET, r) for r in rhos]
        assert all(b > a for a, b in zip(v, v[1:]))
        assert isinstance(v[0], float)


@pytest.mark.parametrize("db", [20.0, 30.0])
def test_stat_bound_below_inst_bound(db):
    rho = db_to_linear(db)
    assert capacity_ub_stat(P, ER, ET, rho) <= capacity_ub_inst(P, ER, ET, rho)


def test_no_csi_has_no_bound():
    with pytest.raises(ValueError):
        capacity_upper_bound("none", P, ER, ET, 100.0)


def test_single_antenna_bound_vs_direct_quadrature():
    # N = 1: bound >= exact ergodic capacity, computed by 2-D quadrature
    p = P.with_(n=1)
    rho = 1000.0

    def cap(x, y):
        g1 = (1 - p.theta) * rho * x / p.D1
        g2 = p.eta * p.theta * rho * x * y / (p.D1 * p.D2)
        return 0.5 * np.log2(1 + g1 * g2 / (g1 + g2 + 1))

    def outer(xs):
        return np.array([math.exp(-x) * integrate_semi_infinite(lambda y: np.exp(-y) * cap(x, y), 0.0)
                         for x in xs])

    exact = integrate_semi_infinite(outer, 0.0)
    ub = capacity_ub_inst(p, [1.0], [1.0], rho)
    assert exact <= ub < exact + 0.5
    assert capacity_ub_stat(p, [1.0], [1.0], rho) == pytest.approx(ub, rel=1e-8)


def test_golden_section():
    x, fx = golden_section_max(lambda t: -(t - 0.3) ** 2, 0.0, 1.0, tol=1e-8)
    assert x == pytest.approx(0.3, abs=1e-6) and fx == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("mode", ["inst", "stat"])
def test_optimize_theta(mode):
    rho = db_to_linear(30.0)
    th, val = optimize_theta(mode, P, ER, ET, rho)
    assert 0.01 <= th <= 0.99
    assert val >= capacity_upper_bound(mode, P, ER, ET, rho)
    for other in (th - 0.05, th + 0.05):
        if 0.01 <= other <= 0.99:
            assert capacity_upper_bound(mode, P.with_(theta=other), ER, ET, rho) <= val + 1e-9
    with pytest.raises(ValueError):
        optimize_theta("none", P, ER, ET, rho)
