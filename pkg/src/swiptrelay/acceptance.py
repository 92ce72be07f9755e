"""Acceptance checks at the reference configuration.

Reference configuration: N = 3, exponential correlation 0.5 (receive) and
0.8 (transmit), eta = 0.8, theta = 0.5, tau = 2.5, d1 = d2 = 3 m,
gamma_th = 0 dB.  ``run_all("full")`` uses the stated sample counts;
``"fast"`` shrinks Monte Carlo sizes for a quick smoke run.
"""

from __future__ import annotations

import io
import math
import time
import warnings
from dataclasses import dataclass, field
from decimal import Decimal, getcontext
from typing import Callable

import numpy as np

from . import analytic
from .channel import (CsiMode, SystemParams, db_to_linear, sample_channel, snr_hops,
                      snr_instantaneous)
from .corrmat import exp_correlation
from .mc import StreamSpec, estimate_grid
from .specfun import (EULER_GAMMA, bessel_k, capacity_kernel, digamma_int, expint_ei)
from .verify import (SchurClaim, Verdict, diversity_slope, cofactor_residual,
                     random_majorization_pair, schur_ordering_check)


@dataclass
class CriterionResult:
    id: int
    key: str
    passed: bool
    measured: str
    threshold: str
    seconds: float = 0.0
    details: list = field(default_factory=list)


def format_result(r: CriterionResult) -> str:
    status = "PASS" if r.passed else "FAIL"
    return (f"criterion={r.id}\tkey={r.key}\tstatus={status}\tmeasured={r.measured}"
            f"\tthreshold={r.threshold}\tseconds={r.seconds:.1f}")


def reference_setup(n: int = 3):
    p = SystemParams(n=n)
    cr, ct = exp_correlation(n, 0.5), exp_correlation(n, 0.8)
    return p, cr, ct, cr.eigen(), ct.eigen()


_SIZES = {
    "full": dict(mc=1_000_000, nocsi=10_000_000, schur=200_000, schur_pairs=20, det=600_000),
    "fast": dict(mc=200_000, nocsi=2_000_000, schur=50_000, schur_pairs=5, det=150_000),
}


# -- independent reference values ------------------------------------------

def _oracle_bessel_k(order: int, x: float) -> float:
    # K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt; the trapezoid rule
    # converges geometrically for this analytic, rapidly decaying integrand.
    h = 1.0 / 64
    t = np.arange(0.0, 12.0, h)
    f = np.exp(-x * np.cosh(t)) * np.cosh(order * t)
    return float(h * (f.sum() - 0.5 * f[0]))


def _oracle_euler_gamma() -> float:
    # H_n - ln n - 1/(2n) + 1/(12 n^2) - 1/(120 n^4) + 1/(252 n^6), 40-digit decimals
    getcontext().prec = 40
    n = 2000
    hn = sum(Decimal(1) / Decimal(k) for k in range(1, n + 1))
    dn = Decimal(n)
    g = (hn - dn.ln() - 1 / (2 * dn) + 1 / (12 * dn ** 2) - 1 / (120 * dn ** 4)
         + 1 / (252 * dn ** 6))
    return float(g)


def _oracle_ei(x: float) -> float:
    # gamma + ln|x| + sum x^k / (k k!) in 40-digit decimals
    getcontext().prec = 40
    xd = Decimal(repr(x))
    s = Decimal(0)
    term = Decimal(1)
    for k in range(1, 200):
        term = term * xd / k
        s += term / k
        if abs(term) < Decimal(10) ** -38:
            break
    return float(Decimal(repr(_oracle_euler_gamma())) + abs(xd).ln() + s)


# -- criteria ---------------------------------------------------------------

def c1_snr_identity(level: str) -> CriterionResult:
    rng = np.random.default_rng(20240101)
    worst = 0.0
    total = 0
    for _ in range(100):
        n = int(rng.integers(1, 7))
        p = SystemParams(eta=rng.uniform(0.05, 1.0), theta=rng.uniform(0.02, 0.98),
                         tau=rng.uniform(2.0, 4.0), d1=rng.uniform(1.0, 10.0),
                         d2=rng.uniform(1.0, 10.0), n=n)
        cr, ct = exp_correlation(n, rng.uniform(0, 0.95)), exp_correlation(n, rng.uniform(0, 0.95))
        er, et = cr.eigen(), ct.eigen()
        rho = db_to_linear(rng.uniform(-10.0, 60.0))
        s = sample_channel(rng, cr.sqrt, ct.sqrt, er.basis, et.basis, size=100)
        g = snr_instantaneous(p, s, rho)
        g1, g2 = snr_hops(p, s, rho)
        alt = g1 * g2 / (g1 + g2 + 1.0)
        worst = max(worst, float(np.max(np.abs(g - alt) / g)))
        total += g.size
    return CriterionResult(1, "snr-identity", worst <= 1e-12, f"max_rel_err={worst:.3g} over {total}",
                           "<=1e-12")


def c2_exact_vs_mc(level: str) -> CriterionResult:
    p, cr, ct, er, et = reference_setup()
    n = _SIZES[level]["mc"]
    dbs = (10.0, 20.0, 30.0)
    rhos = [db_to_linear(d) for d in dbs]
    est = estimate_grid([CsiMode.INSTANTANEOUS], "outage", p, cr, ct, rhos, n, StreamSpec(2))
    zs, details = [], []
    for db, rho in zip(dbs, rhos):
        ex = analytic.outage_exact_inst(p, er, et, rho)
        e = est[(CsiMode.INSTANTANEOUS, rho)]
        z = abs(ex - e.mean) / e.stderr
        zs.append(z)
        details.append(f"{db:g} dB: exact={ex:.6g} mc={e.mean:.6g}+-{e.stderr:.2g} z={z:.2f}")
    return CriterionResult(2, "exact-vs-mc-inst", max(zs) <= 4.0,
                           f"max_z={max(zs):.2f} (n={n})", "<=4 stderr", details=details)


def c3_bound_order(level: str, lb_leading_factor: float = 1.0) -> CriterionResult:
    p, cr, ct, er, et = reference_setup()
    viol = []
    for db in np.arange(0.0, 40.0 + 1e-9, 5.0):
        rho = db_to_linear(db)
        lb = analytic.outage_lb_inst(p, er, et, rho, leading_factor=lb_leading_factor)
        ex = analytic.outage_exact_inst(p, er, et, rho)
        if lb > ex:
            viol.append(f"{db:g} dB: lb={lb:.6g} > exact={ex:.6g}")
    limit = analytic.outage_lb_inst(p.with_(gamma_th=1e-30), er, et, db_to_linear(20.0),
                                    clamp=False, leading_factor=lb_leading_factor)
    ok = not viol and abs(limit) <= 1e-9
    return CriterionResult(3, "bound-order+lb-limit", ok,
                           f"violations={len(viol)} lb(gamma_th->0)={limit:.3g}",
                           "lb<=exact on 0..40 dB; |lb(gamma_th->0)|<=1e-9", details=viol)


def c4_high_snr(level: str) -> CriterionResult:
    p, cr, ct, er, et = reference_setup()
    rho = db_to_linear(55.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", analytic.HighSnrRangeWarning)
        ri = analytic.outage_highsnr_inst(p, er, et, rho) / analytic.outage_exact_inst(p, er, et, rho)
        rs = analytic.outage_highsnr_stat(p, er, et, rho) / analytic.outage_exact_stat(p, er, et, rho)
    ok_i = 0.95 <= ri <= 1.05
    ok_s = 0.9 <= rs <= 1.1
    return CriterionResult(4, "high-snr-ratio", ok_i and ok_s,
                           f"inst={ri:.4f}({'ok' if ok_i else 'out'}) stat={rs:.4f}({'ok' if ok_s else 'out'})",
                           "inst in [0.95,1.05]; stat in [0.9,1.1]")


def c5_diversity(level: str) -> CriterionResult:
    p, cr, ct, er, et = reference_setup()
    si = diversity_slope(CsiMode.INSTANTANEOUS, p, cr, ct, (45.0, 55.0), "analytic")
    ss = diversity_slope(CsiMode.STATISTICAL, p, cr, ct, (45.0, 55.0), "analytic")
    n = _SIZES[level]["nocsi"]
    sn = diversity_slope(CsiMode.NOCSI, p, cr, ct, (30.0, 40.0), "montecarlo",
                         mc_samples=n, spec=StreamSpec(5))
    ok = (-3.1 <= si <= -2.5) and (-1.15 <= ss <= -0.85) and (-1.3 <= sn <= -0.7)
    return CriterionResult(5, "diversity-slopes", ok,
                           f"inst={si:.3f} stat={ss:.3f} nocsi={sn:.3f} (mc n={n})",
                           "inst [-3.1,-2.5]; stat [-1.15,-0.85]; nocsi [-1.3,-0.7]")


def c6_capacity_bounds(level: str) -> CriterionResult:
    p, cr, ct, er, et = reference_setup()
    n = _SIZES[level]["mc"]
    dbs = (10.0, 20.0, 30.0)
    rhos = [db_to_linear(d) for d in dbs]
    est = estimate_grid(list(CsiMode), "capacity", p, cr, ct, rhos, n, StreamSpec(6))
    ok, details = True, []
    for db, rho in zip(dbs, rhos):
        ci, cs, cn = (est[(m, rho)] for m in CsiMode)
        ui = analytic.capacity_ub_inst(p, er, et, rho)
        us = analytic.capacity_ub_stat(p, er, et, rho)
        good = (ui >= ci.mean - 3 * ci.stderr and us >= cs.mean - 3 * cs.stderr
                and ci.mean >= cs.mean >= cn.mean)
        ok &= good
        details.append(f"{db:g} dB: ub_I={ui:.4f} C_I={ci.mean:.4f} ub_S={us:.4f} "
                       f"C_S={cs.mean:.4f} C_N={cn.mean:.4f}")
    return CriterionResult(6, "capacity-bounds+csi-order", ok, f"{sum(1 for _ in dbs)} points, n={n}",
                           "ub>=MC-3se; C_I>=C_S>=C_N", details=details)


def c7_stat_arbitration(level: str) -> CriterionResult:
    p, cr, ct, er, et = reference_setup()
    n = _SIZES[level]["mc"]
    dbs = (10.0, 20.0, 30.0)
    rhos = [db_to_linear(d) for d in dbs]
    est = estimate_grid([CsiMode.STATISTICAL], "outage", p, cr, ct, rhos, n, StreamSpec(7))
    zs, details = [], []
    for db, rho in zip(dbs, rhos):
        rep = analytic.outage_exact_stat_report(p, er, et, rho)
        e = est[(CsiMode.STATISTICAL, rho)]
        z = abs(rep.value - e.mean) / e.stderr
        zs.append(z)
        details.append(f"{db:g} dB: direct={rep.value:.6g} mc={e.mean:.6g}+-{e.stderr:.2g} z={z:.2f}")
        if rep.flagged:
            details.append(f"{db:g} dB: closed integral form deviates: printed={rep.printed!r} "
                           f"{rep.printed_note[:80]}")
    return CriterionResult(7, "stat-outage-arbitration", max(zs) <= 4.0,
                           f"max_z={max(zs):.2f} (n={n})", "<=4 stderr", details=details)


def c8_schur(level: str) -> CriterionResult:
    p = SystemParams()
    n = _SIZES[level]["schur"]
    pairs = _SIZES[level]["schur_pairs"]
    rng = np.random.default_rng(8)
    rho = db_to_linear(30.0)
    counts = {}
    ok = True
    for ci, claim in enumerate(SchurClaim):
        for k in range(pairs):
            pair = random_majorization_pair(rng, p.n, equal_top=claim is SchurClaim.RX_STAT_EQUAL_TOP)
            r = schur_ordering_check(claim, pair, p, rho, n, StreamSpec(8, ci * 1000 + k))
            counts[(claim.value, r.verdict.value)] = counts.get((claim.value, r.verdict.value), 0) + 1
            if r.verdict is Verdict.VIOLATED:
                ok = False
            if claim in (SchurClaim.RX_INST_HIGH, SchurClaim.RX_INST_LOW) and r.verdict is not Verdict.CONSISTENT:
                ok = False
    summary = " ".join(f"{c}:{v}={k}" for (c, v), k in sorted(counts.items()))
    return CriterionResult(8, "schur-orderings", ok, summary,
                           f"no violations in {pairs} pairs/claim; RxInst* consistent")


def c9_cofactor_identity(level: str) -> CriterionResult:
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 7))
        r = np.sort(rng.uniform(0.05, 5.0, n))[::-1]
        for l in range(1, n):
            worst = max(worst, cofactor_residual(r, l, scaled=True))
    return CriterionResult(9, "cofactor-identity", worst <= 1e-9, f"max_scaled_residual={worst:.3g}", "<=1e-9")


def c10_special_functions(level: str) -> CriterionResult:
    checks = {
        "K1(1)": (bessel_k(1, 1.0), _oracle_bessel_k(1, 1.0)),
        "K0(1)": (bessel_k(0, 1.0), _oracle_bessel_k(0, 1.0)),
        "Ei(-1)": (expint_ei(-1.0), _oracle_ei(-1.0)),
        "psi(1)": (digamma_int(1), -_oracle_euler_gamma()),
    }
    errs = {k: abs(a - b) for k, (a, b) in checks.items()}
    kern = {z: abs(capacity_kernel(z) - capacity_kernel(z, scheme="loggrid"))
            for z in (0.01, 0.1, 1.0, 10.0, 100.0)}
    ok = max(errs.values()) <= 1e-10 and max(kern.values()) <= 1e-8
    meas = " ".join(f"{k}:{v:.1e}" for k, v in errs.items()) + f" kernel_max_diff={max(kern.values()):.1e}"
    return CriterionResult(10, "special-functions", ok, meas, "<=1e-10; kernel schemes <=1e-8")


def c11_theta(level: str) -> CriterionResult:
    p, cr, ct, er, et = reference_setup()
    rho = db_to_linear(30.0)
    out, ok = [], True
    gap_stat = math.nan
    for mode in (CsiMode.INSTANTANEOUS, CsiMode.STATISTICAL):
        th, v = analytic.optimize_theta(mode, p, er, et, rho)
        half = analytic.capacity_upper_bound(mode, p, er, et, rho)
        ok &= v >= half
        gap = (v - half) / half
        if mode is CsiMode.STATISTICAL:
            gap_stat = gap
        out.append(f"{mode.value}: theta*={th:.4f} value={v:.4f} at0.5={half:.4f} gap={gap:.2%}")
    return CriterionResult(11, "theta-optimization", ok, f"stat_rel_gap={gap_stat:.4f}",
                           "value(theta*)>=value(0.5)", details=out)


def c12_determinism(level: str) -> CriterionResult:
    from .cli import SweepConfig, run_sweep

    n = _SIZES[level]["det"]
    base = SweepConfig(rho_db=(10.0, 20.0, 30.0), mc_samples=n, seed=12)
    texts = []
    for workers in (1, 8):
        buf = io.StringIO()
        run_sweep(SweepConfig(**{**base.__dict__, "workers": workers}), buf)
        texts.append(buf.getvalue().encode("utf-8"))
    same = texts[0] == texts[1]
    return CriterionResult(12, "determinism", same,
                           f"identical={same} bytes={len(texts[0])} (n={n})", "byte-identical CSV, 1 vs 8 workers")


CRITERIA: list[Callable[[str], CriterionResult]] = [
    c1_snr_identity, c2_exact_vs_mc, c3_bound_order, c4_high_snr, c5_diversity,
    c6_capacity_bounds, c7_stat_arbitration, c8_schur, c9_cofactor_identity, c10_special_functions,
    c11_theta, c12_determinism,
]


def run_criterion(fn: Callable[[str], CriterionResult], level: str = "full") -> CriterionResult:
    if level not in _SIZES:
        raise ValueError(f"unknown level {level!r}")
    t0 = time.perf_counter()
    try:
        res = fn(level)
    except Exception as exc:  # a crash is a failure, reported like any other
        idx = CRITERIA.index(fn) + 1 if fn in CRITERIA else 0
        res = CriterionResult(idx, fn.__name__, False, f"error: {type(exc).__name__}: {exc}", "-")
    res.seconds = time.perf_counter() - t0
    return res


def run_all(level: str = "fast"):
    for fn in CRITERIA:
        yield run_criterion(fn, level)
