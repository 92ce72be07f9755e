"""Outage probability: exact integrals, lower bound and high-SNR forms."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..channel import SystemParams
from ..specfun import (EULER_GAMMA, Quadrature, QuadratureError, harmonic,
                       integrate_interval, integrate_semi_infinite, product_exp_ccdf)
from .hypoexp import Hypoexponential, eigvals_of, partial_fraction_weights

# Outage values reach 1e-8 and below at high SNR, so the absolute floor of
# the default quadrature would dominate; rely on the relative tolerance.
OUTAGE_QUADRATURE = Quadrature(rel_tol=1e-10, abs_tol=1e-30, max_subdivisions=400)

HIGH_SNR_MIN_DB = 30.0


class HighSnrRangeWarning(UserWarning):
    """High-SNR approximation evaluated outside its intended range."""


@dataclass(frozen=True)
class OutageCoefficients:
    """a, b, c, d of the exact-outage integral; outage iff c x^2 - d x < ..."""
    a: float
    b: float
    c: float
    d: float

    @classmethod
    def of(cls, p: SystemParams, rho: float) -> "OutageCoefficients":
        g = p.gamma_th
        return cls(a=(1.0 - p.theta) * rho * g / p.D1,
                   b=g,
                   c=p.eta * p.theta * (1.0 - p.theta) * rho ** 2 / (p.D1 ** 2 * p.D2),
                   d=p.eta * p.theta * rho * g / (p.D1 * p.D2))

    @property
    def x0(self) -> float:
        """Integration lower limit d/c = gamma_th D1 / ((1 - theta) rho)."""
        return self.d / self.c

    def threshold(self, x):
        """(a x + b) / (c x^2 - d x), the second-hop level below which outage occurs."""
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (self.a * x + self.b) / (x * (self.c * x - self.d))


def _check_rho(rho: float):
    if not rho > 0:
        raise ValueError(f"rho must be positive (linear), got {rho!r}")


def outage_exact_inst(p: SystemParams, eig_r, eig_t, rho: float,
                      q: Quadrature = OUTAGE_QUADRATURE) -> float:
    """Exact outage probability with instantaneous CSI.

    Evaluates 1 - int_{d/c}^inf f_X(x) Fbar_Y(g(x)) dx in the equivalent
    complementary form F_X(d/c) + int_{d/c}^inf f_X(x) F_Y(g(x)) dx, which
    keeps full relative accuracy when the outage is tiny.
    """
    _check_rho(rho)
    hx = Hypoexponential(eig_r)
    hy = Hypoexponential(eig_t)
    k = OutageCoefficients.of(p, rho)
    x0 = k.x0

    def integrand(x):
        g = k.threshold(x)
        fy = np.where(np.isfinite(g) & (g > 0), hy.cdf(np.where(np.isfinite(g), g, 0.0)), 1.0)
        return hx.pdf(x) * fy

    val = hx.cdf(x0) + integrate_semi_infinite(integrand, x0, q)
    return float(min(max(val, 0.0), 1.0))


def outage_lb_inst(p: SystemParams, eig_r, eig_t, rho: float, clamp: bool = True,
                   leading_factor: float = 1.0) -> float:
    """Closed-form lower bound on the instantaneous-CSI outage.

    ``leading_factor`` multiplies the double sum; it exists only so tests can
    reproduce the variant with an extra factor 2 in front (which tends to -1
    instead of 0 as gamma_th -> 0).
    """
    _check_rho(rho)
    lam = eigvals_of(eig_r)
    sig = eigvals_of(eig_t)
    n = lam.size
    w = partial_fraction_weights(lam, n - 1)
    v = partial_fraction_weights(sig, sig.size - 1)
    first = np.exp(-p.gamma_th * p.D1 / ((1.0 - p.theta) * rho * lam))
    u2 = p.gamma_th * p.D1 * p.D2 / (p.eta * p.theta * rho * np.outer(lam, sig))
    second = product_exp_ccdf(u2)  # 2u K1(2u) with u^2 = u2
    s = float((w * first) @ second @ v)
    val = 1.0 - leading_factor * s
    return min(max(val, 0.0), 1.0) if clamp else val


def _maybe_warn(rho: float, raw: float, clamp: bool, name: str) -> float:
    rho_db = 10.0 * math.log10(rho)
    clamped = min(max(raw, 0.0), 1.0)
    if rho_db < HIGH_SNR_MIN_DB:
        warnings.warn(f"{name} evaluated at {rho_db:.1f} dB, below {HIGH_SNR_MIN_DB:.0f} dB",
                      HighSnrRangeWarning, stacklevel=3)
    if clamp and clamped != raw:
        warnings.warn(f"{name} = {raw:.4g} clamped to [0, 1]", HighSnrRangeWarning, stacklevel=3)
        return clamped
    return raw


def outage_highsnr_inst(p: SystemParams, eig_r, eig_t, rho: float, clamp: bool = True) -> float:
    """High-SNR approximation of the instantaneous-CSI outage (order rho^-N ln rho)."""
    _check_rho(rho)
    lam = eigvals_of(eig_r)
    sig = eigvals_of(eig_t)
    n = lam.size
    if sig.size != n:
        raise ValueError("receive and transmit eigenvalue vectors must have equal length")
    wl = partial_fraction_weights(lam, -1)
    ws = partial_fraction_weights(sig, -1)
    g = p.gamma_th
    log_term = (harmonic(n - 1) - EULER_GAMMA
                + np.log((1.0 - p.theta) * rho * lam / (g * p.D1)))
    bracket = ((p.D2 / (p.eta * p.theta)) ** n / math.factorial(n - 1) * log_term[:, None]
               - (-sig[None, :] / (1.0 - p.theta)) ** n)
    total = float(wl @ bracket @ ws) / math.factorial(n) * (g * p.D1 / rho) ** n
    return _maybe_warn(rho, total, clamp, "outage_highsnr_inst")


def _outage_stat_direct(p, lam, sig, rho, q):
    # X = A + K with A = lambda1 |g1|^2 and K = sum_{i>=2} lambda_i |g_i|^2.
    # Outage iff A < d/c or B < (a A + b) / ((c A - d) X); average over B then K.
    k = OutageCoefficients.of(p, rho)
    x0 = k.x0
    l1, s1 = lam[0], sig[0]
    first = -math.expm1(-x0 / l1)
    hk = Hypoexponential(lam[1:])

    def inner(alpha):
        h = (k.a * alpha + k.b) / ((k.c * alpha - k.d) * s1)
        return integrate_semi_infinite(lambda kk: hk.pdf(kk) * -np.expm1(-h / (alpha + kk)), 0.0, q)

    def outer(alphas):
        out = np.empty_like(alphas)
        for j, al in enumerate(alphas):
            out[j] = math.exp(-al / l1) / l1 * inner(al) if k.c * al > k.d else 1.0 / l1
        return out

    return first + integrate_semi_infinite(outer, x0, q)


def _outage_stat_printed(p, lam, sig, rho, q):
    # The closed integral form exactly as typeset (single integral plus a
    # sum of double integrals over i = 2..N).
    k = OutageCoefficients.of(p, rho)
    x0 = k.x0
    l1, s1 = lam[0], sig[0]
    n = lam.size

    def level(t, li):
        return (k.a * t + k.b) / ((k.c * t - k.d) * s1 * li * t)

    def first_integrand(t):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            e = -(level(t, l1) + t)
            return np.where(k.c * t > k.d, np.exp(e), 0.0)

    total = integrate_semi_infinite(first_integrand, x0, q)
    rest = lam[1:]
    for i in range(1, n):
        li = lam[i]
        others = [lam[j] for j in range(1, n) if j != i]
        wi = li ** (n - 2) / (np.prod([li - lj for lj in others]) if others else 1.0)

        def outer(ts, li=li):
            out = np.empty_like(ts)
            for j, t in enumerate(ts):
                upper = level(t, li)
                hh = (k.a * t + k.b) / ((k.c * t - k.d) * s1 * li)
                with np.errstate(over="ignore"):
                    grow = math.exp((l1 / li - 1.0) * t) if (l1 / li - 1.0) * t < 700 else math.inf
                inn = integrate_interval(lambda x: np.exp(-(x + hh / x)), x0, upper, q)
                out[j] = grow * inn
            return out

        total += wi * integrate_semi_infinite(outer, x0, q)
    del rest
    return 1.0 - total


@dataclass(frozen=True)
class StatOutageReport:
    """Statistical-CSI outage from the direct 2-D quadrature (``value``),
    alongside the closed integral form as typeset (``printed``; nan when that
    form cannot be evaluated, with the reason in ``printed_note``)."""
    value: float
    printed: float
    printed_note: str = ""

    @property
    def discrepancy(self) -> float:
        return abs(self.printed - self.value)

    @property
    def flagged(self) -> bool:
        return not (self.discrepancy <= 1e-3)


def outage_exact_stat_report(p: SystemParams, eig_r, eig_t, rho: float,
                             q: Quadrature = OUTAGE_QUADRATURE) -> StatOutageReport:
    _check_rho(rho)
    lam = eigvals_of(eig_r)
    sig = eigvals_of(eig_t)
    if lam.size == 1:
        # single antenna: statistical and instantaneous CSI coincide
        v = outage_exact_inst(p, lam, sig, rho, q)
        return StatOutageReport(v, math.nan, "closed form needs N >= 2")
    value = min(max(_outage_stat_direct(p, lam, sig, rho, q), 0.0), 1.0)
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            printed = _outage_stat_printed(p, lam, sig, rho, q)
        note = ""
    except QuadratureError as exc:
        printed, note = math.nan, f"diverges: {exc}"
    return StatOutageReport(float(value), float(printed), note)


def outage_exact_stat(p: SystemParams, eig_r, eig_t, rho: float,
                      q: Quadrature = OUTAGE_QUADRATURE) -> float:
    """Exact outage with statistical CSI (rank-1 principal-eigenvector relay).

    Computed by direct two-dimensional quadrature of the outage event.  Use
    :func:`outage_exact_stat_report` to also get the closed integral form.
    """
    _check_rho(rho)
    lam = eigvals_of(eig_r)
    sig = eigvals_of(eig_t)
    if lam.size == 1:
        return outage_exact_inst(p, lam, sig, rho, q)
    return float(min(max(_outage_stat_direct(p, lam, sig, rho, q), 0.0), 1.0))


def outage_highsnr_stat(p: SystemParams, eig_r, eig_t, rho: float, clamp: bool = True) -> float:
    """High-SNR approximation of the statistical-CSI outage (order 1/rho)."""
    _check_rho(rho)
    lam = eigvals_of(eig_r)
    s1 = eigvals_of(eig_t)[0]
    w = partial_fraction_weights(lam, lam.size - 2)
    dd = p.D1 * p.D2 * p.gamma_th / (p.eta * p.theta)
    val = (p.gamma_th * p.D1 / ((1.0 - p.theta) * lam[0])
           - float(np.sum(w * (dd / s1) * np.log(dd / (s1 * lam * rho))))) / rho
    return _maybe_warn(rho, val, clamp, "outage_highsnr_stat")
