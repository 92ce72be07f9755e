"""Ergodic-capacity upper bounds and power-splitting optimisation.

Both bounds use 1 + g1 g2 / (g1 + g2 + 1) = (1 + g1)(1 + g2) / (1 + g1 + g2)
together with E log(1 + g1 + g2) >= log(1 + e^{E ln g1} + e^{E ln g2}).
"""

from __future__ import annotations

import math

import numpy as np

from ..channel import CsiMode, SystemParams
from ..specfun import (DEFAULT_QUADRATURE, Quadrature, capacity_kernel, digamma_int,
                       scaled_e1)
from .hypoexp import eigvals_of, partial_fraction_weights

_LN2 = math.log(2.0)
PSI1 = digamma_int(1)


def _log_term(o1: float, o2: float) -> float:
    # 0.5 log2(1 + e^o1 + e^o2) without overflow
    m = max(o1, o2, 0.0)
    return 0.5 * (m + math.log(math.exp(-m) + math.exp(o1 - m) + math.exp(o2 - m))) / _LN2


def capacity_ub_inst(p: SystemParams, eig_r, eig_t, rho: float,
                     q: Quadrature = DEFAULT_QUADRATURE) -> float:
    """Upper bound on the instantaneous-CSI ergodic capacity (bits/s/Hz)."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    lam = eigvals_of(eig_r)
    sig = eigvals_of(eig_t)
    w = partial_fraction_weights(lam, lam.size - 1)
    v = partial_fraction_weights(sig, sig.size - 1)
    beta = p.D1 / ((1.0 - p.theta) * rho * lam)
    z = p.D1 * p.D2 / (p.eta * p.theta * rho * np.outer(lam, sig))
    c1 = math.fsum(w * np.array([scaled_e1(b) for b in beta]))
    kern = np.array([[capacity_kernel(zz, q) for zz in row] for row in z])
    c2 = float(w @ kern @ v)
    o1 = float(np.sum(w * (PSI1 - np.log(beta))))
    o2 = float(w @ (2.0 * PSI1 - np.log(z)) @ v)
    return float((c1 + c2) / (2.0 * _LN2) - _log_term(o1, o2))


def capacity_ub_stat(p: SystemParams, eig_r, eig_t, rho: float,
                     q: Quadrature = DEFAULT_QUADRATURE) -> float:
    """Upper bound on the statistical-CSI ergodic capacity (bits/s/Hz)."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    lam = eigvals_of(eig_r)
    s1 = eigvals_of(eig_t)[0]
    w = partial_fraction_weights(lam, lam.size - 1)
    beta1 = p.D1 / ((1.0 - p.theta) * rho * lam[0])
    z = p.D1 * p.D2 / (p.eta * p.theta * rho * s1 * lam)
    c2 = math.fsum(w * np.array([capacity_kernel(zz, q) for zz in z]))
    c1 = scaled_e1(beta1)
    o1 = PSI1 - math.log(beta1)
    o2 = float(np.sum(w * (2.0 * PSI1 - np.log(z))))
    return float((c1 + c2) / (2.0 * _LN2) - _log_term(o1, o2))


def capacity_upper_bound(mode, p: SystemParams, eig_r, eig_t, rho: float,
                         q: Quadrature = DEFAULT_QUADRATURE) -> float:
    mode = CsiMode.parse(mode)
    if mode is CsiMode.INSTANTANEOUS:
        return capacity_ub_inst(p, eig_r, eig_t, rho, q)
    if mode is CsiMode.STATISTICAL:
        return capacity_ub_stat(p, eig_r, eig_t, rho, q)
    raise ValueError("no analytic capacity bound without CSI")


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-4):
    """Maximise a unimodal ``f`` on [lo, hi]; returns (x, f(x))."""
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


THETA_RANGE = (0.01, 0.99)


def optimize_theta(mode, p: SystemParams, eig_r, eig_t, rho: float,
                   q: Quadrature = DEFAULT_QUADRATURE, tol: float = 1e-4):
    """Power-splitting ratio maximising the capacity upper bound.

    Golden-section search on [0.01, 0.99]; the returned value never falls
    below the bound at theta = 0.5.
    """
    mode = CsiMode.parse(mode)
    if mode is CsiMode.NOCSI:
        raise ValueError("theta optimisation needs instantaneous or statistical CSI")

    def f(th):
        return capacity_upper_bound(mode, p.with_(theta=th), eig_r, eig_t, rho, q)

    th, val = golden_section_max(f, *THETA_RANGE, tol=tol)
    half = f(0.5)
    if half > val:
        return 0.5, half
    return th, val
