"""Scalar special functions and quadrature used by the closed-form expressions.

Covers psi at positive integers, Ei on the negative axis (plus the scaled
e^t E1(t) form the capacity bounds need), modified Bessel K0/K1, an
adaptive Gauss-Kronrod integrator for semi-infinite ranges and the
G^{3,1}_{1,3}(z | 0; 0,1,0) capacity kernel.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

EULER_GAMMA = 0.57721566490153286060651209008240243

_EPS = np.finfo(float).eps
_TINY = np.finfo(float).tiny


class QuadratureError(ArithmeticError):
    """Adaptive integration did not reach the requested tolerance.

    The best estimate and its error bound are kept on the exception so
    callers can decide whether to use them anyway.
    """

    def __init__(self, message: str, estimate: float, abserr: float):
        super().__init__(f"{message} (estimate={estimate!r}, abserr={abserr!r})")
        self.estimate = estimate
        self.abserr = abserr


@dataclass(frozen=True)
class Quadrature:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_subdivisions: int = 60

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 10:
            raise ValueError("max_subdivisions must be at least 10")


DEFAULT_QUADRATURE = Quadrature()


# ---------------------------------------------------------------------------
# Gauss-Kronrod 10/21 rule (QUADPACK qk21 abscissae and weights)
# ---------------------------------------------------------------------------

_XGK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208067010400,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
# 10-point Gauss weights, attached to the odd-indexed Kronrod nodes
_WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

# Full symmetric node set on [-1, 1] and matching weights.
_GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_GK_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
_G_WEIGHTS = np.zeros(21)
for _k, _w in zip(range(1, 10, 2), _WG):
    _G_WEIGHTS[_k] = _w
    _G_WEIGHTS[20 - _k] = _w


def _gk21(f: Callable, a: float, b: float) -> tuple[float, float]:
    """One Gauss-Kronrod 21 panel with the QUADPACK error heuristic."""
    centr = 0.5 * (a + b)
    hlgth = 0.5 * (b - a)
    fv = np.asarray(f(centr + hlgth * _GK_NODES), dtype=float)
    if fv.shape != (21,):
        fv = np.broadcast_to(fv, (21,))
    if not np.all(np.isfinite(fv)):
        raise QuadratureError(f"non-finite integrand on [{a}, {b}]", math.nan, math.inf)
    resk = float(np.dot(_GK_WEIGHTS, fv))
    resg = float(np.dot(_G_WEIGHTS, fv))
    resabs = float(np.dot(_GK_WEIGHTS, np.abs(fv)))
    reskh = 0.5 * resk
    resasc = float(np.dot(_GK_WEIGHTS, np.abs(fv - reskh)))
    h = abs(hlgth)
    resk *= hlgth
    resabs *= h
    resasc *= h
    err = abs((resk - resg * hlgth))
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    if resabs > _TINY / (50.0 * _EPS):
        err = max(50.0 * _EPS * resabs, err)
    return resk, err


def integrate_interval(f: Callable, a: float, b: float,
                       q: Quadrature = DEFAULT_QUADRATURE,
                       full_output: bool = False):
    """Globally adaptive GK21 integration of a vectorised ``f`` over [a, b].

    ``b < a`` gives the usual signed result.
    """
    if a == b:
        return (0.0, 0.0) if full_output else 0.0
    if b < a:
        out = integrate_interval(f, b, a, q, full_output=True)
        return (-out[0], out[1]) if full_output else -out[0]

    res, err = _gk21(f, a, b)
    heap = [(-err, a, b, res, err)]
    splits = 0
    while True:
        total = math.fsum(item[3] for item in heap)
        abserr = math.fsum(item[4] for item in heap)
        if abserr <= max(q.abs_tol, q.rel_tol * abs(total)):
            return (total, abserr) if full_output else total
        if splits >= q.max_subdivisions:
            raise QuadratureError(
                f"no convergence after {splits} subdivisions", total, abserr)
        _, lo, hi, _, _ = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            raise QuadratureError("interval cannot be bisected further", total, abserr)
        for u, v in ((lo, mid), (mid, hi)):
            r, e = _gk21(f, u, v)
            heapq.heappush(heap, (-e, u, v, r, e))
        splits += 1


def integrate_semi_infinite(f: Callable, lower: float,
                            q: Quadrature = DEFAULT_QUADRATURE,
                            full_output: bool = False):
    """Integrate ``f`` over (lower, inf).

    The range is mapped onto (0, 1) with x = lower + t/(1 - t) and handed to
    the adaptive GK21 driver. ``f`` is called with numpy arrays of nodes and
    must return an array of the same shape.

    Raises
    ------
    QuadratureError
        If the tolerance ``max(rel_tol*|I|, abs_tol)`` is not met within
        ``q.max_subdivisions`` bisections. The exception carries the best
        estimate and its error bound.
    """
    def mapped(t):
        s = 1.0 - t
        return np.asarray(f(lower + t / s), dtype=float) / (s * s)

    return integrate_interval(mapped, 0.0, 1.0, q, full_output)


# ---------------------------------------------------------------------------
# psi, Ei, E1
# ---------------------------------------------------------------------------

def digamma_int(k: int) -> float:
    """psi(k) = -gamma + H_{k-1} for integer k >= 1."""
    if int(k) != k or k < 1:
        raise ValueError(f"digamma_int needs a positive integer, got {k!r}")
    return -EULER_GAMMA + math.fsum(1.0 / m for m in range(1, int(k)))


def harmonic(n: int) -> float:
    return math.fsum(1.0 / m for m in range(1, n + 1))


def _e1_series(t: float) -> float:
    # E1(t) = -gamma - ln t - sum_{k>=1} (-t)^k / (k k!)
    total = 0.0
    term = 1.0
    for k in range(1, 200):
        term *= -t / k
        contrib = term / k
        total += contrib
        if abs(contrib) < _EPS * abs(total):
            break
    return -EULER_GAMMA - math.log(t) - total


def _e1_scaled_cf(t: float) -> float:
    """e^t E1(t) by the modified Lentz continued fraction (t > 1)."""
    fpmin = 1e-300
    b = t + 1.0
    c = 1.0 / fpmin
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"E1 continued fraction failed to converge at t={t}")


_E1_SWITCH = 1.0


def scaled_e1(t: float) -> float:
    """e^t * E1(t) for t > 0, stable for large t where e^t overflows."""
    if not t > 0:
        raise ValueError(f"scaled_e1 needs t > 0, got {t!r}")
    if t <= _E1_SWITCH:
        return math.exp(t) * _e1_series(t)
    return _e1_scaled_cf(t)


def expint_ei(x: float) -> float:
    """Exponential integral Ei(x) for x < 0 (equal to -E1(-x))."""
    if not x < 0:
        raise ValueError(f"expint_ei is only defined here for x < 0, got {x!r}")
    t = -x
    if t <= _E1_SWITCH:
        return -_e1_series(t)
    return -_e1_scaled_cf(t) * math.exp(-t)


# ---------------------------------------------------------------------------
# Modified Bessel functions of the second kind, orders 0 and 1
# ---------------------------------------------------------------------------

_SERIES_TERMS = 22
_BESSEL_SWITCH = 2.0


def _k_series(order: int, x: np.ndarray) -> np.ndarray:
    y = 0.25 * x * x
    lg = np.log(0.5 * x)
    # term_k = y^k / (k! (k+order)!)
    term = np.ones_like(x)
    i_sum = np.zeros_like(x)
    psi_sum = np.zeros_like(x)
    h = 0.0  # H_k
    for k in range(_SERIES_TERMS):
        if k > 0:
            term = term * y / (k * (k + order))
            h += 1.0 / k
        i_sum += term
        if order == 0:
            psi_sum += h * term
        else:
            psi_sum += (-2.0 * EULER_GAMMA + 2.0 * h + 1.0 / (k + 1)) * term
    if order == 0:
        return -(lg + EULER_GAMMA) * i_sum + psi_sum
    i1 = 0.5 * x * i_sum
    return 1.0 / x + lg * i1 - 0.25 * x * psi_sum


def _k_steed(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """K0, K1 via Steed's continued fraction (Temme's CF2), x >= 2."""
    nu = 0.0
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25 - nu * nu
    q = np.full_like(x, a1)
    c = np.full_like(x, a1)
    a = np.full_like(x, -a1)
    s = 1.0 + q * delh
    for i in range(2, 10_000):
        a = a - 2.0 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = h + delh
        dels = q * delh
        s = s + dels
        if np.all(np.abs(dels) < _EPS * np.abs(s)):
            break
    else:
        raise ArithmeticError("Steed continued fraction did not converge")
    h = a1 * h
    k0 = np.sqrt(math.pi / (2.0 * x)) * np.exp(-x) / s
    k1 = k0 * (nu + x + 0.5 - h) / x
    return k0, k1


def bessel_k(order: int, x):
    """Modified Bessel function of the second kind K_order(x), order 0 or 1.

    Ascending series for x <= 2, Steed's continued fraction above.
    Accepts scalars or arrays; scalars come back as float.
    """
    if order not in (0, 1):
        raise ValueError("only orders 0 and 1 are implemented")
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("bessel_k needs x > 0")
    flat = np.atleast_1d(arr).ravel()
    out = np.empty_like(flat)
    small = flat <= _BESSEL_SWITCH
    if np.any(small):
        out[small] = _k_series(order, flat[small])
    if np.any(~small):
        k0, k1 = _k_steed(flat[~small])
        out[~small] = k1 if order == 1 else k0
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def product_exp_ccdf(u):
    """P(E1*E2 > u) = 2 sqrt(u) K1(2 sqrt(u)) for independent unit exponentials.

    Continuous at u = 0 with value 1.
    """
    u = np.asarray(u, dtype=float)
    out = np.ones_like(u)
    pos = u > 0
    if np.any(pos):
        r = 2.0 * np.sqrt(u[pos])
        out[pos] = r * bessel_k(1, r)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# capacity kernel G^{3,1}_{1,3}(z | 0; 0,1,0)
# ---------------------------------------------------------------------------

def _kernel_adaptive(z: float, q: Quadrature) -> float:
    # x -> u = z x turns the kernel into int_0^inf 2 sqrt(u) K1(2 sqrt(u)) / (z + u) du
    return integrate_semi_infinite(lambda u: product_exp_ccdf(u) / (z + u), 0.0, q)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _kernel_loggrid(z: float, panel: float = 0.25) -> float:
    # u = e^s; composite 16-point Gauss-Legendre on a fixed s grid
    s_lo = math.log(z) - 42.0
    s_hi = math.log(4000.0)
    n_panels = max(1, int(math.ceil((s_hi - s_lo) / panel)))
    edges = np.linspace(s_lo, s_hi, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    s = (mids[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    u = np.exp(s)
    vals = product_exp_ccdf(u) * u / (z + u)
    w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return math.fsum(w * vals)


def capacity_kernel(z: float, q: Quadrature = DEFAULT_QUADRATURE,
                    scheme: str = "adaptive") -> float:
    """G^{3,1}_{1,3}(z | 0; 0,1,0) = int_0^inf 2 sqrt(z x) K1(2 sqrt(z x)) / (1 + x) dx.

    ``scheme="adaptive"`` uses :func:`integrate_semi_infinite`;
    ``scheme="loggrid"`` is an independent fixed-grid rule in log u, kept
    as a cross-check.
    """
    if not z > 0:
        raise ValueError(f"capacity_kernel needs z > 0, got {z!r}")
    if scheme == "adaptive":
        return _kernel_adaptive(float(z), q)
    if scheme == "loggrid":
        return _kernel_loggrid(float(z))
    raise ValueError(f"unknown scheme {scheme!r}")
