"""Checks of structural claims: majorization orderings of capacity,
the Vandermonde cofactor identity, curvature signs and diversity slopes."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import CsiMode, SnrCoefficients, SystemParams, complex_normal, db_to_linear, snr_form
from .corrmat import CorrelationModel, exp_correlation
from .mc import Estimate, StreamSpec, estimate_grid, run_parallel

# regime proxies for the receive-correlation claims with instantaneous CSI
HIGH_SNR_PROXY_DB = 50.0
LOW_SNR_PROXY_DB = -10.0
SIGMA_MARGIN = 3.0


# ---------------------------------------------------------------------------
# majorization
# ---------------------------------------------------------------------------

def majorizes(a: Sequence[float], b: Sequence[float], tol: float = 1e-12) -> bool:
    """True iff a majorizes b (sorted prefix sums of a dominate, totals equal)."""
    a = np.sort(np.asarray(a, dtype=float))[::-1]
    b = np.sort(np.asarray(b, dtype=float))[::-1]
    if a.shape != b.shape:
        raise ValueError("majorization needs vectors of equal length")
    ca, cb = np.cumsum(a), np.cumsum(b)
    if abs(ca[-1] - cb[-1]) > tol * max(1.0, abs(ca[-1])):
        return False
    return bool(np.all(ca[:-1] >= cb[:-1] - tol * max(1.0, abs(ca[-1]))))


@dataclass(frozen=True)
class MajorizationPair:
    """Descending vectors with va majorizing vb."""
    va: np.ndarray
    vb: np.ndarray

    def __post_init__(self):
        va = np.asarray(self.va, dtype=float)
        vb = np.asarray(self.vb, dtype=float)
        if va.shape != vb.shape or va.ndim != 1:
            raise ValueError("pair vectors must be 1-D and of equal length")
        if np.any(np.diff(va) > 0) or np.any(np.diff(vb) > 0):
            raise ValueError("pair vectors must be sorted in descending order")
        if abs(va.sum() - vb.sum()) > 1e-12 * max(1.0, abs(va.sum())):
            raise ValueError("pair vectors must have equal sums")
        if not majorizes(va, vb):
            raise ValueError("first vector does not majorize the second")
        object.__setattr__(self, "va", va)
        object.__setattr__(self, "vb", vb)


def random_majorization_pair(rng: np.random.Generator, n: int, total: float | None = None,
                             equal_top: bool = False) -> MajorizationPair:
    """Random positive pair va > vb (in the majorization order) with a common sum.

    vb is a scaled Dirichlet draw; va moves vb part of the way towards the
    most concentrated vector with the same total (or the same leading entry
    when ``equal_top`` is set).
    """
    total = float(n if total is None else total)
    vb = np.sort(rng.dirichlet(np.ones(n)))[::-1] * total
    vb[-1] = total - vb[:-1].sum()
    if equal_top:
        if n < 3:
            raise ValueError("equal-top pairs need n >= 3")
        tail = vb[1:]
        s = tail.sum()
        alpha_max = (vb[0] - tail[0]) / (s - tail[0])
        alpha = rng.uniform(0.1, 0.9) * min(1.0, alpha_max)
        target = np.zeros_like(tail)
        target[0] = s
        va = np.concatenate([[vb[0]], (1.0 - alpha) * tail + alpha * target])
    else:
        alpha = rng.uniform(0.1, 0.9)
        target = np.zeros(n)
        target[0] = total
        va = (1.0 - alpha) * vb + alpha * target
    va[-1] = total - va[:-1].sum()
    return MajorizationPair(va, vb)


# ---------------------------------------------------------------------------
# Vandermonde cofactor identity
# ---------------------------------------------------------------------------

def _det_laplace(m: np.ndarray) -> float:
    n = m.shape[0]
    if n == 1:
        return float(m[0, 0])
    if n == 2:
        return float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
    total = 0.0
    for j in range(n):
        minor = np.delete(m[1:], j, axis=1)
        total += (-1) ** j * m[0, j] * _det_laplace(minor)
    return total


def cofactor_terms(eigvals: Sequence[float], l: int) -> np.ndarray:
    """Terms (-1)^{m+n} r_m^{n-l-1} det^{n,m}(A) of the cofactor sum, A_{ij} = r_j^{i-1}."""
    r = np.asarray(eigvals, dtype=float)
    n = r.size
    if not 0 < l < n:
        raise ValueError(f"l must satisfy 0 < l < {n}, got {l}")
    a = r[None, :] ** np.arange(n)[:, None]
    terms = np.empty(n)
    for m in range(n):
        # 1-based column m+1, removed row n: sign (-1)^{m+1+n}
        minor = np.delete(a[:-1], m, axis=1)
        terms[m] = (-1) ** (m + 1 + n) * r[m] ** (n - l - 1) * _det_laplace(minor)
    return terms


def cofactor_residual(eigvals: Sequence[float], l: int, scaled: bool = False) -> float:
    """|sum of cofactor terms|; with ``scaled`` divided by the largest |term|."""
    t = cofactor_terms(eigvals, l)
    res = abs(math.fsum(t))
    if scaled:
        big = float(np.max(np.abs(t)))
        return res / big if big > 0 else res
    return res


# ---------------------------------------------------------------------------
# curvature probes of C(x, y) = log2(1 + m1 n1 x^2 y / (m1 x + n1 x y + 1))
# ---------------------------------------------------------------------------

class Curvature(str, enum.Enum):
    C_OF_Y = "CofY"
    CH_OF_X = "ChOfX"
    CL_OF_X = "ClOfX"


_EXPECTED_SIGN = {Curvature.C_OF_Y: -1, Curvature.CH_OF_X: -1, Curvature.CL_OF_X: 1}


def capacity_surface(which: Curvature, x, y, m1: float, n1: float):
    r = m1 * n1 * x * x * y / (m1 * x + n1 * x * y + 1.0)
    if which is Curvature.C_OF_Y:
        return np.log2(1.0 + r)
    if which is Curvature.CH_OF_X:
        return np.log2(r)
    return r


def curvature_probe(which, x: float, y: float, p: SystemParams, rho: float,
                    rel_step: float = 1e-3) -> float:
    """Central second difference of the capacity surface in y (CofY) or x."""
    which = Curvature(which)
    if not (x > 0 and y > 0):
        raise ValueError("curvature probes need positive x and y")
    k = SnrCoefficients.of(p, rho)
    if which is Curvature.C_OF_Y:
        h = rel_step * y
        f = lambda t: capacity_surface(which, x, t, k.m1, k.n1)
        v0 = y
    else:
        h = rel_step * x
        f = lambda t: capacity_surface(which, t, y, k.m1, k.n1)
        v0 = x
    return (f(v0 + h) - 2.0 * f(v0) + f(v0 - h)) / (h * h)


def curvature_exact(which, x: float, y: float, p: SystemParams, rho: float) -> float:
    """Analytic second derivative matching :func:`curvature_probe`."""
    which = Curvature(which)
    k = SnrCoefficients.of(p, rho)
    m1, n1 = k.m1, k.n1
    ln2 = math.log(2.0)
    if which is Curvature.C_OF_Y:
        return (-m1 * n1 ** 2 * x ** 3 * (m1 * x + 2.0 * n1 * x * y + 2.0)
                / ((n1 * x * y + 1.0) ** 2 * (m1 * x + n1 * x * y + 1.0) ** 2 * ln2))
    if which is Curvature.CH_OF_X:
        s = n1 * y + m1
        return (-(2.0 + 4.0 * s * x + s * s * x * x)
                / (x * x * (1.0 + s * x) ** 2 * ln2))
    return 2.0 * m1 * n1 * y / (1.0 + m1 * x + n1 * y * x) ** 3


def expected_curvature_sign(which) -> int:
    return _EXPECTED_SIGN[Curvature(which)]


# ---------------------------------------------------------------------------
# Schur orderings by paired Monte Carlo
# ---------------------------------------------------------------------------

class SchurClaim(str, enum.Enum):
    TX_INST = "TxInst"
    RX_INST_HIGH = "RxInstHigh"
    RX_INST_LOW = "RxInstLow"
    TX_STAT = "TxStat"
    RX_STAT_EQUAL_TOP = "RxStatEqualTop"


class Verdict(str, enum.Enum):
    CONSISTENT = "consistent"
    VIOLATED = "violated"
    INCONCLUSIVE = "inconclusive"


# claim -> (varied side, csi mode, sign s such that the claim reads s*(C(va) - C(vb)) >= 0)
_CLAIMS = {
    SchurClaim.TX_INST: ("tx", CsiMode.INSTANTANEOUS, -1),
    SchurClaim.RX_INST_HIGH: ("rx", CsiMode.INSTANTANEOUS, -1),
    SchurClaim.RX_INST_LOW: ("rx", CsiMode.INSTANTANEOUS, +1),
    SchurClaim.TX_STAT: ("tx", CsiMode.STATISTICAL, +1),
    SchurClaim.RX_STAT_EQUAL_TOP: ("rx", CsiMode.STATISTICAL, -1),
}


@dataclass(frozen=True)
class PairedCapacityTask:
    """Per-sample capacities for two eigenvalue configurations on shared draws.

    Channels are drawn directly in the eigenbasis: with g ~ CN(0, I),
    ||h1||^2 = sum lambda_i |g1_i|^2 and the principal energy is lambda_1 |g1_1|^2.
    Columns: C(a), C(b), C(a) - C(b).
    """
    params: SystemParams
    rho: float
    mode: CsiMode
    lam_a: np.ndarray
    sig_a: np.ndarray
    lam_b: np.ndarray
    sig_b: np.ndarray

    def _cap(self, k, e1, e2, lam, sig):
        x = e1 @ lam
        if self.mode is CsiMode.INSTANTANEOUS:
            y = e2 @ sig
            g = snr_form(k, x, x * y, y, x)
        else:
            a = lam[0] * e1[:, 0]
            b = sig[0] * e2[:, 0]
            g = snr_form(k, x, a * b, b, a)
        return 0.5 * np.log2(1.0 + g)

    def __call__(self, rng: np.random.Generator, size: int) -> np.ndarray:
        n = self.lam_a.size
        e1 = np.abs(complex_normal(rng, (size, n))) ** 2
        e2 = np.abs(complex_normal(rng, (size, n))) ** 2
        k = SnrCoefficients.of(self.params, self.rho)
        ca = self._cap(k, e1, e2, self.lam_a, self.sig_a)
        cb = self._cap(k, e1, e2, self.lam_b, self.sig_b)
        return np.column_stack([ca, cb, ca - cb])


@dataclass(frozen=True)
class SchurResult:
    claim: SchurClaim
    verdict: Verdict
    cap_a: Estimate
    cap_b: Estimate
    diff: Estimate
    rho_db: float

    @property
    def margin_sigmas(self) -> float:
        s = _CLAIMS[self.claim][2]
        if self.diff.stderr == 0:
            return 0.0
        return s * self.diff.mean / self.diff.stderr


def _default_fixed(n: int) -> tuple[np.ndarray, np.ndarray]:
    # receive / transmit eigenvalues of the reference exponential model
    return (exp_correlation(n, 0.5).eigen().raw_values.copy(),
            exp_correlation(n, 0.8).eigen().raw_values.copy())


def schur_ordering_check(claim, pair: MajorizationPair, p: SystemParams, rho: float,
                         n: int, spec: StreamSpec, fixed: Sequence[float] | None = None,
                         workers: int = 1) -> SchurResult:
    """Compare MC capacities of the two eigenvalue vectors of ``pair``.

    The pair replaces the transmit (Tx*) or receive (Rx*) eigenvalues; the
    other side uses ``fixed`` (default: the reference exponential model with
    r = 0.5 receive, 0.8 transmit).  Rx-instantaneous claims override ``rho``
    with the 50 dB / -10 dB regime proxies.
    """
    claim = SchurClaim(claim)
    side, mode, sign = _CLAIMS[claim]
    if pair.va.size != p.n:
        raise ValueError("pair length must equal the antenna count")
    if claim is SchurClaim.RX_STAT_EQUAL_TOP and abs(pair.va[0] - pair.vb[0]) > 1e-12 * pair.va[0]:
        raise ValueError("RxStatEqualTop needs equal leading eigenvalues")
    if claim is SchurClaim.RX_INST_HIGH:
        rho = db_to_linear(HIGH_SNR_PROXY_DB)
    elif claim is SchurClaim.RX_INST_LOW:
        rho = db_to_linear(LOW_SNR_PROXY_DB)
    lam0, sig0 = _default_fixed(p.n)
    if fixed is not None:
        fixed = np.sort(np.asarray(fixed, dtype=float))[::-1]
        if side == "tx":
            lam0 = fixed
        else:
            sig0 = fixed
    if side == "tx":
        task = PairedCapacityTask(p, rho, mode, lam0, pair.va, lam0, pair.vb)
    else:
        task = PairedCapacityTask(p, rho, mode, pair.va, sig0, pair.vb, sig0)
    mom = run_parallel(task, n, spec, workers)
    ca, cb, d = (mom.estimate(j, spec.seed) for j in range(3))
    margin = sign * d.mean
    if d.stderr > 0 and margin > SIGMA_MARGIN * d.stderr:
        verdict = Verdict.CONSISTENT
    elif d.stderr > 0 and -margin > SIGMA_MARGIN * d.stderr:
        verdict = Verdict.VIOLATED
    else:
        verdict = Verdict.INCONCLUSIVE
    return SchurResult(claim, verdict, ca, cb, d, 10.0 * math.log10(rho))


# ---------------------------------------------------------------------------
# diversity order
# ---------------------------------------------------------------------------

class Evaluator(str, enum.Enum):
    ANALYTIC = "analytic"
    MONTE_CARLO = "montecarlo"


def loglog_slope(rho_db: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log10(value) against log10(rho) = rho_db / 10."""
    x = np.asarray(rho_db, dtype=float) / 10.0
    y = np.log10(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def diversity_slope(mode, p: SystemParams, corr_r: CorrelationModel, corr_t: CorrelationModel,
                    rho_db_window: Sequence[float], evaluator="analytic", points: int = 6,
                    mc_samples: int = 10_000_000, spec: StreamSpec = StreamSpec(0),
                    workers: int = 1) -> float:
    """Outage diversity estimate: minus the high-SNR log-log slope (returned as the slope)."""
    from .analytic import outage_exact_inst, outage_exact_stat

    mode = CsiMode.parse(mode)
    evaluator = Evaluator(str(evaluator).lower().replace("_", "").replace("-", ""))
    lo, hi = map(float, rho_db_window)
    if hi - lo < 10.0:
        raise ValueError("diversity window must span at least 10 dB")
    if points < 5:
        raise ValueError("need at least 5 grid points")
    grid = np.linspace(lo, hi, points)
    rhos = [db_to_linear(g) for g in grid]
    if evaluator is Evaluator.ANALYTIC:
        er, et = corr_r.eigen(), corr_t.eigen()
        if mode is CsiMode.INSTANTANEOUS:
            vals = [outage_exact_inst(p, er, et, r) for r in rhos]
        elif mode is CsiMode.STATISTICAL:
            vals = [outage_exact_stat(p, er, et, r) for r in rhos]
        else:
            raise ValueError("no analytic outage without CSI; use the Monte Carlo evaluator")
    else:
        est = estimate_grid([mode], "outage", p, corr_r, corr_t, rhos, mc_samples, spec, workers)
        vals = [est[(mode, float(r))].mean for r in rhos]
    vals = np.asarray(vals)
    keep = vals > 0
    if keep.sum() < 2:
        raise ValueError("outage underflow: fewer than two nonzero values in the window")
    return loglog_slope(grid[keep], vals[keep])
