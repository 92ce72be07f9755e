"""Sums of independent exponentials with distinct means (hypoexponential law).

||h||^2 = sum_i lambda_i |g_i|^2 with g ~ CN(0, I), so its density and
tail are signed mixtures of exponentials with partial-fraction weights

    w_i^(k) = lambda_i^k / prod_{j != i} (lambda_i - lambda_j).

Close to the origin (or when the weights are huge because eigenvalues
nearly coincide) the mixture cancels catastrophically, so the CDF and
PDF switch to a power series in x built from complete homogeneous
symmetric polynomials of the rates.
"""

from __future__ import annotations

import math

import numpy as np

from ..corrmat import EigenSystem


def eigvals_of(e) -> np.ndarray:
    """Guarded eigenvalue vector from an EigenSystem or a plain sequence."""
    if isinstance(e, EigenSystem):
        return np.asarray(e.values, dtype=float)
    v = np.atleast_1d(np.asarray(e, dtype=float))
    if v.ndim != 1 or v.size == 0:
        raise ValueError("eigenvalues must be a non-empty vector")
    return v


def partial_fraction_weights(values, k: int) -> np.ndarray:
    """w_i = lambda_i^k / prod_{j != i} (lambda_i - lambda_j).

    Raises ValueError on repeated values; callers are expected to apply the
    distinctness guard first.
    """
    v = eigvals_of(values)
    diff = v[:, None] - v[None, :]
    np.fill_diagonal(diff, 1.0)
    if np.any(diff == 0.0):
        raise ValueError("partial-fraction weights need distinct eigenvalues")
    return v ** k / np.prod(diff, axis=1)


def _complete_homogeneous(mu: np.ndarray, m_max: int) -> np.ndarray:
    # h_m(mu_1..mu_n) for m = 0..m_max via h^{(j)}_m = h^{(j-1)}_m + mu_j h^{(j)}_{m-1}
    h = np.zeros(m_max + 1)
    h[0] = 1.0
    for u in mu:
        for m in range(1, m_max + 1):
            h[m] += u * h[m - 1]
    return h


class Hypoexponential:
    """Law of sum_i lambda_i E_i, E_i iid unit exponentials, lambda distinct."""

    def __init__(self, values):
        v = eigvals_of(values)
        if np.any(v <= 0):
            raise ValueError("means must be positive")
        self.values = v
        self.n = v.size
        self.mu = 1.0 / v
        self.w_tail = partial_fraction_weights(v, self.n - 1)
        self.w_pdf = partial_fraction_weights(v, self.n - 2)
        mu_max = self.mu.max()
        cond = float(np.sum(np.abs(self.w_tail)))
        # series wins while e^{x mu_max} stays below the cancellation factor
        # of the partial-fraction sum
        self._switch = max(0.5, math.log(max(cond, 1.0)) / (1.0 + self.mu.min() / mu_max)) / mu_max
        m_max = int(math.ceil(self._switch * mu_max * 3.0 + 40))
        self._h = _complete_homogeneous(self.mu, m_max)
        self._prod_mu = float(np.prod(self.mu))

    @property
    def mean(self) -> float:
        return float(self.values.sum())

    def _series(self, x: np.ndarray, shift: int) -> np.ndarray:
        # sum_m (-x)^m h_m / (n + m - shift)!  times x^{n-shift} prod(mu)
        n = self.n
        total = np.zeros_like(x)
        term_x = np.ones_like(x)
        fact = float(math.factorial(n - shift))
        for m in range(self._h.size):
            if m > 0:
                term_x = term_x * (-x)
                fact *= n + m - shift
            t = term_x * (self._h[m] / fact)
            total += t
            if m > 4 and np.all(np.abs(t) <= 1e-17 * np.abs(total)):
                break
        return total * x ** (n - shift) * self._prod_mu

    def _eval(self, x, small_fn, big_fn):
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x).ravel()
        out = np.empty_like(flat)
        small = flat <= self._switch
        if np.any(small):
            out[small] = small_fn(np.maximum(flat[small], 0.0))
        if np.any(~small):
            out[~small] = big_fn(flat[~small])
        out = out.reshape(x.shape)
        return float(out) if out.ndim == 0 else out

    def _mix(self, w, x):
        return np.exp(-np.multiply.outer(x, self.mu)) @ w

    def pdf(self, x):
        """Density; zero for x < 0."""
        x = np.asarray(x, dtype=float)
        r = self._eval(x, lambda s: self._series(s, 1), lambda s: self._mix(self.w_pdf, s))
        return np.where(x < 0, 0.0, r) if np.ndim(r) else (0.0 if x < 0 else r)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        r = self._eval(x, lambda s: self._series(s, 0), lambda s: 1.0 - self._mix(self.w_tail, s))
        return np.where(x < 0, 0.0, r) if np.ndim(r) else (0.0 if x < 0 else r)

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        r = self._eval(x, lambda s: 1.0 - self._series(s, 0), lambda s: self._mix(self.w_tail, s))
        return np.where(x < 0, 1.0, r) if np.ndim(r) else (1.0 if x < 0 else r)


def pdf_h1_sq(x, eigvals):
    """Density of ||h1||^2 = sum_i w_i^(N-2) exp(-x / lambda_i)."""
    return Hypoexponential(eigvals).pdf(x)


def surv_h2_sq(x, eigvals):
    """Survival P(||h2||^2 > x) = sum_m w_m^(N-1) exp(-x / sigma_m)."""
    return Hypoexponential(eigvals).sf(x)
