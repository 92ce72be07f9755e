"""System parameters, correlated Rayleigh channel sampling and SNR laws.

Everything is normalised by the noise power, so rho = Ps/N0 is the only
power knob.  All three end-to-end SNRs share the form

    gamma = c * X * P / (n1 * X * Q + m1 * R + 1),   X = ||h1||^2

with (P, Q, R) = (X Y, Y, X) for instantaneous CSI, (A B, B, A) for
statistical CSI (A, B the energies along the principal eigenvectors) and
(|h2 h1|^2, Y, X) without CSI.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .corrmat import EigenSystem


class CsiMode(str, enum.Enum):
    INSTANTANEOUS = "instantaneous"
    STATISTICAL = "statistical"
    NOCSI = "nocsi"

    @classmethod
    def parse(cls, s: "str | CsiMode") -> "CsiMode":
        if isinstance(s, cls):
            return s
        key = str(s).strip().lower().replace("-", "").replace("_", "")
        aliases = {"inst": "instantaneous", "stat": "statistical", "none": "nocsi"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown CSI mode {s!r}") from None


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0) if np.ndim(db) else 10.0 ** (float(db) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class SystemParams:
    """Link constants.  ``gamma_th`` is linear; use :meth:`from_db` for dB."""
    eta: float = 0.8
    theta: float = 0.5
    tau: float = 2.5
    d1: float = 3.0
    d2: float = 3.0
    n: int = 3
    gamma_th: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must be in (0, 1], got {self.eta!r}")
        if not 0.0 < self.theta < 1.0:
            raise ValueError(f"theta must be in (0, 1), got {self.theta!r}")
        if not self.tau >= 0.0:
            raise ValueError(f"tau must be >= 0, got {self.tau!r}")
        if not (self.d1 > 0.0 and self.d2 > 0.0):
            raise ValueError("distances must be positive")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"antenna count must be a positive integer, got {self.n!r}")
        if not self.gamma_th > 0.0:
            raise ValueError(f"gamma_th must be positive (linear), got {self.gamma_th!r}")

    @classmethod
    def from_db(cls, gamma_th_db: float = 0.0, **kw) -> "SystemParams":
        return cls(gamma_th=db_to_linear(gamma_th_db), **kw)

    @property
    def gamma_th_db(self) -> float:
        return 10.0 * math.log10(self.gamma_th)

    @property
    def D1(self) -> float:
        return self.d1 ** self.tau

    @property
    def D2(self) -> float:
        return self.d2 ** self.tau

    def with_(self, **kw) -> "SystemParams":
        return replace(self, **kw)


@dataclass(frozen=True)
class SnrCoefficients:
    """c = eta th (1-th) rho^2 / (D1^2 D2), n1 = eta th rho/(D1 D2), m1 = (1-th) rho / D1."""
    c: float
    n1: float
    m1: float

    @classmethod
    def of(cls, p: SystemParams, rho: float) -> "SnrCoefficients":
        n1 = p.eta * p.theta * rho / (p.D1 * p.D2)
        m1 = (1.0 - p.theta) * rho / p.D1
        return cls(n1 * m1, n1, m1)


def snr_form(k: SnrCoefficients, x, p_, q_, r_):
    """c X P / (n1 X Q + m1 R + 1), vectorised."""
    return k.c * x * p_ / (k.n1 * x * q_ + k.m1 * r_ + 1.0)


@dataclass(frozen=True)
class ChannelSample:
    """One (or a batch of) fading realisations.

    Arrays carry the antenna index last, so a batch has shape (B, N).
    ``h1_eig`` = U_r^H h_w1 and ``h2_eig`` = h_w2 U_t.
    """
    h1: np.ndarray
    h2: np.ndarray
    h1_eig: np.ndarray
    h2_eig: np.ndarray

    @property
    def h1_norm_sq(self) -> np.ndarray:
        return np.sum(self.h1.real ** 2 + self.h1.imag ** 2, axis=-1)

    @property
    def h2_norm_sq(self) -> np.ndarray:
        return np.sum(self.h2.real ** 2 + self.h2.imag ** 2, axis=-1)

    @property
    def cross_sq(self) -> np.ndarray:
        """|h2 h1|^2 (row vector times column vector, no conjugation)."""
        z = np.sum(self.h2 * self.h1, axis=-1)
        return z.real ** 2 + z.imag ** 2


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """CN(0, 1) entries: independent real and imaginary parts of variance 1/2."""
    z = rng.standard_normal(tuple(shape) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5)


def sample_channel(rng: np.random.Generator, rr_sqrt, rt_sqrt, ur, ut,
                   size: int | None = None) -> ChannelSample:
    """Draw h1 = Rr^{1/2} h_w1 and h2 = h_w2 Rt^{1/2}.

    With ``size`` given, returns a batch of ``size`` realisations.
    """
    rr_sqrt = np.asarray(rr_sqrt)
    n = rr_sqrt.shape[0]
    shape = (n,) if size is None else (size, n)
    hw1 = complex_normal(rng, shape)
    hw2 = complex_normal(rng, shape)
    h1 = hw1 @ rr_sqrt.T
    h2 = hw2 @ np.asarray(rt_sqrt)
    return ChannelSample(h1, h2, hw1 @ np.asarray(ur).conj(), hw2 @ np.asarray(ut))


def relay_gain_power(p: SystemParams, h1_norm_sq, rho: float):
    """omega^2 after dividing through by N0."""
    g = rho / p.D1 * np.asarray(h1_norm_sq, dtype=float)
    return p.eta * p.theta * g / ((1.0 - p.theta) * g + 1.0)


def snr_instantaneous(p: SystemParams, s: ChannelSample, rho: float):
    k = SnrCoefficients.of(p, rho)
    x = s.h1_norm_sq
    y = s.h2_norm_sq
    return snr_form(k, x, x * y, y, x)


def snr_hops(p: SystemParams, s: ChannelSample, rho: float):
    """Per-hop SNRs gamma1 = m1 X and gamma2 = n1 X Y of the product rewrite."""
    k = SnrCoefficients.of(p, rho)
    x = s.h1_norm_sq
    return k.m1 * x, k.n1 * x * s.h2_norm_sq


def principal_energies(s: ChannelSample, eig_r: EigenSystem, eig_t: EigenSystem):
    """A = lambda1 |h~_w11|^2 and B = sigma1 |h~_w21|^2."""
    a = eig_r.raw_values[0] * np.abs(s.h1_eig[..., 0]) ** 2
    b = eig_t.raw_values[0] * np.abs(s.h2_eig[..., 0]) ** 2
    return a, b


def snr_statistical(p: SystemParams, s: ChannelSample, eig_r: EigenSystem,
                    eig_t: EigenSystem, rho: float):
    k = SnrCoefficients.of(p, rho)
    a, b = principal_energies(s, eig_r, eig_t)
    return snr_form(k, s.h1_norm_sq, a * b, b, a)


def snr_no_csi(p: SystemParams, s: ChannelSample, rho: float):
    k = SnrCoefficients.of(p, rho)
    x = s.h1_norm_sq
    return snr_form(k, x, s.cross_sq, s.h2_norm_sq, x)


def snr(mode: CsiMode, p: SystemParams, s: ChannelSample, eig_r: EigenSystem,
        eig_t: EigenSystem, rho: float):
    mode = CsiMode.parse(mode)
    if mode is CsiMode.INSTANTANEOUS:
        return snr_instantaneous(p, s, rho)
    if mode is CsiMode.STATISTICAL:
        return snr_statistical(p, s, eig_r, eig_t, rho)
    return snr_no_csi(p, s, rho)
