"""Monte Carlo outage / capacity estimation with reproducible parallel streams.

Samples are produced in fixed-size chunks.  Chunk k of stream (seed, s)
draws from a Philox generator keyed by the seed with counter
[0, 0, k, s], so every chunk is an independent, non-overlapping block
regardless of which process evaluates it.  Per-chunk moments are merged in
chunk order, which makes results bit-identical for any worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .channel import (CsiMode, SnrCoefficients, SystemParams, sample_channel,
                      snr_form)
from .corrmat import CorrelationModel

CHUNK = 65536
MIN_SAMPLES = 1000


@dataclass(frozen=True)
class StreamSpec:
    seed: int
    substream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not 0 <= self.substream < 2 ** 64:
            raise ValueError("substream must be a 64-bit unsigned integer")

    def generator(self, chunk: int) -> np.random.Generator:
        key = np.random.SeedSequence(self.seed).generate_state(2, dtype=np.uint64)
        counter = np.array([0, 0, chunk, self.substream], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key, counter=counter))


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    n: int
    seed: int


@dataclass(frozen=True)
class Moments:
    """Count, per-column mean and sum of squared deviations."""
    n: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def of(cls, x: np.ndarray) -> "Moments":
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        mean = x.mean(axis=0)
        return cls(x.shape[0], mean, np.sum((x - mean) ** 2, axis=0))

    def merge(self, other: "Moments") -> "Moments":
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.n / n)
        m2 = self.m2 + other.m2 + delta * delta * (self.n * other.n / n)
        return Moments(n, mean, m2)

    def estimate(self, col: int = 0, seed: int = 0, binomial: bool = False) -> Estimate:
        mean = float(self.mean[col])
        if binomial:
            var = max(mean * (1.0 - mean), 0.0)
        else:
            var = float(self.m2[col]) / (self.n - 1) if self.n > 1 else 0.0
        return Estimate(mean, math.sqrt(var / self.n) if self.n > 1 else 0.0, self.n, seed)


def _run_chunk(args) -> Moments:
    task, spec, chunk, size = args
    return Moments.of(task(spec.generator(chunk), size))


def chunk_sizes(n: int) -> list[int]:
    full, rest = divmod(n, CHUNK)
    return [CHUNK] * full + ([rest] if rest else [])


def run_parallel(task: Callable, n: int, spec: StreamSpec, workers: int = 1) -> Moments:
    """Evaluate ``task(rng, size)`` over ``n`` samples and merge moments.

    ``task`` must be picklable for ``workers > 1`` and return an array of
    per-sample values (one column per statistic).
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if n < 1:
        raise ValueError("need at least one sample")
    jobs = [(task, spec, k, size) for k, size in enumerate(chunk_sizes(n))]
    if workers == 1 or len(jobs) == 1:
        parts = map(_run_chunk, jobs)
        return _reduce(parts)
    per = max(1, len(jobs) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return _reduce(pool.map(_run_chunk, jobs, chunksize=per))


def _reduce(parts) -> Moments:
    it = iter(parts)
    acc = next(it)
    for m in it:
        acc = acc.merge(m)
    return acc


@dataclass(frozen=True)
class SnrTask:
    """Per-sample outage indicators or capacities for several modes and SNRs.

    All modes and SNRs are evaluated on the same channel draws (common
    random numbers).  Column index = mode_index * len(rhos) + rho_index.
    """
    params: SystemParams
    rr_sqrt: np.ndarray
    rt_sqrt: np.ndarray
    ur: np.ndarray
    ut: np.ndarray
    lam1: float
    sig1: float
    modes: tuple
    rhos: tuple
    metric: str = "outage"

    @classmethod
    def build(cls, modes: Sequence, p: SystemParams, corr_r: CorrelationModel,
              corr_t: CorrelationModel, rhos: Sequence[float], metric: str) -> "SnrTask":
        if metric not in ("outage", "capacity"):
            raise ValueError(f"unknown metric {metric!r}")
        if corr_r.n != p.n or corr_t.n != p.n:
            raise ValueError("correlation size does not match antenna count")
        er, et = corr_r.eigen(), corr_t.eigen()
        return cls(p, corr_r.sqrt, corr_t.sqrt, er.basis, et.basis,
                   float(er.raw_values[0]), float(et.raw_values[0]),
                   tuple(CsiMode.parse(m) for m in modes), tuple(float(r) for r in rhos), metric)

    def column(self, mode, rho_index: int) -> int:
        return self.modes.index(CsiMode.parse(mode)) * len(self.rhos) + rho_index

    def __call__(self, rng: np.random.Generator, size: int) -> np.ndarray:
        s = sample_channel(rng, self.rr_sqrt, self.rt_sqrt, self.ur, self.ut, size)
        x = s.h1_norm_sq
        y = s.h2_norm_sq
        need = set(self.modes)
        if CsiMode.STATISTICAL in need:
            a = self.lam1 * np.abs(s.h1_eig[:, 0]) ** 2
            b = self.sig1 * np.abs(s.h2_eig[:, 0]) ** 2
        if CsiMode.NOCSI in need:
            cross = s.cross_sq
        out = np.empty((size, len(self.modes) * len(self.rhos)))
        col = 0
        for mode in self.modes:
            if mode is CsiMode.INSTANTANEOUS:
                pqr = (x * y, y, x)
            elif mode is CsiMode.STATISTICAL:
                pqr = (a * b, b, a)
            else:
                pqr = (cross, y, x)
            for rho in self.rhos:
                g = snr_form(SnrCoefficients.of(self.params, rho), x, *pqr)
                if self.metric == "outage":
                    out[:, col] = g < self.params.gamma_th
                else:
                    out[:, col] = 0.5 * np.log2(1.0 + g)
                col += 1
        return out


def estimate_grid(modes: Sequence, metric: str, p: SystemParams, corr_r: CorrelationModel,
                  corr_t: CorrelationModel, rhos: Sequence[float], n: int,
                  spec: StreamSpec, workers: int = 1) -> dict:
    """Estimates keyed by (CsiMode, rho) from one shared set of channel draws."""
    if n < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {n}")
    task = SnrTask.build(modes, p, corr_r, corr_t, rhos, metric)
    mom = run_parallel(task, n, spec, workers)
    out = {}
    for mode in task.modes:
        for j, rho in enumerate(task.rhos):
            out[(mode, rho)] = mom.estimate(task.column(mode, j), spec.seed,
                                            binomial=(metric == "outage"))
    return out


def estimate_outage(mode, p: SystemParams, corr_r: CorrelationModel, corr_t: CorrelationModel,
                    rho: float, n: int, spec: StreamSpec, workers: int = 1) -> Estimate:
    """Fraction of draws with SNR below gamma_th; binomial standard error."""
    mode = CsiMode.parse(mode)
    return estimate_grid([mode], "outage", p, corr_r, corr_t, [rho], n, spec, workers)[(mode, float(rho))]


def estimate_capacity(mode, p: SystemParams, corr_r: CorrelationModel, corr_t: CorrelationModel,
                      rho: float, n: int, spec: StreamSpec, workers: int = 1) -> Estimate:
    """Mean of 0.5 log2(1 + SNR); standard error from the sample variance."""
    mode = CsiMode.parse(mode)
    return estimate_grid([mode], "capacity", p, corr_r, corr_t, [rho], n, spec, workers)[(mode, float(rho))]


def available_workers() -> int:
    return os.cpu_count() or 1
