"""Antenna correlation matrices: construction, validation, eigensystems.

Eigen decomposition is a cyclic complex Jacobi sweep, adequate for the
small (N <= 16) matrices used here.  Repeated eigenvalues are spread
apart by a relative gap so that the partial-fraction closed forms stay
finite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

DEFAULT_DISTINCT_TOL = 1e-6


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def jacobi_eigh(a: np.ndarray, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and eigenvectors of a Hermitian matrix by cyclic Jacobi.

    Each rotation first removes the phase of the off-diagonal pivot and then
    applies the real symmetric Jacobi rotation to the 2x2 block.

    Returns
    -------
    values : ndarray, shape (n,)
        Unsorted real eigenvalues.
    vectors : ndarray, shape (n, n)
        Unitary matrix whose columns are the eigenvectors.
    """
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    u = np.eye(n, dtype=complex)
    if n == 1:
        return a.real.diagonal().copy(), u
    scale = np.max(np.abs(a))
    if scale == 0.0:
        return np.zeros(n), u
    tiny = (np.finfo(float).eps * scale) ** 2
    upper = np.triu_indices(n, 1)
    for _ in range(max_sweeps):
        off = np.sum(np.abs(a[upper]) ** 2)
        if off <= tiny:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= np.finfo(float).eps * 1e-3 * scale:
                    continue
                phase = apq / mag
                app = a[p, p].real
                aqq = a[q, q].real
                theta = 0.5 * (aqq - app) / mag
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # V = diag(1, conj(phase)) @ [[c, s], [-s, c]]
                v = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ v
                a[idx, :] = v.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                u[:, idx] = u[:, idx] @ v
    else:
        raise ArithmeticError("Jacobi eigen solver did not converge")
    return a.real.diagonal().copy(), u


def _fix_phase(u: np.ndarray) -> np.ndarray:
    # first non-negligible component of each column made real-positive
    u = u.copy()
    for k in range(u.shape[1]):
        col = u[:, k]
        big = np.flatnonzero(np.abs(col) > 1e-12 * np.max(np.abs(col)))
        z = col[big[0]]
        u[:, k] = col * (np.conj(z) / abs(z))
        u[big[0], k] = abs(z)
    return u


def spread_distinct(values: np.ndarray, tol: float) -> np.ndarray:
    """Spread near-equal entries of a descending vector, keeping the sum.

    Every cluster of adjacent values closer than ``tol * values[0]`` is
    replaced by an evenly spaced run centred on the cluster mean with
    exactly that gap.  Repeats until all gaps are large enough.
    """
    v = np.asarray(values, dtype=float).copy()
    if tol <= 0 or v.size < 2:
        return v
    for _ in range(4 * v.size + 10):
        gap = tol * v[0] * (1.0 + 1e-9)
        if np.all(-np.diff(v) >= tol * v[0]):
            return v
        out = v.copy()
        i = 0
        while i < v.size:
            j = i
            while j + 1 < v.size and v[j] - v[j + 1] < gap:
                j += 1
            if j > i:
                k = j - i + 1
                m = v[i:j + 1].mean()
                out[i:j + 1] = m + gap * ((k - 1) / 2.0 - np.arange(k))
            i = j + 1
        v = out
    raise ArithmeticError("could not separate eigenvalues")


@dataclass(frozen=True)
class EigenSystem:
    """Descending eigenvalues with a unitary eigenvector basis.

    ``values`` are the distinctness-guarded eigenvalues used by the closed
    forms; ``raw_values`` are the solver output, used for reconstruction
    and matrix square roots.
    """
    values: np.ndarray
    basis: np.ndarray
    raw_values: np.ndarray
    distinct_tol: float = DEFAULT_DISTINCT_TOL

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(np.asarray(self.values, dtype=float)))
        object.__setattr__(self, "basis", _readonly(np.asarray(self.basis, dtype=complex)))
        object.__setattr__(self, "raw_values", _readonly(np.asarray(self.raw_values, dtype=float)))

    @property
    def n(self) -> int:
        return self.values.size

    def reconstruct(self) -> np.ndarray:
        u = self.basis
        return (u * self.raw_values) @ u.conj().T

    @classmethod
    def from_values(cls, values, distinct_tol: float = DEFAULT_DISTINCT_TOL) -> "EigenSystem":
        """Eigensystem of diag(values) — convenient for majorization sweeps."""
        v = np.sort(np.asarray(values, dtype=float))[::-1]
        if np.any(v <= 0):
            raise ValueError("eigenvalues must be positive")
        return cls(spread_distinct(v, distinct_tol), np.eye(v.size, dtype=complex), v,
                   distinct_tol)


@dataclass(frozen=True, eq=False)
class CorrelationModel:
    """Hermitian positive-definite unit-diagonal correlation matrix."""
    entries: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ValueError(f"correlation matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("correlation matrix has non-finite entries")
        if not np.array_equal(m, m.conj().T):
            raise ValueError("correlation matrix is not Hermitian")
        if np.max(np.abs(m.diagonal() - 1.0)) > 1e-12:
            raise ValueError("correlation matrix must have unit diagonal")
        object.__setattr__(self, "entries", _readonly(m))
        object.__setattr__(self, "n", m.shape[0])
        if self.min_raw_eigenvalue <= 1e-12 * self.n:
            raise ValueError("correlation matrix is not positive definite")

    @cached_property
    def _jacobi(self) -> tuple[np.ndarray, np.ndarray]:
        vals, vecs = jacobi_eigh(self.entries)
        order = np.argsort(-vals, kind="stable")
        return vals[order], _fix_phase(vecs[:, order])

    @property
    def min_raw_eigenvalue(self) -> float:
        return float(self._jacobi[0][-1])

    def eigen(self, distinct_tol: float = DEFAULT_DISTINCT_TOL) -> EigenSystem:
        return eigendecompose(self, distinct_tol)

    @cached_property
    def sqrt(self) -> np.ndarray:
        return sqrt_matrix(self.eigen())


def exp_correlation(n: int, r: float) -> CorrelationModel:
    """Exponential correlation model, entry (i, j) = r^|i-j|."""
    if int(n) != n or n < 1:
        raise ValueError(f"antenna count must be a positive integer, got {n!r}")
    if not 0.0 <= r < 1.0:
        raise ValueError(f"correlation coefficient must lie in [0, 1), got {r!r}")
    idx = np.arange(int(n))
    return CorrelationModel(float(r) ** np.abs(idx[:, None] - idx[None, :]))


def eigendecompose(r: CorrelationModel,
                   distinct_tol: float = DEFAULT_DISTINCT_TOL) -> EigenSystem:
    """Descending eigensystem of ``r`` with the distinctness guard applied."""
    if distinct_tol < 0:
        raise ValueError("distinct_tol must be non-negative")
    vals, vecs = r._jacobi
    if vals[-1] <= 0:
        raise ValueError("correlation matrix is not positive definite")
    return EigenSystem(spread_distinct(vals, distinct_tol), vecs, vals, distinct_tol)


def sqrt_matrix(e: EigenSystem) -> np.ndarray:
    """Hermitian square root U diag(sqrt(raw values)) U^H."""
    if np.any(e.raw_values <= 0):
        raise ValueError("square root needs positive eigenvalues")
    u = e.basis
    m = (u * np.sqrt(e.raw_values)) @ u.conj().T
    return 0.5 * (m + m.conj().T)


def principal_weight(e: EigenSystem) -> np.ndarray:
    """Unit eigenvector of the largest eigenvalue (first nonzero entry real > 0)."""
    if e.n > 1 and not e.values[0] > e.values[1]:
        raise ValueError("largest eigenvalue is not strictly dominant")
    v = np.array(e.basis[:, 0])
    return v / np.linalg.norm(v)
