"""Wigner ensembles, their spectral and empirical measures, and moments.

Randomness comes from the counter-based Philox generator.  Replica r of
a run with seed s uses the Philox key (s, r); entries are drawn in a
fixed order (diagonal first, then the strict upper triangle row by row),
so every replica can be replayed on its own and replicas never share a
stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from . import linalg
from .oracle import DISTRIBUTIONS, MomentProfile, distribution_moments

SQRT3 = math.sqrt(3.0)
_MASK64 = (1 << 64) - 1


def replica_generator(seed: int, replica: int = 0) -> np.random.Generator:
    """Independent, replayable stream for one replica."""
    return np.random.Generator(np.random.Philox(key=[seed & _MASK64, replica & _MASK64]))


@numba.njit(cache=True, nogil=True)
def _polar_fill(u, out, filled):
    """Consume uniforms on [0,1) pairwise; return the new fill level."""
    n = out.shape[0]
    i = 0
    while i + 1 < u.shape[0] and filled < n:
        x = 2.0 * u[i] - 1.0
        y = 2.0 * u[i + 1] - 1.0
        i += 2
        s = x * x + y * y
        if s >= 1.0 or s == 0.0:
            continue
        f = math.sqrt(-2.0 * math.log(s) / s)
        out[filled] = x * f
        filled += 1
        if filled < n:
            out[filled] = y * f
            filled += 1
    return filled


def polar_normals(gen: np.random.Generator, n: int, out: np.ndarray | None = None) -> np.ndarray:
    """n standard normals by the Marsaglia polar method."""
    out = np.empty(n) if out is None else out[:n]
    filled = 0
    while filled < n:
        # acceptance rate per pair is pi/4
        m = 2 * (int((n - filled) * 0.64) + 8)
        filled = _polar_fill(gen.random(m), out, filled)
    return out


@dataclass(frozen=True)
class EntryDistribution:
    kind: str

    def __post_init__(self):
        if self.kind not in DISTRIBUTIONS:
            raise ValueError(f"unknown entry distribution {self.kind!r}; expected one of {DISTRIBUTIONS}")

    def moments(self, P: int = 16):
        return distribution_moments(self.kind, P)

    def sample(self, gen: np.random.Generator, n: int, out: np.ndarray | None = None) -> np.ndarray:
        out = np.empty(n) if out is None else out[:n]
        if self.kind == "gaussian":
            polar_normals(gen, n, out)
        elif self.kind == "uniform":
            gen.random(out=out)
            out *= 2.0 * SQRT3
            out -= SQRT3
        elif self.kind == "rademacher":
            bits = gen.bit_generator.random_raw(n) & np.uint64(1)
            np.multiply(bits, 2.0, out=out)
            out -= 1.0
        else:
            out[:] = 0.0
        return out


@dataclass(frozen=True)
class EnsembleSpec:
    N: int
    diag: EntryDistribution = field(default_factory=lambda: EntryDistribution("gaussian"))
    offdiag: EntryDistribution = field(default_factory=lambda: EntryDistribution("gaussian"))
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.diag, str):
            object.__setattr__(self, "diag", EntryDistribution(self.diag))
        if isinstance(self.offdiag, str):
            object.__setattr__(self, "offdiag", EntryDistribution(self.offdiag))
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.offdiag.kind == "zero":
            raise ValueError("off-diagonal entries cannot be identically zero")
        if not 0 <= self.seed <= _MASK64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def profile(self, P: int = 16) -> MomentProfile:
        return MomentProfile.from_kinds(self.offdiag.kind, self.diag.kind, P)

    def with_N(self, N: int) -> "EnsembleSpec":
        return EnsembleSpec(N, self.diag, self.offdiag, self.seed)

    def to_dict(self) -> dict:
        return {"N": self.N, "diag": self.diag.kind, "offdiag": self.offdiag.kind, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleSpec":
        return cls(int(d["N"]), EntryDistribution(d.get("diag", "gaussian")),
                   EntryDistribution(d.get("offdiag", "gaussian")), int(d.get("seed", 0)))


@numba.njit(cache=True, nogil=True)
def _scatter_symmetric(diag, upper, X, scale):
    N = X.shape[0]
    t = 0
    for i in range(N):
        X[i, i] = diag[i] * scale
        for j in range(i + 1, N):
            v = upper[t] * scale
            X[i, j] = v
            X[j, i] = v
            t += 1


def sample_wigner(spec: EnsembleSpec, replica: int = 0, gen: np.random.Generator | None = None,
                  out: np.ndarray | None = None, scratch: np.ndarray | None = None) -> np.ndarray:
    """Draw X_N with X(i,j) = X(j,i) = xi_ij / sqrt(N).

    ``out`` (N x N) and ``scratch`` (at least N(N+1)/2 floats) are optional
    buffers reused across replicas.
    """
    N = spec.N
    if gen is None:
        gen = replica_generator(spec.seed, replica)
    n_up = N * (N - 1) // 2
    if scratch is None:
        scratch = np.empty(N + n_up)
    diag = spec.diag.sample(gen, N, scratch[:N])
    upper = spec.offdiag.sample(gen, n_up, scratch[N:N + n_up])
    X = np.empty((N, N)) if out is None else out
    _scatter_symmetric(diag, upper, X, 1.0 / math.sqrt(N))
    return X


@dataclass(frozen=True)
class AtomicMeasure:
    """Finitely supported probability measure with ascending atoms."""

    locations: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.locations, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if x.shape != w.shape or x.ndim != 1:
            raise ValueError("locations and weights must be matching 1-d arrays")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-8:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        if np.any(np.diff(x) < 0):
            raise ValueError("locations must be sorted ascending")
        object.__setattr__(self, "locations", x)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return len(self.locations)

    def moment(self, k: int) -> float:
        return float(np.sum(self.weights * self.locations ** k))

    def moments(self, K: int) -> np.ndarray:
        return np.array([self.moment(k) for k in range(1, K + 1)])

    def cdf(self, x):
        idx = np.searchsorted(self.locations, np.asarray(x, dtype=float), side="right")
        c = np.concatenate([[0.0], np.cumsum(self.weights)])
        return c[idx]

    @classmethod
    def point_mass(cls, x: float = 0.0) -> "AtomicMeasure":
        return cls(np.array([x]), np.array([1.0]))


def _merged(locations: np.ndarray, weights: np.ndarray) -> AtomicMeasure:
    # spectral norm of a symmetric matrix = largest |eigenvalue|
    scale = float(np.max(np.abs(locations)))
    x, w = linalg.merge_atoms(locations, weights, max(scale, 1e-300))
    return AtomicMeasure(x, w / w.sum())


def spectral_measure(A, method: str = "auto", decomposition: linalg.EigenDecomposition | None = None) -> AtomicMeasure:
    """Spectral measure of (A, e_1): atoms (lambda_j, (v_j, e_1)^2)."""
    A = linalg.as_symmetric(A)
    dec = decomposition or linalg.eigh(A, method)
    return _merged(dec.eigenvalues, dec.eigenvectors[0] ** 2)


def empirical_measure(A, method: str = "auto", decomposition: linalg.EigenDecomposition | None = None) -> AtomicMeasure:
    """Uniform measure on the eigenvalues of A."""
    A = linalg.as_symmetric(A)
    dec = decomposition or linalg.eigh(A, method)
    n = len(dec.eigenvalues)
    return _merged(dec.eigenvalues, np.full(n, 1.0 / n))


def spectral_moments(A, K: int) -> np.ndarray:
    """X^k(1,1) for k = 1..K without diagonalizing."""
    return linalg.moment_via_power(A, K)
