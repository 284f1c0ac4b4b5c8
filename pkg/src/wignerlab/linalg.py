"""Dense symmetric kernels: power moments, Jacobi eigensolver, semicircle."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

JACOBI_MAX_N = 4096
JACOBI_AUTO_N = 160


class ConvergenceError(RuntimeError):
    pass


def as_symmetric(A, check: bool = True) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if check:
        if not np.all(np.isfinite(A)):
            raise ValueError("matrix has non-finite entries")
        if not np.array_equal(A, A.T):
            raise ValueError("matrix is not exactly symmetric")
    return A


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int = 0

    def reconstruct(self) -> np.ndarray:
        Q = self.eigenvectors
        return (Q * self.eigenvalues) @ Q.T


def moment_via_power(A, K: int) -> np.ndarray:
    """[A^k(1,1) for k = 1..K] from the Krylov vectors u_j = A^j e_1.

    A^k(1,1) is read as the inner product u_ceil(k/2) . u_floor(k/2),
    which costs ceil(K/2) matrix-vector products.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    A = np.asarray(A, dtype=float)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    half = (K + 1) // 2
    us = [np.zeros(A.shape[0])]
    us[0][0] = 1.0
    for _ in range(half):
        us.append(A @ us[-1])
    return np.array([us[(k + 1) // 2] @ us[k // 2] for k in range(1, K + 1)])


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Disjoint index pairs covering every (p, q) once per sweep.

    Circle-method tournament on an even number of players; a phantom
    player pads odd n and its pairs are dropped.
    """
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                ps.append(min(a, b))
                qs.append(max(a, b))
        rounds.append((np.array(ps, dtype=np.intp), np.array(qs, dtype=np.intp)))
        players = [players[0], players[-1], *players[1:-1]]
    return rounds


def jacobi_eigh(A, tol: float = 1e-12, max_sweeps: int = 60) -> EigenDecomposition:
    """Cyclic Jacobi eigendecomposition of a real symmetric matrix.

    Each sweep visits all off-diagonal pairs in round-robin order; the
    rotations of one round act on disjoint index pairs, so they commute
    and are applied together.  Stops when the off-diagonal Frobenius mass
    is at most ``tol * ||A||_F``.  Eigenpairs are returned ascending.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A = as_symmetric(A)
    n = A.shape[0]
    if n > JACOBI_MAX_N:
        raise ValueError(f"jacobi_eigh supports N <= {JACOBI_MAX_N}")
    a = A.copy()
    V = np.eye(n)
    norm = np.linalg.norm(A)
    if n == 1 or norm == 0.0:
        return EigenDecomposition(np.diag(a).copy(), V, 0)
    rounds = _round_robin(n)
    target = tol * norm
    negligible = 1e-17 * norm / n

    def off_mass() -> float:
        d = np.diag(a).copy()
        np.fill_diagonal(a, 0.0)
        mass = float(np.linalg.norm(a))
        np.fill_diagonal(a, d)
        return mass

    for sweep in range(1, max_sweeps + 1):
        if off_mass() <= target:
            return _sorted(a, V, sweep - 1)
        for p, q in rounds:
            apq = a[p, q]
            active = np.abs(apq) > negligible
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            app, aqq = a[p, p], a[q, q]
            theta = (aqq - app) / (2.0 * apq)
            big = np.abs(theta) > 1e150
            th = np.where(big, 1.0, theta)
            t = np.where(big, 0.5 / np.where(big, theta, 1.0),
                         np.sign(th) / (np.abs(th) + np.sqrt(th * th + 1.0)))
            t[theta == 0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            # rows then columns; pairs are disjoint so one gather suffices
            rp, rq = a[p, :].copy(), a[q, :].copy()
            a[p, :] = c[:, None] * rp - s[:, None] * rq
            a[q, :] = s[:, None] * rp + c[:, None] * rq
            cp, cq = a[:, p].copy(), a[:, q].copy()
            a[:, p] = cp * c - cq * s
            a[:, q] = cp * s + cq * c
            a[p, q] = 0.0
            a[q, p] = 0.0
            vp, vq = V[:, p].copy(), V[:, q].copy()
            V[:, p] = vp * c - vq * s
            V[:, q] = vp * s + vq * c
    if off_mass() <= target:
        return _sorted(a, V, max_sweeps)
    raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")


def _sorted(a: np.ndarray, V: np.ndarray, sweeps: int) -> EigenDecomposition:
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return EigenDecomposition(w[order], V[:, order].copy(), sweeps)


def eigh(A, method: str = "auto", tol: float = 1e-12) -> EigenDecomposition:
    """Eigendecomposition by Jacobi or LAPACK.

    ``auto`` uses Jacobi up to ``JACOBI_AUTO_N`` and LAPACK above it.
    """
    A = as_symmetric(A)
    if method == "auto":
        method = "jacobi" if A.shape[0] <= JACOBI_AUTO_N else "lapack"
    if method == "jacobi":
        return jacobi_eigh(A, tol)
    if method == "lapack":
        w, V = np.linalg.eigh(A)
        return EigenDecomposition(w, V, 0)
    raise ValueError(f"unknown eigen method {method!r}")


def merge_atoms(locations: np.ndarray, weights: np.ndarray, scale: float,
                rel: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Merge sorted locations closer than ``rel * scale``, adding weights."""
    if len(locations) == 0:
        return locations, weights
    gap = rel * scale
    locs, ws = [locations[0]], [weights[0]]
    for x, w in zip(locations[1:], weights[1:]):
        if x - locs[-1] <= gap:
            ws[-1] += w
        else:
            locs.append(x)
            ws.append(w)
    return np.array(locs), np.array(ws)


# -- semicircle --------------------------------------------------------------


def semicircle_pdf(x):
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) <= 2.0
    out = np.where(inside, np.sqrt(np.clip(4.0 - x * x, 0.0, None)) / (2.0 * np.pi), 0.0)
    return out if out.ndim else float(out)


def semicircle_cdf(x):
    x = np.asarray(x, dtype=float)
    y = np.clip(x, -2.0, 2.0)
    out = 0.5 + y * np.sqrt(4.0 - y * y) / (4.0 * np.pi) + np.arcsin(y / 2.0) / np.pi
    out = np.clip(out, 0.0, 1.0)
    out = np.where(x <= -2.0, 0.0, np.where(x >= 2.0, 1.0, out))
    return out if out.ndim else float(out)


def semicircle_quantile(p):
    """Inverse of :func:`semicircle_cdf` by bisection (vectorized)."""
    p = np.asarray(p, dtype=float)
    lo = np.full(p.shape, -2.0)
    hi = np.full(p.shape, 2.0)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        below = semicircle_cdf(mid) < p
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def ks_distance(mu, cdf: Callable) -> float:
    """Kolmogorov distance between an atomic measure and a cdf.

    ``mu`` needs ``locations`` (ascending) and ``weights``.  The supremum
    is attained at an atom, on one side of its jump.  The reference is
    also read just left of each atom, so a step cdf sharing mu's atoms
    (e.g. mu's own) is compared correctly; for a continuous cdf this is
    the usual two-sided formula.
    """
    x = np.asarray(mu.locations, dtype=float)
    w = np.asarray(mu.weights, dtype=float)
    if abs(w.sum() - 1.0) > 1e-8:
        raise ValueError(f"measure is not normalized (total weight {w.sum()!r})")
    F_right = np.cumsum(w)
    F_left = F_right - w
    G = np.asarray(cdf(x), dtype=float)
    G_left = np.asarray(cdf(np.nextafter(x, -np.inf)), dtype=float)
    return float(max(np.max(np.abs(F_right - G)), np.max(np.abs(F_left - G_left))))
