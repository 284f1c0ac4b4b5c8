"""Exact limiting quantities and brute-force finite-N expectations.

Everything here is driven by a :class:`MomentProfile`, the moment
sequences of the diagonal and off-diagonal matrix entries.  Limits are
computed from class counts produced by :mod:`wignerlab.combinatorics`;
finite-N expectations are computed by summing over every N-word.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import combinatorics as comb
from .combinatorics import PairKind, passage_counts

Number = Fraction | float

FINITE_N_BUDGET = 400_000

DISTRIBUTIONS = ("gaussian", "rademacher", "uniform", "zero")
PROFILES = ("gaussian", "rademacher", "uniform")


class BudgetError(ValueError):
    """Raised when a brute-force sum would exceed its word budget."""


def distribution_moments(kind: str, P: int) -> tuple[Fraction, ...]:
    """Moments E[x^p], p = 1..P, of a named unit-variance distribution.

    ``uniform`` is the uniform law on [-sqrt 3, sqrt 3]; its even moments
    3^(p/2)/(p+1) are rational.  ``zero`` is the point mass at 0.
    """
    out = []
    for p in range(1, P + 1):
        if kind == "zero" or p % 2:
            out.append(Fraction(0))
        elif kind == "gaussian":
            out.append(Fraction(math.prod(range(p - 1, 0, -2))))
        elif kind == "rademacher":
            out.append(Fraction(1))
        elif kind == "uniform":
            out.append(Fraction(3 ** (p // 2), p + 1))
        else:
            raise ValueError(f"unknown distribution {kind!r}; expected one of {DISTRIBUTIONS}")
    return tuple(out)


@dataclass(frozen=True)
class MomentProfile:
    """Moment sequences m_p = E[xi_12^p] and d_p = E[xi_11^p], p = 1..P."""

    offdiag_moments: tuple[Number, ...]
    diag_moments: tuple[Number, ...]
    name: str = "custom"

    def __post_init__(self):
        m, d = self.offdiag_moments, self.diag_moments
        if len(m) < 4 or len(d) < 2:
            raise ValueError("profile needs off-diagonal moments to order 4 and diagonal to order 2")
        if m[0] != 0 or m[1] != 1:
            raise ValueError("off-diagonal entries must have mean 0 and variance 1")
        if d[0] != 0:
            raise ValueError("diagonal entries must have mean 0")
        if m[3] < 1:
            raise ValueError("fourth moment of a unit-variance law is at least 1")
        if not all(math.isfinite(float(x)) for x in (*m, *d)):
            raise ValueError("moments must be finite")

    @property
    def P(self) -> int:
        return min(len(self.offdiag_moments), len(self.diag_moments))

    @property
    def exact(self) -> bool:
        return all(isinstance(x, Rational) for x in (*self.offdiag_moments, *self.diag_moments))

    def m(self, p: int) -> Number:
        if p == 0:
            return Fraction(1)
        if p > len(self.offdiag_moments):
            raise ValueError(f"profile {self.name} has off-diagonal moments only to order {len(self.offdiag_moments)}")
        return self.offdiag_moments[p - 1]

    def d(self, p: int) -> Number:
        if p == 0:
            return Fraction(1)
        if p > len(self.diag_moments):
            raise ValueError(f"profile {self.name} has diagonal moments only to order {len(self.diag_moments)}")
        return self.diag_moments[p - 1]

    @property
    def m4(self) -> Number:
        return self.m(4)

    @property
    def d2(self) -> Number:
        return self.d(2)

    @property
    def diag_gaussian(self) -> bool:
        """True when the diagonal moments match a centered normal law (or 0)."""
        d2 = self.d(2)
        if d2 == 0:
            return all(x == 0 for x in self.diag_moments)
        return all(self.d(p) == (0 if p % 2 else d2 ** (p // 2) * math.prod(range(p - 1, 0, -2)))
                   for p in range(1, self.P + 1))

    @classmethod
    def from_kinds(cls, offdiag: str, diag: str | None = None, P: int = 16) -> "MomentProfile":
        diag = offdiag if diag is None else diag
        if offdiag == "zero":
            raise ValueError("off-diagonal entries cannot be identically zero")
        name = offdiag if diag == offdiag else f"{offdiag}/{diag}"
        return cls(distribution_moments(offdiag, P), distribution_moments(diag, P), name)

    def to_dict(self) -> dict:
        return {"name": self.name,
                "offdiag_moments": [str(x) for x in self.offdiag_moments],
                "diag_moments": [str(x) for x in self.diag_moments]}


def profile(name: str, diag: str | None = None, P: int = 16) -> MomentProfile:
    """One of the shipped profiles; ``diag`` overrides the diagonal law."""
    if name not in PROFILES:
        raise ValueError(f"unknown profile {name!r}; expected one of {PROFILES}")
    return MomentProfile.from_kinds(name, diag, P)


# -- semicircle --------------------------------------------------------------

CATALAN_MAX = 10_000


def catalan(n: int) -> int:
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > CATALAN_MAX:
        raise OverflowError(f"catalan({n}) is beyond the supported range")
    return math.comb(2 * n, n) // (n + 1)


def semicircle_moment(k: int) -> int:
    if k < 0:
        raise ValueError("k must be nonnegative")
    return 0 if k % 2 else catalan(k // 2)


# -- covariance table --------------------------------------------------------


@lru_cache(maxsize=None)
def clt_pair_counts(k1: int, k2: int, cap: int | None = None) -> tuple[int, int]:
    """(tree_count, cycle_count) of CLT pair classes; symmetric in (k1, k2)."""
    if k1 > k2:
        return clt_pair_counts(k2, k1, cap)
    if (k1 + k2) % 2:
        return 0, 0
    tree = cycle = 0
    for _, _, kind in comb.enumerate_clt_pairs(k1, k2, cap=cap):
        if kind is PairKind.TREE:
            tree += 1
        else:
            cycle += 1
    return tree, cycle


@dataclass(frozen=True)
class CovarianceEntry:
    k: int
    l: int
    tree_count: int
    cycle_count: int
    value: Number

    def to_dict(self) -> dict:
        return {"k": self.k, "l": self.l, "tree": self.tree_count,
                "cycle": self.cycle_count, "value": float(self.value)}


def covariance_A(k1: int, k2: int, prof: MomentProfile, cap: int | None = None) -> CovarianceEntry:
    """Limit of E[Y_k1 Y_k2]: cycle classes count 1, tree classes m4 - 1."""
    if k1 < 2 or k2 < 2:
        raise ValueError("covariance_A is defined for k1, k2 >= 2")
    tree, cycle = clt_pair_counts(k1, k2, cap)
    return CovarianceEntry(k1, k2, tree, cycle, cycle + tree * (prof.m4 - 1))


@dataclass
class CovarianceTable:
    """Cells A(k, l) for 2 <= k, l <= kmax, evaluated for one profile."""

    kmax: int
    profile: MomentProfile
    entries: dict[tuple[int, int], CovarianceEntry] = field(default_factory=dict)

    def __getitem__(self, kl: tuple[int, int]) -> Number:
        k, l = kl
        if k == 1 or l == 1:
            return 0
        key = (min(k, l), max(k, l))
        if key not in self.entries:
            self.entries[key] = covariance_A(*key, self.profile)
        return self.entries[key].value

    def entry(self, k: int, l: int) -> CovarianceEntry:
        self[k, l]
        e = self.entries[(min(k, l), max(k, l))]
        return e if (e.k, e.l) == (k, l) else CovarianceEntry(k, l, e.tree_count, e.cycle_count, e.value)

    def cells(self) -> list[CovarianceEntry]:
        return [self.entry(k, l) for k in range(2, self.kmax + 1) for l in range(2, self.kmax + 1)]

    def matrix(self) -> np.ndarray:
        n = self.kmax - 1
        out = np.zeros((n, n))
        for k in range(2, self.kmax + 1):
            for l in range(2, self.kmax + 1):
                out[k - 2, l - 2] = float(self[k, l])
        return out

    def findings(self) -> list[str]:
        """Even cells of total order >= 4 without cycle classes.

        Such a cell vanishes when m4 = 1, so its limit is not positive for
        every entry law.
        """
        out = []
        for k in range(2, self.kmax + 1):
            for l in range(k, self.kmax + 1):
                if (k + l) % 2 == 0 and k + l >= 4:
                    e = self.entry(k, l)
                    if e.cycle_count == 0:
                        out.append(f"A({k},{l}) has no cycle-kind classes (value {e.tree_count}*(m4-1))")
        return out


def covariance_table(kmax: int, prof: MomentProfile, cap: int | None = None) -> CovarianceTable:
    limit = comb.PAIR_CAP if cap is None else cap
    if 2 * kmax > limit:
        raise comb.EnumerationCapError(f"enumeration cap exceeded: 2*kmax={2 * kmax} > {limit}")
    table = CovarianceTable(kmax, prof)
    for k in range(2, kmax + 1):
        for l in range(k, kmax + 1):
            table.entries[(k, l)] = covariance_A(k, l, prof, cap)
    return table


@lru_cache(maxsize=None)
def a_coefficient(k: int, cap: int | None = None) -> int:
    """Number of word classes carrying the diagonal contribution at order k."""
    if k < 1:
        raise ValueError("k must be positive")
    if k == 1:
        return 1
    if k % 2 == 0:
        return 0
    return comb.count_words(k, "A", cap)


def limit_cov_S(k: int, l: int, prof: MomentProfile, cap: int | None = None) -> Number:
    """Limiting covariance of the centered, sqrt(N)-scaled moments k and l."""
    if k < 1 or l < 1:
        raise ValueError("orders must be positive")
    A = 0 if (k == 1 or l == 1) else covariance_A(k, l, prof, cap).value
    return A + a_coefficient(k, cap) * a_coefficient(l, cap) * prof.d2


def limit_cov_matrix(K: int, prof: MomentProfile, cap: int | None = None) -> np.ndarray:
    out = np.zeros((K, K))
    for k in range(1, K + 1):
        for l in range(k, K + 1):
            out[k - 1, l - 1] = out[l - 1, k - 1] = float(limit_cov_S(k, l, prof, cap))
    return out


@dataclass(frozen=True)
class LimitLaw:
    k: int
    a_k: int
    variance: Number
    is_pure_gaussian: bool


def limit_law(k: int, prof: MomentProfile, cap: int | None = None) -> LimitLaw:
    a = a_coefficient(k, cap)
    return LimitLaw(k, a, limit_cov_S(k, k, prof, cap), a == 0 or prof.diag_gaussian)


def limit_excess_kurtosis(k: int, prof: MomentProfile, cap: int | None = None) -> float:
    """Excess kurtosis of a_k*zeta + eta_k with zeta, eta_k independent.

    Only the zeta part carries a fourth cumulant: a_k^4 (d4 - 3 d2^2).
    """
    var = limit_cov_S(k, k, prof, cap)
    if var == 0:
        return float("nan")
    a = a_coefficient(k, cap)
    return float(a ** 4 * (prof.d(4) - 3 * prof.d2 ** 2) / var ** 2)


# -- Wick --------------------------------------------------------------------


def perfect_matchings(items: Sequence) -> Iterable[list[tuple]]:
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for i, other in enumerate(rest):
        for m in perfect_matchings(rest[:i] + rest[i + 1:]):
            yield [(first, other)] + m


def wick_joint_moment(orders: Sequence[int],
                      table: CovarianceTable | Mapping[tuple[int, int], Number] | Callable[[int, int], Number]) -> Number:
    """E[prod eta_{k_i}] as a sum over perfect matchings of A-products."""
    if isinstance(table, CovarianceTable):
        cov = lambda k, l: table[k, l]  # noqa: E731
    elif callable(table):
        cov = table
    else:
        cov = lambda k, l: table[(k, l)] if (k, l) in table else table[(l, k)]  # noqa: E731
    if len(orders) % 2:
        return 0
    total = 0
    for m in perfect_matchings(list(orders)):
        total += math.prod((cov(k, l) for k, l in m), start=1)
    return total


# -- finite N ----------------------------------------------------------------


def _edge_moment(prof: MomentProfile, e: tuple[int, int], n: int) -> Number:
    return prof.d(n) if e[0] == e[1] else prof.m(n)


def _expect(prof: MomentProfile, counts: Mapping[tuple[int, int], int]) -> Number:
    out: Number = Fraction(1)
    for e, n in counts.items():
        out *= _edge_moment(prof, e, n)
        if out == 0:
            return out
    return out


def _check_budget(n_terms: int, budget: int | None) -> None:
    limit = FINITE_N_BUDGET if budget is None else budget
    if n_terms > limit:
        raise BudgetError(f"brute-force budget exceeded: {n_terms} terms > {limit}")


def _n_words(N: int, k: int) -> Iterable[tuple[int, ...]]:
    for mid in itertools.product(range(1, N + 1), repeat=k - 1):
        yield (1, *mid, 1)


def _coerce(x: Number, prof: MomentProfile) -> Number:
    return x if prof.exact else float(x)


def exact_moment_finite_N(N: int, k: int, prof: MomentProfile, budget: int | None = None) -> Number:
    """E[X_N^k(1,1)] by summing E[T_w] over every N-word of length k+1."""
    if N < 1 or k < 0:
        raise ValueError("need N >= 1 and k >= 0")
    if k == 0:
        return Fraction(1)
    _check_budget(N ** (k - 1), budget)
    total: Number = Fraction(0)
    for w in _n_words(N, k):
        total += _expect(prof, passage_counts(w))
    return _coerce(total / _sqrt_n_power(N, k), prof)


def _sqrt_n_power(N: int, k: int) -> Number:
    """N^(k/2) as a Fraction when k is even, else a float."""
    if k % 2 == 0:
        return Fraction(N) ** (k // 2)
    return Fraction(N) ** (k // 2) * math.sqrt(N)


def exact_pair_moment_finite_N(N: int, k1: int, k2: int, prof: MomentProfile,
                               budget: int | None = None) -> Number:
    """E[(X^k1(1,1) - E)(X^k2(1,1) - E)] by a double sum over N-words."""
    if N < 1 or k1 < 1 or k2 < 1:
        raise ValueError("need N >= 1 and k1, k2 >= 1")
    _check_budget(N ** (k1 - 1) * N ** (k2 - 1), budget)
    words1 = [passage_counts(w) for w in _n_words(N, k1)]
    words2 = [passage_counts(w) for w in _n_words(N, k2)]
    mean1 = sum((_expect(prof, c) for c in words1), Fraction(0))
    mean2 = sum((_expect(prof, c) for c in words2), Fraction(0))
    joint: Number = Fraction(0)
    for c1 in words1:
        for c2 in words2:
            joint += _expect(prof, c1 + c2)
    raw = joint - mean1 * mean2
    if (k1 + k2) % 2 == 0:
        scale: Number = Fraction(N) ** ((k1 + k2) // 2)
    else:
        scale = float(N) ** ((k1 + k2) / 2)
    return _coerce(raw / scale, prof)


def _falling(N: int, t: int) -> int:
    """(N-1)(N-2)...(N-t+1): labelings of a weight-t class with 1 fixed."""
    return math.prod(range(N - t + 1, N)) if t <= N else 0


def moment_by_classes(N: int, k: int, prof: MomentProfile) -> Number:
    """E[X_N^k(1,1)] from canonical classes weighted by their N-labelings."""
    if k == 0:
        return Fraction(1)
    total: Number = Fraction(0)
    for w in comb.enumerate_words(k, "all", cap=max(k, comb.WORD_CAP)):
        t = w.weight
        if t <= N:
            total += _falling(N, t) * _expect(prof, passage_counts(w))
    return _coerce(total / _sqrt_n_power(N, k), prof)

