import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wignerlab import combinatorics as comb
from wignerlab import oracle as o

G = o.profile("gaussian")
RAD = o.profile("rademacher")
UNI = o.profile("uniform")


# -- profiles ----------------------------------------------------------------


def test_profile_moments():
    assert G.m4 == 3 and G.d2 == 1 and G.d(4) == 3
    assert RAD.m4 == 1
    assert UNI.m4 == Fraction(9, 5)
    assert o.profile("gaussian", diag="zero").d2 == 0
    assert G.m(0) == 1 and G.m(3) == 0


def test_profile_validation():
    with pytest.raises(ValueError):
        o.MomentProfile((Fraction(0), Fraction(2), Fraction(0), Fraction(3)), (Fraction(0), Fraction(1)))
    with pytest.raises(ValueError):
        o.MomentProfile((Fraction(0), Fraction(1), Fraction(0), Fraction(1, 2)), (Fraction(0), Fraction(1)))


# -- Catalan / semicircle ----------------------------------------------------


def test_catalan_examples():
    assert [o.catalan(n) for n in range(1, 4)] == [1, 2, 5]
    assert o.catalan(0) == 1
    with pytest.raises(OverflowError):
        o.catalan(o.CATALAN_MAX + 1)


def test_semicircle_moment_examples():
    assert o.semicircle_moment(2) == 1
    assert o.semicircle_moment(3) == 0
    assert o.semicircle_moment(6) == 5


@pytest.mark.parametrize("n", range(1, 6))
def test_semicircle_moment_matches_enumeration(n):
    assert o.semicircle_moment(2 * n) == comb.count_words(2 * n, "wigner")


# -- covariance table --------------------------------------------------------


def test_covariance_examples():
    e = o.covariance_A(2, 2, G)
    assert (e.tree_count, e.cycle_count, e.value) == (1, 0, 2)
    assert o.covariance_A(2, 3, G).value == 0
    assert o.covariance_A(2, 3, G).tree_count == o.covariance_A(2, 3, G).cycle_count == 0
    assert o.covariance_A(2, 2, RAD).value == 0


GOLDEN_COUNTS = {
    (2, 2): (1, 0), (2, 4): (3, 0), (2, 6): (9, 0), (3, 3): (0, 2), (3, 5): (0, 8),
    (4, 4): (9, 2), (4, 6): (27, 10), (5, 5): (0, 34), (6, 6): (81, 52), (7, 7): (0, 466),
}


@pytest.mark.parametrize("cell, counts", GOLDEN_COUNTS.items())
def test_golden_pair_counts(cell, counts):
    assert o.clt_pair_counts(*cell) == counts


@pytest.mark.parametrize("prof", [G, RAD, UNI], ids=lambda p: p.name)
def test_covariance_value_formula_and_symmetry(prof):
    table = o.covariance_table(7, prof)
    for k in range(2, 8):
        for l in range(2, 8):
            e = table.entry(k, l)
            assert table[k, l] == table[l, k]
            assert e.value == e.cycle_count + e.tree_count * (prof.m4 - 1)
            if (k + l) % 2:
                assert e.value == 0
    assert table[1, 4] == 0


def test_findings_flag_cells_without_cycles():
    findings = o.covariance_table(6, G).findings()
    assert findings and all("(2," in f for f in findings)
    # every other even cell with k+l >= 4 has cycle classes
    for k in range(3, 7):
        for l in range(k, 7):
            if (k + l) % 2 == 0:
                assert o.clt_pair_counts(k, l)[1] >= 1


def test_table_cap():
    with pytest.raises(comb.EnumerationCapError):
        o.covariance_table(8, G)


# -- a_k and limit covariance ------------------------------------------------


def test_a_coefficient_examples():
    assert o.a_coefficient(1) == 1
    assert o.a_coefficient(3) == 2
    assert o.a_coefficient(2) == 0
    assert [o.a_coefficient(k) for k in (5, 7, 9)] == [5, 14, 42]


def test_limit_cov_examples():
    assert o.limit_cov_S(1, 1, G) == 1
    assert o.limit_cov_S(2, 2, G) == 2
    assert o.limit_cov_S(1, 2, G) == 0
    assert o.limit_cov_S(3, 3, G) == 2 + 4
    assert o.limit_cov_S(3, 3, o.profile("gaussian", diag="zero")) == 2
    assert o.limit_cov_S(1, 3, G) == 2


@pytest.mark.parametrize("prof", [G, RAD, UNI, o.profile("gaussian", diag="zero")], ids=str)
def test_limit_cov_psd(prof):
    M = o.limit_cov_matrix(7, prof)
    assert np.allclose(M, M.T)
    assert np.linalg.eigvalsh(M).min() >= -1e-8


def test_limit_cov_psd_k8():
    M = o.limit_cov_matrix(8, G, cap=16)
    assert np.linalg.eigvalsh(M).min() >= -1e-8


def test_limit_law():
    law = o.limit_law(3, UNI)
    assert law.a_k == 2 and not law.is_pure_gaussian
    assert o.limit_law(3, G).is_pure_gaussian
    assert o.limit_law(4, UNI).is_pure_gaussian
    assert o.limit_excess_kurtosis(4, UNI) == 0
    # uniform diagonal: d4 - 3 d2^2 = -6/5 and a_3^4 = 16
    var = float(o.limit_cov_S(3, 3, UNI))
    assert o.limit_excess_kurtosis(3, UNI) == pytest.approx(16 * (-6 / 5) / var ** 2)


# -- Wick --------------------------------------------------------------------


def test_wick_examples():
    t = o.covariance_table(4, G)
    assert o.wick_joint_moment((2, 2, 2), t) == 0
    assert o.wick_joint_moment((2, 2, 2, 2), t) == 12
    assert o.wick_joint_moment((2, 3, 2, 3), t) == t[2, 2] * t[3, 3]


def test_perfect_matching_count():
    assert len(list(o.perfect_matchings(range(6)))) == 15


@settings(max_examples=20)
@given(st.integers(2, 6), st.integers(1, 3))
def test_wick_equal_orders(k, m):
    t = o.covariance_table(6, UNI)
    double_fact = math.prod(range(1, 2 * m, 2))
    assert o.wick_joint_moment([k] * (2 * m), t) == double_fact * t[k, k] ** m


def test_wick_accepts_mapping_and_callable():
    assert o.wick_joint_moment((2, 2), {(2, 2): 5}) == 5
    assert o.wick_joint_moment((2, 4, 2, 4), lambda k, l: k * l) == 4 * 16 + 2 * 8 * 8


# -- exact finite N ----------------------------------------------------------


def test_exact_moment_examples():
    assert o.exact_moment_finite_N(1, 2, G) == G.d2
    assert o.exact_moment_finite_N(2, 2, G) == (G.d2 + 1) / 2 == 1
    assert o.exact_moment_finite_N(2, 2, o.profile("gaussian", diag="zero")) == Fraction(1, 2)
    assert o.exact_moment_finite_N(2, 1, G) == 0


def test_exact_pair_examples():
    assert o.exact_pair_moment_finite_N(1, 2, 2, UNI) == UNI.d(4) - UNI.d2 ** 2
    assert o.exact_pair_moment_finite_N(2, 2, 2, G) == 1
    assert o.exact_pair_moment_finite_N(2, 1, 2, G) == 0
    assert o.exact_pair_moment_finite_N(2, 1, 2, UNI) == 0


@pytest.mark.parametrize("N, k", [(N, k) for N in (1, 2, 3, 4) for k in range(1, 7)])
@pytest.mark.parametrize("prof", [G, UNI], ids=lambda p: p.name)
def test_class_route_matches_brute_force(N, k, prof):
    assert o.moment_by_classes(N, k, prof) == o.exact_moment_finite_N(N, k, prof)


def test_pair_moment_symmetric():
    for k1, k2 in [(2, 3), (1, 4), (2, 4)]:
        assert o.exact_pair_moment_finite_N(3, k1, k2, UNI) == o.exact_pair_moment_finite_N(3, k2, k1, UNI)


def test_scaled_variance_approaches_limit():
    zero = o.profile("gaussian", diag="zero")
    target = o.covariance_A(3, 3, zero).value
    errs = [abs(N * o.exact_pair_moment_finite_N(N, 3, 3, zero) - target) for N in range(2, 9)]
    assert all(b < a for a, b in zip(errs, errs[1:]))


@pytest.mark.parametrize("k", [2, 4])
def test_moment_trend_toward_catalan(k):
    # with d2 = 1 the k=2 moment is exactly 1 at every N, so the strict
    # trend is checked on the zero-diagonal profile
    for prof, strict in [(o.profile("gaussian", diag="zero"), True), (G, False)]:
        err = lambda N: abs(o.exact_moment_finite_N(N, k, prof) - o.semicircle_moment(k))
        assert err(5) < err(2) if strict else err(5) <= err(2)


def test_budget_guard():
    with pytest.raises(o.BudgetError):
        o.exact_moment_finite_N(30, 8, G)
    with pytest.raises(o.BudgetError):
        o.exact_moment_finite_N(3, 4, G, budget=10)
