import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wignerlab import linalg, oracle
from wignerlab.experiments import simulate_moments
from wignerlab.randmat import (AtomicMeasure, EnsembleSpec, EntryDistribution, empirical_measure,
                               polar_normals, replica_generator, sample_wigner, spectral_measure,
                               spectral_moments)

kinds = st.sampled_from(["gaussian", "rademacher", "uniform"])


def test_zero_diag_scalar():
    X = sample_wigner(EnsembleSpec(1, "zero", "gaussian", 3))
    assert X.shape == (1, 1) and X[0, 0] == 0


def test_rademacher_magnitude():
    for r in range(10):
        X = sample_wigner(EnsembleSpec(2, "gaussian", "rademacher", 5), r)
        assert abs(X[0, 1]) == 1 / math.sqrt(2)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 30), kinds, kinds, st.integers(0, 2 ** 64 - 1), st.integers(0, 1000))
def test_sample_symmetric_and_deterministic(N, diag, off, seed, replica):
    spec = EnsembleSpec(N, diag, off, seed)
    X = sample_wigner(spec, replica)
    assert np.array_equal(X, X.T)
    assert np.array_equal(X, sample_wigner(spec, replica))
    assert np.array_equal(spectral_moments(X, 6), spectral_moments(sample_wigner(spec, replica), 6))


def test_fixed_seed_bitwise_identical():
    spec = EnsembleSpec(100, seed=2024)
    a, b = sample_wigner(spec, 7), sample_wigner(spec, 7)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, sample_wigner(spec, 8))
    mu_a, mu_b = spectral_measure(a), spectral_measure(b)
    assert mu_a.locations.tobytes() == mu_b.locations.tobytes()
    assert mu_a.weights.tobytes() == mu_b.weights.tobytes()


def test_buffers_do_not_change_draws():
    spec = EnsembleSpec(40, "uniform", "gaussian", 9)
    out, scratch = np.empty((40, 40)), np.empty(40 * 41 // 2)
    assert np.array_equal(sample_wigner(spec, 3), sample_wigner(spec, 3, out=out, scratch=scratch))


def test_spec_validation():
    with pytest.raises(ValueError):
        EnsembleSpec(0)
    with pytest.raises(ValueError):
        EnsembleSpec(3, "gaussian", "zero")
    with pytest.raises(ValueError):
        EntryDistribution("cauchy")
    spec = EnsembleSpec(4, "zero", "uniform", 11)
    assert EnsembleSpec.from_dict(spec.to_dict()) == spec


@pytest.mark.parametrize("kind, var, m4", [("gaussian", 1, 3), ("uniform", 1, 1.8), ("rademacher", 1, 1)])
def test_entry_sampler_moments(kind, var, m4):
    x = EntryDistribution(kind).sample(replica_generator(1, 0), 400_000)
    n = len(x)
    assert abs(x.mean()) < 4 * math.sqrt(var / n)
    assert abs(np.mean(x ** 2) - var) < 4 * math.sqrt((m4 - 1) / n) + 1e-12
    if kind == "uniform":
        assert np.all(np.abs(x) <= math.sqrt(3))


def test_polar_normals_shape_and_tail():
    z = polar_normals(replica_generator(4, 0), 200_001)
    assert len(z) == 200_001
    assert abs(np.mean(np.abs(z) > 1.959964) - 0.05) < 0.003


# -- measures ----------------------------------------------------------------


def test_spectral_measure_examples():
    mu = spectral_measure(np.array([[2.5]]))
    assert np.array_equal(mu.locations, [2.5]) and np.array_equal(mu.weights, [1])
    mu = spectral_measure(np.array([[0.0, 1], [1, 0]]))
    assert np.allclose(mu.locations, [-1, 1]) and np.allclose(mu.weights, [0.5, 0.5])


def test_empirical_measure_examples():
    L = empirical_measure(np.diag([1.0, 3.0]))
    assert np.array_equal(L.locations, [1, 3]) and np.array_equal(L.weights, [0.5, 0.5])
    X = sample_wigner(EnsembleSpec(30, seed=1))
    L1, L2 = empirical_measure(X), empirical_measure(X + 0.75 * np.eye(30))
    assert np.allclose(L2.locations, L1.locations + 0.75, atol=1e-12)
    assert np.array_equal(L1.weights, L2.weights)


def test_empirical_measure_close_to_semicircle_n500():
    X = sample_wigner(EnsembleSpec(500, seed=20240601))
    assert linalg.ks_distance(empirical_measure(X), linalg.semicircle_cdf) < 0.1


def test_degenerate_spectrum_merges_atoms():
    mu = spectral_measure(np.eye(4))
    assert np.array_equal(mu.locations, [1]) and np.array_equal(mu.weights, [1])


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 60), st.integers(0, 10 ** 6))
def test_measures_share_atoms_and_moments(N, seed):
    X = sample_wigner(EnsembleSpec(N, seed=seed))
    mu, L = spectral_measure(X), empirical_measure(X)
    assert abs(mu.weights.sum() - 1) <= 1e-8
    assert np.array_equal(mu.locations, L.locations)
    power = spectral_moments(X, 10)
    scale = np.array([np.sum(np.abs(mu.locations) ** k * mu.weights) for k in range(1, 11)])
    assert np.all(np.abs(mu.moments(10) - power) <= 1e-6 * np.maximum(scale, 1e-300))


def test_spectral_moment_identities():
    for r in range(5):
        spec = EnsembleSpec(2, "uniform", "gaussian", 77)
        gen = replica_generator(77, r)
        xi = np.concatenate([spec.diag.sample(gen, 2), spec.offdiag.sample(gen, 1)])
        X = sample_wigner(spec, r)
        m = spectral_moments(X, 2)
        assert m[0] == X[0, 0] == pytest.approx(xi[0] / math.sqrt(2), rel=1e-15)
        assert m[1] == pytest.approx((xi[0] ** 2 + xi[2] ** 2) / 2, rel=1e-14)


def test_zero_diagonal_first_moment_vanishes():
    m = simulate_moments(EnsembleSpec(25, "zero", "rademacher", 1), 3, 200)
    assert np.all(m[:, 0] == 0)


def test_atomic_measure_validation():
    with pytest.raises(ValueError):
        AtomicMeasure(np.array([1.0, 0.0]), np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        AtomicMeasure(np.array([0.0]), np.array([0.9]))
    mu = AtomicMeasure(np.array([-1.0, 2.0]), np.array([0.25, 0.75]))
    assert np.array_equal(mu.cdf([-2, -1, 0, 2]), [0, 0.25, 0.25, 1])


@pytest.mark.slow
def test_expectation_consistency_n2():
    spec = EnsembleSpec(2, "gaussian", "gaussian", 31)
    m = simulate_moments(spec, 2, 100_000)[:, 1]
    exact = float(oracle.exact_moment_finite_N(2, 2, spec.profile()))
    se = m.std(ddof=1) / math.sqrt(len(m))
    assert abs(m.mean() - exact) <= 4 * se
