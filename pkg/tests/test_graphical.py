"""
Tests for the Poisson graphical construction and the Monte Carlo semigroup
"""
import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from app.core.errors import BadArgs, NegativeTime, OrderViolated
from app.core.graphical import (
    BLOCK_SIZE,
    PoissonRealization,
    RngStream,
    apply_psi_set,
    check_factorization,
    mc_agreement,
    mc_semigroup,
    sample_ppp,
)
from app.core.operators import psi_x, semigroup_apply


class TestRealization:
    def test_times_must_increase(self):
        with pytest.raises(BadArgs):
            PoissonRealization((("a", 0.5), ("b", 0.5)), 1.0)

    def test_times_inside_horizon(self):
        with pytest.raises(BadArgs):
            PoissonRealization((("a", 1.5),), 1.0)

    def test_sample_is_sorted_and_bounded(self, ring3):
        rng = RngStream(1, 0).generator()
        realization = sample_ppp(ring3, 2.0, rng)
        times = [t for _, t in realization.points]
        assert times == sorted(times)
        assert all(0 <= t <= 2.0 for t in times)

    def test_mean_count(self, ring3):
        rng = RngStream(2, 0).generator()
        counts = [len(sample_ppp(ring3, 1.0, rng)) for _ in range(4000)]
        assert np.mean(counts) == pytest.approx(3.0, abs=0.15)

    def test_negative_horizon(self, ring3):
        with pytest.raises(NegativeTime):
            sample_ppp(ring3, -1.0, np.random.default_rng(0))


class TestApplyPsiSet:
    def test_earliest_point_is_outermost(self, ring3, functions):
        f = functions(ring3, count=1)[0]
        realization = PoissonRealization((("s0", 0.1), ("s1", 0.2)), 1.0)
        expected = psi_x(ring3, "s0", psi_x(ring3, "s1", f))
        assert np.allclose(apply_psi_set(ring3, realization, f), expected)

    def test_empty_realization_is_identity(self, ring3, functions):
        f = functions(ring3, count=1)[0]
        assert np.array_equal(apply_psi_set(ring3, PoissonRealization((), 1.0), f), f)

    def test_factorization_on_random_pairs(self, ring3, functions):
        f = functions(ring3, count=1)[0]
        rng = RngStream(5, 0).generator()
        for _ in range(100):
            first = sample_ppp(ring3, 1.0, rng)
            later = sample_ppp(ring3, 1.0, rng)
            shifted = PoissonRealization(tuple((x, s + 1.0) for x, s in later.points), 2.0)
            report = check_factorization(ring3, first, shifted, f)
            assert report.ok
            assert report.max_difference <= 1e-12

    def test_factorization_needs_time_order(self, ring3):
        early = PoissonRealization((("s0", 0.5),), 1.0)
        late = PoissonRealization((("s1", 0.2),), 1.0)
        with pytest.raises(OrderViolated):
            check_factorization(ring3, early, late, np.zeros(8))


class TestMonteCarlo:
    def test_single_site_closed_form(self, bernoulli_site):
        f = np.array([1.0, -1.0])
        report = mc_semigroup(bernoulli_site, 1.0, f, 10_000, seed=7)
        mean = 0.7 - 0.3
        exact = math.exp(-1.0) * f + (1.0 - math.exp(-1.0)) * mean
        assert np.all(np.abs(report.estimate - exact) <= 4.0 * report.std_err)

    def test_agreement_on_ring(self, ring3, functions):
        f = functions(ring3, count=1)[0]
        exact = semigroup_apply(ring3, 1.0, f)
        report = mc_semigroup(ring3, 1.0, f, 10_000, seed=7)
        assert mc_agreement(exact, report, sigmas=4.0) >= 0.99

    def test_independent_of_worker_count(self, ring3, functions):
        f = functions(ring3, count=1)[0]
        one = mc_semigroup(ring3, 0.5, f, 1_000, seed=3, workers=1)
        three = mc_semigroup(ring3, 0.5, f, 1_000, seed=3, workers=3)
        assert np.array_equal(one.estimate, three.estimate)
        assert np.array_equal(one.std_err, three.std_err)
        assert one.n_streams == math.ceil(1_000 / BLOCK_SIZE)

    def test_seed_changes_estimate(self, ring3, functions):
        f = functions(ring3, count=1)[0]
        a = mc_semigroup(ring3, 0.5, f, 500, seed=1)
        b = mc_semigroup(ring3, 0.5, f, 500, seed=2)
        assert not np.array_equal(a.estimate, b.estimate)

    def test_time_zero_is_exact(self, ring3, functions):
        f = functions(ring3, count=1)[0]
        report = mc_semigroup(ring3, 0.0, f, 100, seed=1)
        assert np.array_equal(report.estimate, f)
        assert mc_agreement(f, report) == 1.0

    def test_minimum_sample_count(self, ring3):
        with pytest.raises(BadArgs):
            mc_semigroup(ring3, 1.0, np.zeros(8), 99, seed=0)


if __name__ == "__main__":
    pytest.main([__file__])
