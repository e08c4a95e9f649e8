"""
Tests for L^p and Orlicz norms, variance, entropy and the Orlicz lemmas
"""
import math
import os
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from app.core.errors import BadExponent, NegativeInput
from app.core.functionals import (
    KERNEL_CONSTANT,
    YoungFunction,
    calibrate_kernel_constant,
    entropy,
    kernel_bound_ratio,
    lp_norm,
    lp_norm_integral,
    orlicz_norm,
    phi_holder_check,
    phi_integral_check,
    phi_l2_check,
    variance,
    young_norm_estimate_check,
)

UNIFORM4 = np.full(4, 0.25)


def random_pairs(count=200, seed=5):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        size = int(rng.integers(2, 9))
        weights = rng.dirichlet(np.ones(size))
        yield weights, rng.standard_normal(size) * rng.uniform(0.1, 3.0), rng.standard_normal(size)


class TestLpNorm:
    def test_constant_function(self):
        assert lp_norm(UNIFORM4, np.full(4, 2.0), 3) == pytest.approx(2.0)

    def test_sup_norm_ignores_null_states(self):
        assert lp_norm([0.5, 0.5, 0.0], [1.0, -3.0, 100.0], math.inf) == 3.0

    def test_large_exponent_does_not_overflow(self):
        value = lp_norm(UNIFORM4, [1e3, 1.0, 0.0, 2.0], 400)
        assert math.isfinite(value)
        assert value == pytest.approx(1e3 * 0.25 ** (1 / 400))

    def test_bad_exponent(self):
        with pytest.raises(BadExponent):
            lp_norm(UNIFORM4, np.ones(4), 0.5)

    @given(st.floats(1.0, 6.0), st.floats(1.0, 6.0))
    @settings(max_examples=50, deadline=None)
    def test_monotone_in_exponent(self, p, q):
        f = [0.3, -2.0, 1.1, 0.0]
        low, high = sorted((p, q))
        assert lp_norm(UNIFORM4, f, low) <= lp_norm(UNIFORM4, f, high) * (1 + 1e-12)


class TestOrliczNorm:
    @pytest.mark.parametrize("young", list(YoungFunction))
    def test_matches_root_finding(self, young):
        weights = np.array([0.1, 0.2, 0.3, 0.4])
        f = np.array([0.5, -1.5, 2.0, 0.25])
        root = optimize.brentq(lambda a: float(weights @ young(f / a)) - 1.0, 0.1, 100.0, xtol=1e-14)
        assert orlicz_norm(weights, f, young) == pytest.approx(root, rel=1e-10)

    def test_zero_function(self):
        assert orlicz_norm(UNIFORM4, np.zeros(4)) == 0.0

    @given(st.floats(0.01, 100.0))
    @settings(max_examples=50, deadline=None)
    def test_homogeneous(self, c):
        f = np.array([1.0, -0.5, 0.2, 2.0])
        assert orlicz_norm(UNIFORM4, c * f, YoungFunction.XSQLOG) == pytest.approx(
            c * orlicz_norm(UNIFORM4, f, YoungFunction.XSQLOG), rel=1e-9
        )


class TestVarianceEntropy:
    def test_variance(self):
        assert variance([0.5, 0.5], [0.0, 2.0]) == pytest.approx(1.0)

    def test_entropy_of_constant_is_zero(self):
        assert entropy(UNIFORM4, np.full(4, 3.0)) == 0.0

    def test_entropy_closed_form(self):
        expected = 0.5 * 2.0 * math.log(2.0)
        assert entropy([0.5, 0.5], [0.0, 2.0]) == pytest.approx(expected)

    def test_entropy_rejects_negative(self):
        with pytest.raises(NegativeInput):
            entropy(UNIFORM4, [1.0, -1.0, 0.0, 0.0])


class TestOrliczLemmas:
    def test_phi_le_two_l2(self):
        failures = [c for w, f, _ in random_pairs() if not (c := phi_l2_check(w, f)).passed]
        assert failures == []

    def test_lp_integral(self):
        failures = [c for w, f, _ in random_pairs() if not (c := phi_integral_check(w, f, 1e-6)).passed]
        assert failures == []

    def test_phi_holder(self):
        failures = [c for w, f, g in random_pairs() if not (c := phi_holder_check(w, f, g)).passed]
        assert failures == []

    @pytest.mark.parametrize("young", list(YoungFunction))
    def test_young_norm_estimate(self, young):
        failures = [
            c for w, f, _ in random_pairs() if not (c := young_norm_estimate_check(w, f / 4.0, young)).passed
        ]
        assert failures == []

    def test_quadrature_of_constant(self):
        assert lp_norm_integral(UNIFORM4, np.full(4, 3.0)) == pytest.approx(9.0)


class TestKernelConstant:
    def test_frozen_constant_covers_random_family(self):
        pairs = list(random_pairs())
        for weights, f, _ in pairs:
            assert kernel_bound_ratio(weights, f) <= KERNEL_CONSTANT

    def test_calibration_is_the_largest_ratio(self):
        weights = np.array([0.25, 0.75])
        family = [np.array([1.0, 0.0]), np.array([1.0, 1.0]), np.array([0.0, 0.0])]
        observed = calibrate_kernel_constant(weights, family)
        assert observed == pytest.approx(max(kernel_bound_ratio(weights, f) for f in family))


if __name__ == "__main__":
    pytest.main([__file__])
