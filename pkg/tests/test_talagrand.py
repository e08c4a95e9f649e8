"""
Tests for the Talagrand-type inequalities and their constants
"""
import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from app.core.constants import certify_constants
from app.core.errors import BadArgs
from app.core.functionals import KERNEL_CONSTANT
from app.core.reference_models import ising_pair, single_bernoulli_site
from app.core.talagrand import (
    audited_log_constant,
    calibrate_corollary,
    chain_of_implications,
    corollary_log_constant,
    entropy_shift_check,
    log_commutation_constant,
    log_talagrand_constant,
    orlicz_derivative_check,
    pair_measure,
    reverse_talagrand_check,
    talagrand_constant,
    tensorization_check,
    verify_commutation,
    verify_corollary,
    verify_talagrand,
)

COMMUTATION_TIMES = (0.1, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0)


class TestConstants:
    def test_log_constant_matches_product_formula(self):
        K, rho = 2.0, 0.5
        lam = 72.0 * 1 * 4
        expected = (4 * K * 2 ** (1 / (2 * rho)) / (1 - math.exp(-1))) * (math.e / (2 * rho)) * 2 * math.e ** 4
        assert log_talagrand_constant(K, 1, rho) == pytest.approx(lam + math.log(expected), rel=1e-12)

    def test_overflow_reported_as_inf(self):
        assert math.isfinite(log_talagrand_constant(1.0, 2, 1.0))
        assert talagrand_constant(1.0, 2, 1.0) == math.inf

    def test_bad_arguments(self):
        with pytest.raises(BadArgs):
            log_talagrand_constant(1.0, 1, 0.0)
        with pytest.raises(BadArgs):
            log_talagrand_constant(0.0, 1, 1.0)

    def test_commutation_constant(self):
        assert log_commutation_constant(1) == pytest.approx(math.log(2.0) + 288.0)

    def test_corollary_constant_adds_kernel_constant(self):
        assert corollary_log_constant(10.0) == pytest.approx(10.0 + math.log(KERNEL_CONSTANT))


class TestTalagrand:
    def test_zero_violations(self, reference_model, certified, functions):
        log_constant = audited_log_constant(reference_model, certified(reference_model))
        family = functions(reference_model, count=500, seed=21)
        reports = [verify_talagrand(reference_model, f, log_constant=log_constant) for f in family]
        assert all(r.passed for r in reports)
        assert all(set(r.rhs_terms) == {str(s) for s in reference_model.sites} for r in reports)

    def test_constant_too_small_fails(self, ring3, functions):
        f = functions(ring3, count=1)[0]
        report = verify_talagrand(ring3, f, constant=1e-6)
        assert not report.passed
        assert report.ratio > 1

    def test_constant_arguments_exclusive(self, ring3):
        with pytest.raises(BadArgs):
            verify_talagrand(ring3, np.zeros(8), constant=1.0, log_constant=0.0)

    def test_constant_function_passes(self, ring3):
        report = verify_talagrand(ring3, np.ones(8), constant=1.0)
        assert report.passed and report.lhs == pytest.approx(0.0, abs=1e-15)


class TestCorollary:
    def test_zero_violations(self, reference_model, certified, functions):
        log_c1C = corollary_log_constant(audited_log_constant(reference_model, certified(reference_model)))
        for f in functions(reference_model):
            assert verify_corollary(reference_model, f, log_c1C).passed

    def test_constant_sites_are_skipped(self, product):
        # depends on sites a and b only
        f = product.space.codes[:, 0].astype(float)
        report = verify_corollary(product, f, 0.0)
        assert set(report.skipped_sites) >= {"c", "d"}

    def test_calibration_is_finite(self, ring3, functions):
        observed = calibrate_corollary(ring3, functions(ring3))
        assert 0 < observed < math.inf

    def test_chain(self, reference_model, certified, functions):
        constants = certified(reference_model)
        log_c1C = corollary_log_constant(audited_log_constant(reference_model, constants))
        chain = chain_of_implications(reference_model, constants, functions(reference_model), log_c1C)
        assert chain.passed
        assert chain.violations == 0


class TestCommutation:
    def test_zero_violations(self, reference_model, certified, functions):
        rho = certified(reference_model).rho
        for t in COMMUTATION_TIMES:
            for f in functions(reference_model):
                assert verify_commutation(reference_model, f, t, rho).passed

    def test_exponent_and_proof_constant(self, bernoulli_site):
        report = verify_commutation(bernoulli_site, np.array([0.0, 1.0]), 1.5, 0.5)
        assert report.exponent == pytest.approx(1.0 + math.exp(-1.5))
        assert report.log_proof_constant == pytest.approx(2 * math.log(2.0) + 288.0 * 0.75 ** 2)


class TestReverse:
    def test_zero_violations(self, reference_model, functions):
        report = reverse_talagrand_check(reference_model, functions(reference_model))
        assert report.passed
        assert report.constant >= 1.0
        assert report.entropy_form == "Ent(f^2)"

    def test_empty_family(self, ring3):
        with pytest.raises(BadArgs):
            reverse_talagrand_check(ring3, [])


class TestOrliczPairLemmas:
    def test_pair_measure_is_probability(self, ring3):
        pairs = pair_measure(ring3, "s1")
        assert pairs["weights"].sum() == pytest.approx(1.0)
        assert len(pairs["source"]) == len(pairs["target"]) == 16

    def test_derivative_bound(self, reference_model, functions):
        for f in functions(reference_model, count=20):
            for x in reference_model.sites:
                assert orlicz_derivative_check(reference_model, f, x).passed

    def test_entropy_shift(self, reference_model, functions):
        for f in functions(reference_model, count=20):
            assert entropy_shift_check(reference_model, f).passed


class TestTensorization:
    def test_product_of_reference_pieces(self):
        left, right = single_bernoulli_site(0.4), ising_pair(("c", "d"), beta=0.3)
        c1, c2 = certify_constants(left, audit_size=100), certify_constants(right, audit_size=100)
        rng = np.random.default_rng(3)
        family = [rng.standard_normal(8) for _ in range(20)]
        reports = tensorization_check(left, right, c1, c2, family)
        assert len(reports) == 20
        assert all(r.passed for r in reports)


if __name__ == "__main__":
    pytest.main([__file__])
