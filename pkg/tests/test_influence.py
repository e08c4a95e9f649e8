"""
Tests for events, influences, the Russo-type formula, KKL and sharp thresholds
"""
import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from app.core.errors import BadAlphabet, BadArgs, DegenerateEvent, NotHeatBath, NotIncreasing, ThresholdHypothesisFailed
from app.core.influence import (
    Event,
    delta,
    dictator,
    dx_indicator_bounds,
    event_derivative,
    event_from_formula,
    event_from_states,
    is_increasing,
    kernel_slope,
    kkl_check,
    majority,
    pivotal_measure,
    random_increasing_events,
    russo_check,
    sharp_threshold_check,
    support,
    up_closure,
)
from app.core.reference_models import bernoulli_product_family, dependent_pair_family
from app.core.statespace import Alphabet, Measure, SiteSet, StateSpace, build_table_kernels, make_model


def binary_space(n):
    return StateSpace(Alphabet((0, 1)), SiteSet(tuple(f"s{i}" for i in range(n))))


def reference_events(model):
    events = random_increasing_events(model.space, 50, seed=13)
    events.append(dictator(model.space, model.sites[0]))
    events.append(majority(model.space))
    return events


class TestEvents:
    def test_formulas(self):
        space = binary_space(3)
        both = event_from_formula(space, {"and": [{"site": "s0"}, {"site": "s1"}]})
        assert list(np.flatnonzero(both.mask)) == [6, 7]
        two_of_three = majority(space)
        assert list(np.flatnonzero(two_of_three.mask)) == [3, 5, 6, 7]
        assert both.increasing and two_of_three.increasing

    def test_non_increasing_detected(self):
        space = binary_space(2)
        only_zero = event_from_states(space, [[0, 0]])
        assert not only_zero.increasing
        assert not is_increasing(space, only_zero.mask)

    def test_up_closure(self):
        space = binary_space(2)
        closed = up_closure(space, event_from_states(space, [[0, 1]]).mask)
        assert list(np.flatnonzero(closed)) == [1, 3]

    def test_random_events_are_nondegenerate_up_sets(self):
        for event in random_increasing_events(binary_space(3), 20, seed=1):
            assert event.increasing
            assert 0 < event.mask.sum() < 8

    def test_binary_alphabet_required(self):
        space = StateSpace(Alphabet((0, 1, 2)), SiteSet(("x",)))
        with pytest.raises(BadAlphabet):
            Event(space, np.zeros(3, dtype=bool))

    def test_unknown_formula_node(self):
        with pytest.raises(BadArgs):
            event_from_formula(binary_space(2), {"xor": []})


class TestInfluences:
    def test_dictator_influence_and_support(self):
        model = bernoulli_product_family(3).at(0.4)
        A = dictator(model.space, "s1")
        assert pivotal_measure(model, A, "s1") == pytest.approx(0.4)
        assert pivotal_measure(model, A, "s0") == 0.0
        assert support(model, A) == ["s1"]
        assert delta(model, A) == pytest.approx(0.4)

    def test_sandwich(self, reference_model):
        if not reference_model.alphabet.is_binary:
            pytest.skip("binary models only")
        for A in reference_events(reference_model):
            for x in reference_model.sites:
                for q in (1.0, 2.0):
                    assert dx_indicator_bounds(reference_model, A, x, q).passed


class TestRusso:
    def test_dictator_equality(self):
        family = bernoulli_product_family(3)
        A = dictator(family.at(0.5).space, "s0")
        for p in np.linspace(0.1, 0.9, 9):
            report = russo_check(family, A, float(p))
            assert report.passed
            assert report.derivative == pytest.approx(1.0, abs=1e-6)
            assert report.derivative == pytest.approx(report.weighted_bound, abs=1e-6)
            assert report.beta == pytest.approx(1.0, abs=1e-6)

    def test_dependent_family_grid(self):
        family = dependent_pair_family()
        space = family.at(0.5).space
        events = [dictator(space, "a"), majority(space), event_from_formula(space, {"or": [{"site": "a"}, {"site": "b"}]})]
        for A in events:
            for p in np.linspace(0.1, 0.9, 9):
                report = russo_check(family, A, float(p))
                assert report.passed, report
                assert report.weighted_bound >= report.plain_bound - 1e-9

    def test_monotone_certificates(self):
        family = dependent_pair_family()
        grid = np.linspace(0.0, 1.0, 11)
        space = family.at(0.5).space
        assert family.monotone_certificate(grid)
        assert family.event_monotone(majority(space), grid)
        lower = event_from_states(space, [[0, 0]], "all_down")
        assert not family.event_monotone(lower, grid)

    def test_kernel_slope_of_bernoulli(self):
        slope, error = kernel_slope(bernoulli_product_family(2), 0.3)
        assert slope == pytest.approx(1.0, abs=1e-8)
        assert error < 1e-6

    def test_event_derivative_of_and(self):
        family = bernoulli_product_family(2)
        A = event_from_formula(family.at(0.5).space, {"and": [{"site": "s0"}, {"site": "s1"}]})
        derivative, _ = event_derivative(family, A, 0.3)
        assert derivative == pytest.approx(0.6, abs=1e-8)

    def test_step_must_stay_inside(self):
        family = bernoulli_product_family(2)
        A = dictator(family.at(0.5).space, "s0")
        with pytest.raises(BadArgs):
            russo_check(family, A, 0.0505, h=0.01)

    def test_preconditions(self):
        family = bernoulli_product_family(2)
        space = family.at(0.5).space
        with pytest.raises(NotIncreasing):
            russo_check(family, event_from_states(space, [[0, 0]]), 0.5)

    def test_table_kernels_rejected(self):
        space = StateSpace(Alphabet((0, 1)), SiteSet(("x",)))
        model = make_model(build_table_kernels(space, {"x": [[0.5, 0.5], [0.5, 0.5]]}), Measure(space, [0.5, 0.5]))

        class Fixed:
            interval = (0.0, 1.0)

            def at(self, p):
                return model

        with pytest.raises(NotHeatBath):
            russo_check(Fixed(), dictator(space, "x"), 0.5)


class TestKKL:
    def test_reference_models(self, reference_model, certified):
        constants = certified(reference_model)
        for A in reference_events(reference_model):
            report = kkl_check(reference_model, A, constants)
            assert report.passed, report
            assert report.lhs == max(pivotal_measure(reference_model, A, x) for x in reference_model.sites)

    def test_degenerate_event(self, ring3):
        with pytest.raises(DegenerateEvent):
            kkl_check(ring3, Event(ring3.space, np.ones(8, dtype=bool)))


class TestSharpThreshold:
    def test_dictator_inside_hypothesis(self):
        family = bernoulli_product_family(3)
        A = dictator(family.at(0.5).space, "s0")
        report = sharp_threshold_check(family, A, 0.35, 0.65, np.linspace(0.35, 0.65, 5))
        assert report.passed
        assert all(point.delta == pytest.approx(point.p) for point in report.points)

    def test_hypothesis_fails_near_the_edge(self):
        family = bernoulli_product_family(3)
        A = dictator(family.at(0.5).space, "s0")
        with pytest.raises(ThresholdHypothesisFailed):
            sharp_threshold_check(family, A, 0.3, 0.7, np.linspace(0.3, 0.7, 5))

    def test_grid_inside_interval(self):
        family = bernoulli_product_family(2)
        A = dictator(family.at(0.5).space, "s0")
        with pytest.raises(BadArgs):
            sharp_threshold_check(family, A, 0.4, 0.6, [0.3, 0.5])

    def test_product_bound_tends_to_trivial(self):
        family = bernoulli_product_family(3)
        A = majority(family.at(0.5).space)
        report = sharp_threshold_check(family, A, 0.4, 0.6, np.linspace(0.4, 0.6, 3))
        assert report.product_passed
        assert math.exp(report.log_product_rhs) <= 1.0


if __name__ == "__main__":
    pytest.main([__file__])
