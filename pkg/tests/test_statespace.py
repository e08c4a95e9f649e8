"""
Tests for state spaces, kernel families and reference measures
"""
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from app.core.errors import BadAlphabet, BadArgs, CapExceeded, NotErgodic, SiteClash, UnknownSite, ZeroMass
from app.core.reference_models import ising_pair, single_bernoulli_site
from app.core.statespace import (
    Alphabet,
    KernelFamily,
    Measure,
    Model,
    SiteSet,
    StateSpace,
    build_heat_bath_kernels,
    build_table_kernels,
    check_detailed_balance,
    enumerate_states,
    finite_range_violations,
    gibbs_measure,
    make_model,
    product_model,
    stationary_measure,
)

BINARY = Alphabet((0, 1))


class TestEnumeration:
    """Lexicographic enumeration of E^G"""

    def test_order_and_bijection(self):
        space = StateSpace(BINARY, SiteSet(("a", "b", "c")))
        assert space.labels() == ["000", "001", "010", "011", "100", "101", "110", "111"]
        for i, configuration in enumerate(space.configurations()):
            assert space.index_of(configuration) == i

    def test_index_of_site_map(self):
        space = StateSpace(BINARY, SiteSet(("a", "b")))
        assert space.index_of({"a": 1, "b": 0}) == 2

    def test_configuration_as_dict(self):
        space = StateSpace(BINARY, SiteSet(("a", "b")))
        assert space.configurations()[2].as_dict() == {"a": 1, "b": 0}

    def test_ternary_alphabet(self):
        states = enumerate_states(Alphabet(("-", "0", "+")), SiteSet(("x", "y")))
        assert len(states) == 9
        assert states[5].values == ("0", "+")

    def test_cap_exceeded(self):
        with pytest.raises(CapExceeded):
            StateSpace(BINARY, SiteSet(tuple(f"s{i}" for i in range(5))), cap=16)

    def test_replaced(self):
        space = StateSpace(BINARY, SiteSet(("a", "b")))
        assert list(space.replaced(0, 1)) == [2, 3, 2, 3]
        assert list(space.replaced(1, 0)) == [0, 0, 2, 2]


class TestSiteSet:
    def test_duplicate_sites(self):
        with pytest.raises(SiteClash):
            SiteSet(("a", "a"))

    def test_unknown_neighbor(self):
        with pytest.raises(UnknownSite):
            SiteSet(("a", "b"), neighborhood={"a": ["z"]})

    def test_include_self(self):
        sites = SiteSet(("a", "b"), neighborhood={"a": ["b"]})
        assert sites.declared("a") == ("a", "b")
        assert sites.declared("b") is None

    def test_exclude_self_rejects_self(self):
        with pytest.raises(BadArgs):
            SiteSet(("a", "b"), neighborhood={"a": ["a"]}, include_self=False)

    def test_bad_alphabet(self):
        with pytest.raises(BadAlphabet):
            Alphabet((0,))


class TestMeasure:
    def test_normalization_enforced(self):
        space = StateSpace(BINARY, SiteSet(("x",)))
        with pytest.raises(BadArgs):
            Measure(space, [0.5, 0.6])

    def test_from_unnormalized(self):
        space = StateSpace(BINARY, SiteSet(("x",)))
        mu = Measure.from_unnormalized(space, [1.0, 3.0])
        assert np.allclose(mu.weights, [0.25, 0.75])
        assert mu.strictly_positive

    def test_gibbs_symmetry(self):
        space = StateSpace(BINARY, SiteSet(("a", "b")))
        mu = gibbs_measure(space, 0.5, couplings=[("a", "b", 1.0)])
        assert mu.weights[0] == pytest.approx(mu.weights[3])
        assert mu.weights[0] / mu.weights[1] == pytest.approx(np.exp(1.0))


class TestKernels:
    def test_heat_bath_rows_and_certificate(self, ring3):
        probs = ring3.kernels.probs
        assert np.allclose(probs.sum(axis=2), 1.0, atol=1e-12)
        assert ring3.kernels.kind == "heat_bath"
        assert ring3.nbhd_size == 3
        assert finite_range_violations(ring3.kernels) == []

    def test_declared_neighborhood_too_small(self):
        space = StateSpace(BINARY, SiteSet(("a", "b"), neighborhood={"a": [], "b": []}))
        mu = gibbs_measure(space, 1.0, couplings=[("a", "b", 1.0)])
        with pytest.raises(BadArgs):
            build_heat_bath_kernels(mu)

    def test_bernoulli_site_alpha(self, bernoulli_site):
        assert bernoulli_site.alpha == pytest.approx(0.3)
        assert bernoulli_site.nbhd_size == 1

    def test_heat_bath_needs_positive_measure(self):
        space = StateSpace(BINARY, SiteSet(("x",)))
        with pytest.raises(ZeroMass):
            build_heat_bath_kernels(Measure(space, [1.0, 0.0]))

    def test_table_kernels_shape_checked(self):
        space = StateSpace(BINARY, SiteSet(("x",)))
        with pytest.raises(BadArgs):
            build_table_kernels(space, {"x": [[0.5, 0.5]]})

    def test_unnormalized_rows_rejected(self):
        space = StateSpace(BINARY, SiteSet(("x",)))
        with pytest.raises(BadArgs):
            KernelFamily(space, np.array([[[0.5, 0.6], [0.5, 0.5]]]), {"x": ("x",)})


class TestDetailedBalance:
    def test_reference_models_balanced(self, reference_model):
        report = check_detailed_balance(reference_model, tol=1e-10)
        assert report.ok
        assert report.worst_violation <= 1e-10

    def test_mismatched_measure_detected(self):
        space = StateSpace(BINARY, SiteSet(("x",)))
        kernels = build_heat_bath_kernels(Measure(space, [0.7, 0.3]))
        model = Model(kernels, Measure(space, [0.5, 0.5]))
        report = check_detailed_balance(model)
        assert not report.ok
        assert report.witness["site"] == "x"


class TestStationary:
    def test_recovers_gibbs_measure(self):
        model = ising_pair(beta=0.7, field=0.1)
        mu = stationary_measure(model.kernels)
        assert np.allclose(mu.weights, model.mu.weights, atol=1e-10)

    def test_make_model_solves_for_measure(self):
        space = StateSpace(BINARY, SiteSet(("x",)))
        kernels = build_table_kernels(space, {"x": [[0.25, 0.75], [0.25, 0.75]]})
        model = make_model(kernels)
        assert np.allclose(model.mu.weights, [0.25, 0.75])
        assert check_detailed_balance(model).ok

    def test_reducible_kernels(self):
        space = StateSpace(BINARY, SiteSet(("x",)))
        kernels = build_table_kernels(space, {"x": [[1.0, 0.0], [0.0, 1.0]]})
        with pytest.raises(NotErgodic):
            stationary_measure(kernels)


class TestProduct:
    def test_product_of_pairs(self, product):
        assert product.n_states == 16
        assert product.sites == ("a", "b", "c", "d")
        assert product.kernels.kind == "heat_bath"
        assert check_detailed_balance(product).ok

    def test_product_weights_factor(self):
        left, right = single_bernoulli_site(0.3), ising_pair(("c", "d"))
        joint = product_model(left, right)
        assert joint.mu.weights[1 * 4 + 2] == pytest.approx(left.mu.weights[1] * right.mu.weights[2])

    def test_include_self_must_agree(self):
        space = StateSpace(BINARY, SiteSet(("c",), include_self=False))
        mu = Measure(space, [0.4, 0.6])
        excluding = Model(build_heat_bath_kernels(mu), mu, name="exclude_self")
        assert excluding.kernels.range_certificate["c"] == ()
        with pytest.raises(BadArgs, match="include_self"):
            product_model(single_bernoulli_site(0.3), excluding)

    def test_shared_sites_rejected(self):
        with pytest.raises(SiteClash):
            product_model(ising_pair(("a", "b")), ising_pair(("b", "c")))


if __name__ == "__main__":
    pytest.main([__file__])
