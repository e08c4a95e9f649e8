"""
Shared fixtures for the inequality lab tests
"""
import os
import sys

import pytest

# Add the parent directory to sys.path so we can import our modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from app.core.constants import certify_constants, random_functions
from app.core.reference_models import REFERENCE_MODELS, ising_ring, product_2x2, single_bernoulli_site

CONFIG_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'configs'))


@pytest.fixture(scope="session")
def bernoulli_site():
    return single_bernoulli_site(0.3)


@pytest.fixture(scope="session")
def ring3():
    return ising_ring(3, beta=0.5)


@pytest.fixture(scope="session")
def product():
    return product_2x2()


@pytest.fixture(scope="session", params=sorted(REFERENCE_MODELS))
def reference_model(request):
    return REFERENCE_MODELS[request.param]()


@pytest.fixture(scope="session")
def certified():
    """Certified constants per reference model, computed once per session"""
    cache = {}

    def get(model):
        if model.name not in cache:
            cache[model.name] = certify_constants(model, seed=0)
        return cache[model.name]

    return get


@pytest.fixture
def functions():
    def build(model, count=100, seed=11):
        return random_functions(model.n_states, count, seed)

    return build


@pytest.fixture
def config_path():
    def path(name):
        return os.path.join(CONFIG_DIR, name)

    return path
