"""
Reference Models
The small models every verification suite runs on: a single Bernoulli site, a
3-site Ising ring with heat-bath dynamics, and a 2×2 product of coupled pairs
"""

import logging
from typing import Callable, Dict, List, Sequence

from .influence import BINARY, ParamFamily, bernoulli_family, gibbs_field_family
from .statespace import (
    Measure,
    Model,
    SiteSet,
    StateSpace,
    build_heat_bath_kernels,
    gibbs_measure,
    product_model,
)

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def heat_bath_model(mu: Measure, name: str) -> Model:
    return Model(build_heat_bath_kernels(mu), mu, name=name)


def single_bernoulli_site(p: float = 0.3) -> Model:
    """One site with μ(1) = p; Ψ_x f = ∫ f dμ"""
    space = StateSpace(BINARY, SiteSet(("x",)))
    return heat_bath_model(Measure(space, [1.0 - p, p]), name=f"bernoulli_site(p={p:g})")


def ising_ring(n: int = 3, beta: float = 0.5, field: float = 0.0, coupling: float = 1.0) -> Model:
    """Ising heat-bath dynamics on the cycle s0 - s1 - ... - s(n-1) - s0"""
    sites = tuple(f"s{i}" for i in range(n))
    couplings = [(sites[i], sites[(i + 1) % n], coupling) for i in range(n)] if n > 2 else [(sites[0], sites[1], coupling)]
    space = StateSpace(BINARY, SiteSet(sites))
    mu = gibbs_measure(space, beta, field=field, couplings=couplings)
    return heat_bath_model(mu, name=f"ising_ring(n={n}, beta={beta:g})")


def ising_pair(sites: Sequence[str] = ("a", "b"), beta: float = 0.5, field: float = 0.0, coupling: float = 1.0) -> Model:
    space = StateSpace(BINARY, SiteSet(tuple(sites)))
    mu = gibbs_measure(space, beta, field=field, couplings=[(sites[0], sites[1], coupling)])
    return heat_bath_model(mu, name=f"ising_pair({sites[0]}{sites[1]}, beta={beta:g})")


def product_2x2(beta_left: float = 0.5, beta_right: float = 0.8) -> Model:
    """Independent product of two coupled 2-site pairs (16 states)"""
    left = ising_pair(("a", "b"), beta=beta_left, field=0.2)
    right = ising_pair(("c", "d"), beta=beta_right)
    return product_model(left, right, name="product_2x2")


REFERENCE_MODELS: Dict[str, Callable[[], Model]] = {
    "bernoulli_site": single_bernoulli_site,
    "ising_ring3": ising_ring,
    "product_2x2": product_2x2,
}


def reference_models() -> List[Model]:
    models = [build() for build in REFERENCE_MODELS.values()]
    logger.info(f"Built reference models: {[m.name for m in models]}")
    return models


def bernoulli_product_family(n_sites: int = 3) -> ParamFamily:
    return bernoulli_family(tuple(f"s{i}" for i in range(n_sites)))


def dependent_pair_family(beta: float = 1.0, coupling: float = 0.5) -> ParamFamily:
    """Two coupled spins with field h(p) = p − 1/2 over p ∈ [0, 1]"""
    return gibbs_field_family(
        ("a", "b"), [("a", "b", coupling)], beta=beta, base=-0.5, slope=1.0,
        interval=(0.0, 1.0), name="dependent_pair",
    )
