"""
State Space and Kernel Families
Enumerates the configuration space E^G, builds finite-range resampling kernels
(heat-bath or explicit tables) and the reference measures they are reversible for
"""

import logging
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Dict, Hashable, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
from scipy import linalg

from .errors import (
    BadAlphabet,
    BadArgs,
    CapExceeded,
    NotErgodic,
    SiteClash,
    UnknownSite,
    ZeroMass,
)

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

Site = Hashable

DEFAULT_STATE_CAP = 2 ** 20
NORMALIZATION_TOL = 1e-12
STRUCTURAL_TOL = 1e-10
ERGODIC_TOL = 1e-9


@dataclass(frozen=True)
class Alphabet:
    """Finite ordered set of spin values E"""

    symbols: Tuple[Any, ...]

    def __post_init__(self):
        symbols = tuple(self.symbols)
        if len(symbols) < 2:
            raise BadAlphabet(f"Alphabet needs at least 2 symbols, got {len(symbols)}")
        if len(set(symbols)) != len(symbols):
            raise BadAlphabet(f"Alphabet has duplicate symbols: {symbols}")
        object.__setattr__(self, "symbols", symbols)

    @property
    def size(self) -> int:
        return len(self.symbols)

    def index(self, symbol: Any) -> int:
        try:
            return self.symbols.index(symbol)
        except ValueError:
            raise BadAlphabet(f"Symbol {symbol!r} is not in alphabet {self.symbols}")

    @property
    def is_binary(self) -> bool:
        return self.size == 2


@dataclass(frozen=True)
class SiteSet:
    """
    Ordered finite site set with optional declared neighborhoods.

    Args:
        sites: Site identifiers in enumeration order
        neighborhood: Declared dependency sets N(x); sites missing from the map are undeclared
        include_self: Whether each N(x) contains x itself
    """

    sites: Tuple[Site, ...]
    neighborhood: Mapping[Site, Tuple[Site, ...]] = field(default_factory=dict)
    include_self: bool = True

    def __post_init__(self):
        sites = tuple(self.sites)
        if not sites:
            raise BadArgs("Site set must not be empty")
        if len(set(sites)) != len(sites):
            raise SiteClash(f"Duplicate site identifiers in {sites}")
        object.__setattr__(self, "sites", sites)

        known = set(sites)
        normalized: Dict[Site, Tuple[Site, ...]] = {}
        for site, members in dict(self.neighborhood).items():
            if site not in known:
                raise UnknownSite(f"Neighborhood declared for unknown site {site!r}")
            members = list(members)
            for member in members:
                if member not in known:
                    raise UnknownSite(f"Neighborhood of {site!r} names unknown site {member!r}")
            if self.include_self and site not in members:
                members.append(site)
            if not self.include_self and site in members:
                raise BadArgs(f"Neighborhood of {site!r} contains the site itself but include_self is off")
            # keep site order so certificates compare deterministically
            normalized[site] = tuple(s for s in sites if s in set(members))
        object.__setattr__(self, "neighborhood", MappingProxyType(normalized))

    def __len__(self) -> int:
        return len(self.sites)

    def index(self, site: Site) -> int:
        try:
            return self.sites.index(site)
        except ValueError:
            raise UnknownSite(f"Unknown site {site!r}")

    def declared(self, site: Site) -> Optional[Tuple[Site, ...]]:
        return self.neighborhood.get(site)


@dataclass(frozen=True)
class Configuration:
    """A single configuration η, one symbol per site in site order"""

    sites: Tuple[Site, ...]
    values: Tuple[Any, ...]

    def __getitem__(self, site: Site) -> Any:
        return self.values[self.sites.index(site)]

    def as_dict(self) -> Dict[Site, Any]:
        return dict(zip(self.sites, self.values))

    def label(self) -> str:
        texts = [str(value) for value in self.values]
        if all(len(text) == 1 for text in texts):
            return "".join(texts)
        return ",".join(texts)


class StateSpace:
    """
    Enumerated configuration space, lexicographic in (site order, symbol order).

    State i has symbol codes ``codes[i]``; the first site is the most significant digit.
    """

    def __init__(self, alphabet: Alphabet, site_set: SiteSet, cap: int = DEFAULT_STATE_CAP):
        n_sites = len(site_set)
        size = alphabet.size ** n_sites
        if size > cap:
            raise CapExceeded(
                f"|E|^|G| = {alphabet.size}^{n_sites} = {size} exceeds the state cap {cap}"
            )
        self.alphabet = alphabet
        self.site_set = site_set
        self.cap = cap
        self.size = size
        self.radix = alphabet.size ** np.arange(n_sites - 1, -1, -1, dtype=np.int64)
        index = np.arange(size, dtype=np.int64)
        self.codes = (index[:, None] // self.radix[None, :]) % alphabet.size
        self.codes.setflags(write=False)

    @property
    def n_sites(self) -> int:
        return len(self.site_set)

    @property
    def sites(self) -> Tuple[Site, ...]:
        return self.site_set.sites

    def configuration(self, i: int) -> Configuration:
        values = tuple(self.alphabet.symbols[c] for c in self.codes[i])
        return Configuration(self.sites, values)

    def configurations(self) -> List[Configuration]:
        return [self.configuration(i) for i in range(self.size)]

    def labels(self) -> List[str]:
        return [self.configuration(i).label() for i in range(self.size)]

    def index_of(self, values: Union[Configuration, Sequence[Any], Mapping[Site, Any]]) -> int:
        """Index of a configuration given as Configuration, symbol sequence or site map"""
        if isinstance(values, Configuration):
            values = values.values
        elif isinstance(values, Mapping):
            missing = [s for s in self.sites if s not in values]
            if missing:
                raise BadArgs(f"Configuration misses sites {missing}")
            values = [values[s] for s in self.sites]
        values = list(values)
        if len(values) != self.n_sites:
            raise BadArgs(f"Configuration has {len(values)} values for {self.n_sites} sites")
        codes = np.array([self.alphabet.index(v) for v in values], dtype=np.int64)
        return int(codes @ self.radix)

    def replaced(self, x: int, a: int) -> np.ndarray:
        """Index array of η_{x↦a} for every state η (x and a are positions)"""
        index = np.arange(self.size, dtype=np.int64)
        return index + (a - self.codes[:, x]) * self.radix[x]

    def restriction_keys(self, positions: Sequence[int]) -> np.ndarray:
        """Integer key per state identifying its restriction to the given site positions"""
        positions = list(positions)
        if not positions:
            return np.zeros(self.size, dtype=np.int64)
        sub_radix = self.alphabet.size ** np.arange(len(positions) - 1, -1, -1, dtype=np.int64)
        return self.codes[:, positions] @ sub_radix


def enumerate_states(alphabet: Alphabet, site_set: SiteSet, cap: int = DEFAULT_STATE_CAP) -> List[Configuration]:
    """
    Enumerate Ω = E^G in lexicographic order.

    Args:
        alphabet: Spin values
        site_set: Sites in enumeration order
        cap: Maximum number of states

    Returns:
        Configurations, position i corresponding to state index i

    Raises:
        CapExceeded: If |E|^|G| > cap
    """
    return StateSpace(alphabet, site_set, cap).configurations()


@dataclass(frozen=True, eq=False)
class Measure:
    """Probability vector over an enumerated state space"""

    space: StateSpace
    weights: np.ndarray
    strictly_positive: bool = field(init=False)

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float)
        if weights.shape != (self.space.size,):
            raise BadArgs(f"Measure has shape {weights.shape}, expected ({self.space.size},)")
        if not np.all(np.isfinite(weights)):
            raise BadArgs("Measure has non-finite weights")
        if np.any(weights < 0):
            raise BadArgs(f"Measure has negative weight {weights.min():.3e}")
        total = weights.sum()
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise BadArgs(f"Measure weights sum to {total!r}, not 1")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "strictly_positive", bool(np.all(weights > 0)))

    @classmethod
    def from_unnormalized(cls, space: StateSpace, weights: Sequence[float]) -> "Measure":
        weights = np.asarray(weights, dtype=float)
        total = weights.sum()
        if total <= 0:
            raise ZeroMass("Measure has zero total mass")
        return cls(space, weights / total)

    def expect(self, f: np.ndarray) -> float:
        return float(self.weights @ np.asarray(f, dtype=float))


def _finite_range_violations(
    space: StateSpace, probs: np.ndarray, certificate: Mapping[Site, Tuple[Site, ...]], limit: int
) -> List[Dict[str, Any]]:
    witnesses: List[Dict[str, Any]] = []
    for x, site in enumerate(space.sites):
        positions = [space.site_set.index(s) for s in certificate[site]]
        keys = space.restriction_keys(positions)
        _, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
        representative = first[inverse]
        differs = np.any(probs[x] != probs[x][representative], axis=1)
        for i in np.flatnonzero(differs)[: max(limit - len(witnesses), 0)]:
            witnesses.append({"site": site, "state": int(i), "agrees_with": int(representative[i])})
        if len(witnesses) >= limit:
            break
    return witnesses


@dataclass(frozen=True, eq=False)
class KernelFamily:
    """
    Resampling kernels μ_{x,η} for every site x and state η.

    ``probs[x, i, a]`` is the probability that site position x resamples to symbol
    position a from state i. ``range_certificate`` maps each site to the neighborhood
    its kernel depends on; the dependency is checked exactly at construction.
    """

    space: StateSpace
    probs: np.ndarray
    range_certificate: Mapping[Site, Tuple[Site, ...]]
    kind: str = "table"

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        expected = (self.space.n_sites, self.space.size, self.space.alphabet.size)
        if probs.shape != expected:
            raise BadArgs(f"Kernel array has shape {probs.shape}, expected {expected}")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise BadArgs("Kernel probabilities must be finite and nonnegative")
        worst = float(np.max(np.abs(probs.sum(axis=2) - 1.0)))
        if worst > NORMALIZATION_TOL:
            raise BadArgs(f"Kernel rows are not normalized (worst deviation {worst:.3e})")
        certificate = {}
        for site in self.space.sites:
            if site not in self.range_certificate:
                raise BadArgs(f"No range certificate for site {site!r}")
            members = tuple(self.range_certificate[site])
            for member in members:
                self.space.site_set.index(member)
            certificate[site] = members
        violations = _finite_range_violations(self.space, probs, certificate, limit=5)
        if violations:
            raise BadArgs(f"Kernels violate their declared finite range: {violations}")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "range_certificate", MappingProxyType(certificate))

    @property
    def alpha(self) -> float:
        return float(self.probs.min())

    @property
    def neighborhood_size(self) -> int:
        return max(len(members) for members in self.range_certificate.values())

    def kernel(self, site: Site, state: int) -> np.ndarray:
        return self.probs[self.space.site_set.index(site), state]

    def psi_matrix(self, x: int) -> np.ndarray:
        """Dense matrix of Ψ_x for site position x"""
        size = self.space.size
        matrix = np.zeros((size, size))
        rows = np.arange(size)
        for a in range(self.space.alphabet.size):
            matrix[rows, self.space.replaced(x, a)] += self.probs[x, :, a]
        return matrix

    def rate_matrix(self) -> np.ndarray:
        """Q = Σ_x (Ψ_x − I)"""
        size = self.space.size
        total = np.zeros((size, size))
        for x in range(self.space.n_sites):
            total += self.psi_matrix(x)
        total -= self.space.n_sites * np.eye(size)
        return total


def finite_range_violations(kernels: KernelFamily, limit: int = 10) -> List[Dict[str, Any]]:
    """Exhaustive agreement test of the range certificate; empty when it holds"""
    return _finite_range_violations(kernels.space, kernels.probs, kernels.range_certificate, limit)


def _derive_neighborhoods(space: StateSpace, probs: np.ndarray, tol: float) -> Dict[Site, Tuple[Site, ...]]:
    derived = {}
    for x, site in enumerate(space.sites):
        members = {site} if space.site_set.include_self else set()
        for y, other in enumerate(space.sites):
            if y == x:
                continue
            for a in range(space.alphabet.size):
                shifted = probs[x][space.replaced(y, a)]
                if np.max(np.abs(shifted - probs[x])) > tol:
                    members.add(other)
                    break
        derived[site] = tuple(s for s in space.sites if s in members)
    return derived


def _snap_to_certificate(space: StateSpace, probs: np.ndarray, certificate: Mapping[Site, Tuple[Site, ...]]) -> np.ndarray:
    snapped = probs.copy()
    for x, site in enumerate(space.sites):
        positions = [space.site_set.index(s) for s in certificate[site]]
        keys = space.restriction_keys(positions)
        _, inverse = np.unique(keys, return_inverse=True)
        inverse = inverse.ravel()
        counts = np.bincount(inverse)
        for a in range(space.alphabet.size):
            means = np.bincount(inverse, weights=probs[x, :, a]) / counts
            snapped[x, :, a] = means[inverse]
    snapped /= snapped.sum(axis=2, keepdims=True)
    return snapped


def _resolve_certificate(
    space: StateSpace, derived: Mapping[Site, Tuple[Site, ...]]
) -> Dict[Site, Tuple[Site, ...]]:
    certificate = {}
    for site in space.sites:
        declared = space.site_set.declared(site)
        if declared is None:
            certificate[site] = tuple(derived[site])
            continue
        missing = set(derived[site]) - set(declared)
        if missing:
            raise BadArgs(
                f"Kernel at {site!r} depends on {sorted(map(str, missing))} outside its declared neighborhood"
            )
        certificate[site] = tuple(declared)
    return certificate


def build_heat_bath_kernels(mu: Measure, site_set: Optional[SiteSet] = None, tol: float = STRUCTURAL_TOL) -> KernelFamily:
    """
    Build the heat-bath (Gibbs sampler) kernels of a measure.

    μ_{x,ξ}(a) = μ(η(x) = a | η = ξ off x). The range certificate is derived by an
    exhaustive agreement test and, if the site set declares neighborhoods, checked
    against them.

    Args:
        mu: Reference measure
        site_set: Site set (defaults to the measure's own)
        tol: Tolerance used to decide whether a kernel depends on a site

    Returns:
        Heat-bath KernelFamily

    Raises:
        ZeroMass: If μ is not strictly positive
    """
    space = mu.space
    if site_set is not None and tuple(site_set.sites) != tuple(space.sites):
        raise BadArgs("Site set does not match the measure's state space")
    if not mu.strictly_positive:
        state = int(np.flatnonzero(mu.weights <= 0)[0])
        raise ZeroMass(f"Heat-bath kernels need a strictly positive measure, μ({space.configuration(state).label()}) = 0")

    k = space.alphabet.size
    probs = np.empty((space.n_sites, space.size, k))
    for x in range(space.n_sites):
        stack = np.stack([mu.weights[space.replaced(x, a)] for a in range(k)], axis=1)
        probs[x] = stack / stack.sum(axis=1)[:, None]

    certificate = _resolve_certificate(space, _derive_neighborhoods(space, probs, tol))
    probs = _snap_to_certificate(space, probs, certificate)
    logger.info(f"Built heat-bath kernels on {space.size} states, neighborhood sizes "
                f"{[len(certificate[s]) for s in space.sites]}")
    return KernelFamily(space, probs, certificate, kind="heat_bath")


def build_table_kernels(space: StateSpace, table: Mapping[Site, Sequence[Sequence[float]]]) -> KernelFamily:
    """
    Build kernels from explicit per-state probability tables.

    Args:
        space: Enumerated state space
        table: For each site, one probability vector per state (in state order)

    Returns:
        KernelFamily with declared (or exactly derived) range certificate
    """
    probs = np.empty((space.n_sites, space.size, space.alphabet.size))
    for x, site in enumerate(space.sites):
        if site not in table:
            raise BadArgs(f"Kernel table has no entry for site {site!r}")
        rows = np.asarray(table[site], dtype=float)
        if rows.shape != probs.shape[1:]:
            raise BadArgs(f"Kernel table for {site!r} has shape {rows.shape}, expected {probs.shape[1:]}")
        probs[x] = rows
    certificate = _resolve_certificate(space, _derive_neighborhoods(space, probs, tol=0.0))
    return KernelFamily(space, probs, certificate, kind="table")


def gibbs_measure(
    space: StateSpace,
    beta: float,
    field: Union[float, Mapping[Site, float]] = 0.0,
    couplings: Sequence[Tuple[Site, Site, float]] = (),
) -> Measure:
    """
    Gibbs measure μ(η) ∝ exp(β[Σ J_xy s_x s_y + Σ h_x s_x]).

    Spins are the alphabet positions mapped evenly onto [−1, 1] (binary: −1, +1).
    """
    spins = np.linspace(-1.0, 1.0, space.alphabet.size)[space.codes]
    if isinstance(field, Mapping):
        h = np.array([float(field.get(site, 0.0)) for site in space.sites])
    else:
        h = np.full(space.n_sites, float(field))
    energy = spins @ h
    for x, y, coupling in couplings:
        i, j = space.site_set.index(x), space.site_set.index(y)
        energy = energy + float(coupling) * spins[:, i] * spins[:, j]
    log_weights = float(beta) * energy
    weights = np.exp(log_weights - log_weights.max())
    return Measure(space, weights / weights.sum())


@dataclass(frozen=True, eq=False)
class Model:
    """
    A reversible resampling dynamics: kernels plus reference measure.

    Detailed balance is not enforced here; loaders call check_detailed_balance.
    """

    kernels: KernelFamily
    mu: Measure
    name: str = "model"
    alpha: float = field(init=False)
    _cache: Dict[str, Any] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kernels.space is not self.mu.space:
            raise BadArgs("Kernels and measure live on different state spaces")
        object.__setattr__(self, "alpha", self.kernels.alpha)

    @property
    def space(self) -> StateSpace:
        return self.kernels.space

    @property
    def alphabet(self) -> Alphabet:
        return self.space.alphabet

    @property
    def site_set(self) -> SiteSet:
        return self.space.site_set

    @property
    def sites(self) -> Tuple[Site, ...]:
        return self.space.sites

    @property
    def n_states(self) -> int:
        return self.space.size

    @property
    def nbhd_size(self) -> int:
        return self.kernels.neighborhood_size

    def site_index(self, site: Site) -> int:
        return self.site_set.index(site)


def make_model(kernels: KernelFamily, mu: Optional[Measure] = None, name: str = "model") -> Model:
    """Pair kernels with a measure, solving for the stationary one when none is given"""
    if mu is None:
        mu = stationary_measure(kernels)
    return Model(kernels, mu, name)


@dataclass
class DetailedBalanceReport:
    ok: bool
    worst_violation: float
    witness: Optional[Dict[str, Any]] = None


def check_detailed_balance(model: Model, tol: float = STRUCTURAL_TOL) -> DetailedBalanceReport:
    """
    Check μ(η)μ_{x,η}(a) = μ(η_{x↦a})μ_{x,η_{x↦a}}(η(x)) for all x, η, a.

    Returns:
        Report with the worst absolute violation and where it occurs
    """
    space, probs, weights = model.space, model.kernels.probs, model.mu.weights
    worst, witness = 0.0, None
    states = np.arange(space.size)
    for x in range(space.n_sites):
        back = space.codes[:, x]
        for a in range(space.alphabet.size):
            target = space.replaced(x, a)
            violation = np.abs(weights * probs[x, :, a] - weights[target] * probs[x, target, back])
            i = int(np.argmax(violation))
            if violation[i] > worst:
                worst = float(violation[i])
                witness = {
                    "site": space.sites[x],
                    "state": space.configuration(int(states[i])).label(),
                    "symbol": space.alphabet.symbols[a],
                }
    ok = worst <= tol
    if not ok:
        logger.warning(f"Detailed balance fails for {model.name}: worst violation {worst:.3e} at {witness}")
    return DetailedBalanceReport(ok=ok, worst_violation=worst, witness=witness)


def stationary_measure(kernels: KernelFamily) -> Measure:
    """
    Solve μQ = 0 for the rate matrix Q = Σ_x (Ψ_x − I).

    Raises:
        NotErgodic: If the jump graph has several closed classes or the null space of
            Q^T has dimension > 1 at tolerance 1e−9
    """
    space = kernels.space
    rates = kernels.rate_matrix()

    jumps = nx.DiGraph()
    jumps.add_nodes_from(range(space.size))
    off_diagonal = rates - np.diag(np.diag(rates))
    jumps.add_edges_from(zip(*np.nonzero(off_diagonal > 0)))
    closed_classes = nx.number_attracting_components(jumps)
    if closed_classes != 1:
        raise NotErgodic(f"Generator has {closed_classes} closed communicating classes")

    null = linalg.null_space(rates.T, rcond=ERGODIC_TOL)
    if null.shape[1] != 1:
        raise NotErgodic(f"Invariant subspace has dimension {null.shape[1]}")
    vector = null[:, 0] / null[:, 0].sum()
    vector[(vector < 0) & (vector >= -NORMALIZATION_TOL)] = 0.0
    if np.any(vector < 0):
        raise NotErgodic(f"Invariant vector has negative entry {vector.min():.3e}")
    return Measure(space, vector / vector.sum())


def product_model(m1: Model, m2: Model, name: Optional[str] = None) -> Model:
    """
    Independent product of two models on disjoint site sets.

    The sites of m1 come first, so state (i1, i2) has index i1·|Ω₂| + i2.

    Raises:
        SiteClash: If the site sets intersect
        BadAlphabet: If the alphabets differ
        BadArgs: If one factor counts x in its own neighborhood and the other does not
    """
    shared = set(m1.sites) & set(m2.sites)
    if shared:
        raise SiteClash(f"Models share sites {sorted(map(str, shared))}")
    if m1.alphabet != m2.alphabet:
        raise BadAlphabet(f"Product needs a common alphabet, got {m1.alphabet.symbols} and {m2.alphabet.symbols}")
    if m1.site_set.include_self != m2.site_set.include_self:
        raise BadArgs("Product needs factors that agree on include_self")

    certificate = dict(m1.kernels.range_certificate)
    certificate.update(m2.kernels.range_certificate)
    site_set = SiteSet(
        m1.sites + m2.sites,
        neighborhood=certificate,
        include_self=m1.site_set.include_self,
    )
    space = StateSpace(m1.alphabet, site_set, cap=max(m1.space.cap, m2.space.cap))

    n1, n2 = m1.n_states, m2.n_states
    blocks = [np.repeat(m1.kernels.probs[x], n2, axis=0) for x in range(m1.space.n_sites)]
    blocks += [np.tile(m2.kernels.probs[y], (n1, 1)) for y in range(m2.space.n_sites)]
    kind = "heat_bath" if m1.kernels.kind == m2.kernels.kind == "heat_bath" else "table"
    kernels = KernelFamily(space, np.stack(blocks), site_set.neighborhood, kind=kind)
    mu = Measure(space, np.outer(m1.mu.weights, m2.mu.weights).ravel())
    return Model(kernels, mu, name or f"{m1.name}x{m2.name}")
