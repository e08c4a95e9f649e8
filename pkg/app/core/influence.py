"""
Influences of Increasing Events
Events on binary configuration spaces, pivotal sets, Russo's formula for
heat-bath families, the D_x-influence sandwich, and the sharp-threshold and
KKL-type bounds
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .constants import ConstantsReport, certify_constants
from .errors import (
    BadAlphabet,
    BadArgs,
    DegenerateEvent,
    NotHeatBath,
    NotIncreasing,
    ThresholdHypothesisFailed,
)
from .functionals import lp_norm
from .operators import d_x
from .statespace import (
    Alphabet,
    Measure,
    Model,
    Site,
    SiteSet,
    StateSpace,
    build_heat_bath_kernels,
    gibbs_measure,
)
from .talagrand import corollary_log_constant, log_talagrand_constant

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

BINARY = Alphabet((0, 1))
DERIVATIVE_STEP = 1e-3
DERIVATIVE_TOL = 1e-7
MAX_HALVINGS = 12
CONSTANT_TOL = 1e-12
LOG_E2 = 2.0


def _require_binary(space: StateSpace) -> None:
    if not space.alphabet.is_binary:
        raise BadAlphabet(f"Influences need a binary alphabet, got {space.alphabet.symbols}")


def _flipped(space: StateSpace, x: int) -> np.ndarray:
    """Index array of η^x (spin at position x flipped)"""
    index = np.arange(space.size, dtype=np.int64)
    return index + (1 - 2 * space.codes[:, x]) * space.radix[x]


def is_increasing(space: StateSpace, mask: Sequence[bool]) -> bool:
    """
    Up-set test by exhaustion: raising a single spin never leaves the event.

    Single flips suffice since every comparable pair is joined by a monotone path.
    """
    _require_binary(space)
    mask = np.asarray(mask, dtype=bool)
    for x in range(space.n_sites):
        low = space.codes[:, x] == 0
        if np.any(mask[low] & ~mask[_flipped(space, x)[low]]):
            return False
    return True


def up_closure(space: StateSpace, mask: Sequence[bool]) -> np.ndarray:
    """Smallest increasing event containing the mask"""
    _require_binary(space)
    closed = np.asarray(mask, dtype=bool).copy()
    changed = True
    while changed:
        changed = False
        for x in range(space.n_sites):
            low = np.flatnonzero((space.codes[:, x] == 0) & closed)
            targets = _flipped(space, x)[low]
            if not np.all(closed[targets]):
                closed[targets] = True
                changed = True
    return closed


@dataclass
class Event:
    """
    Subset of the enumerated Ω.

    ``increasing`` is computed by exhaustion at construction.
    """

    space: StateSpace
    mask: np.ndarray
    name: str = "event"
    increasing: bool = field(init=False)

    def __post_init__(self):
        _require_binary(self.space)
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != (self.space.size,):
            raise BadArgs(f"Event mask has shape {mask.shape}, expected ({self.space.size},)")
        self.mask = mask
        self.increasing = is_increasing(self.space, mask)

    def indicator(self) -> np.ndarray:
        return self.mask.astype(float)

    def probability(self, mu: Measure) -> float:
        return float(mu.weights @ self.indicator())


def compile_formula(space: StateSpace, formula: Mapping[str, Any]) -> np.ndarray:
    """
    Compile a monotone boolean formula to a mask.

    Grammar: {"site": s} | {"and": [...]} | {"or": [...]} |
    {"threshold": k, "of": [...]} (at least k of the subformulas hold).
    """
    _require_binary(space)
    if not isinstance(formula, Mapping):
        raise BadArgs(f"Formula must be an object, got {formula!r}")
    keys = set(formula)
    if keys == {"site"}:
        return space.codes[:, space.site_set.index(formula["site"])] == 1
    if keys == {"and"} or keys == {"or"}:
        (op,) = keys
        parts = [compile_formula(space, sub) for sub in formula[op]]
        if not parts:
            raise BadArgs(f"'{op}' needs at least one subformula")
        return np.logical_and.reduce(parts) if op == "and" else np.logical_or.reduce(parts)
    if keys == {"threshold", "of"}:
        parts = [compile_formula(space, sub) for sub in formula["of"]]
        k = int(formula["threshold"])
        if not 0 <= k <= len(parts):
            raise BadArgs(f"Threshold {k} is outside [0, {len(parts)}]")
        return np.sum(parts, axis=0) >= k
    raise BadArgs(f"Unknown formula node with keys {sorted(keys)}")


def event_from_formula(space: StateSpace, formula: Mapping[str, Any], name: str = "event") -> Event:
    return Event(space, compile_formula(space, formula), name)


def event_from_states(space: StateSpace, states: Sequence[Any], name: str = "event") -> Event:
    """Event listing its configurations explicitly (symbol sequences or site maps)"""
    mask = np.zeros(space.size, dtype=bool)
    for values in states:
        mask[space.index_of(values)] = True
    return Event(space, mask, name)


def dictator(space: StateSpace, site: Site) -> Event:
    return event_from_formula(space, {"site": site}, name=f"dictator_{site}")


def majority(space: StateSpace) -> Event:
    formula = {"threshold": space.n_sites // 2 + 1, "of": [{"site": s} for s in space.sites]}
    return event_from_formula(space, formula, name="majority")


def random_increasing_events(space: StateSpace, count: int, seed: int, density: float = 0.15) -> List[Event]:
    """Up-closures of seeded random subsets; degenerate events (∅, Ω) are redrawn"""
    rng = np.random.default_rng(seed)
    events: List[Event] = []
    while len(events) < count:
        closed = up_closure(space, rng.random(space.size) < density)
        if closed.any() and not closed.all():
            events.append(Event(space, closed, f"random_{len(events)}"))
    return events


def pivotal_mask(space: StateSpace, A: Event, x: Site) -> np.ndarray:
    """A_x = {η ∈ A : η^x ∉ A}"""
    position = space.site_set.index(x)
    return A.mask & ~A.mask[_flipped(space, position)]


def pivotal_measure(model: Model, A: Event, x: Site) -> float:
    """
    μ(A_x) by exhaustive summation.

    Raises:
        BadAlphabet: Unless E = {0, 1}
    """
    _require_binary(model.space)
    return float(model.mu.weights @ pivotal_mask(model.space, A, x))


def support(model: Model, A: Event, tol: float = CONSTANT_TOL) -> List[Site]:
    """Sites x for which D_x 1_A is not μ-a.s. constant"""
    positive = model.mu.weights > 0
    sites = []
    for x in model.sites:
        values = d_x(model, x, A.indicator())[positive]
        if values.size and values.max() - values.min() > tol:
            sites.append(x)
    return sites


class ParamFamily:
    """
    One-parameter family p ↦ (L_p, μ_p) on [a, b].

    Args:
        model_at: Builds the model at parameter p
        interval: (a, b)
        name: Label used in reports
    """

    def __init__(self, model_at: Callable[[float], Model], interval: Tuple[float, float], name: str = "family"):
        a, b = float(interval[0]), float(interval[1])
        if not a < b:
            raise BadArgs(f"Parameter interval must satisfy a < b, got [{a}, {b}]")
        self._model_at = model_at
        self.interval = (a, b)
        self.name = name
        self._models: Dict[float, Model] = {}

    def at(self, p: float) -> Model:
        a, b = self.interval
        if not a <= p <= b:
            raise BadArgs(f"Parameter {p} is outside [{a}, {b}]")
        key = float(p)
        if key not in self._models:
            self._models[key] = self._model_at(key)
        return self._models[key]

    def grid(self, points: int) -> np.ndarray:
        a, b = self.interval
        return np.linspace(a, b, points)

    def monotone_certificate(self, grid: Sequence[float]) -> bool:
        """p ↦ μ^p_{x,η}(1) nondecreasing on the grid, for every x and η"""
        values = np.stack([self.at(p).kernels.probs[:, :, 1] for p in grid])
        return bool(np.all(np.diff(values, axis=0) >= -CONSTANT_TOL))

    def event_monotone(self, A: Event, grid: Sequence[float]) -> bool:
        """p ↦ μ_p(A) nondecreasing on the grid"""
        values = np.array([A.probability(self.at(p).mu) for p in grid])
        return bool(np.all(np.diff(values) >= -CONSTANT_TOL))


def _binary_space(sites: Sequence[Site], neighborhood: Optional[Mapping[Site, Sequence[Site]]] = None) -> StateSpace:
    return StateSpace(BINARY, SiteSet(tuple(sites), neighborhood=neighborhood or {}))


def bernoulli_family(sites: Sequence[Site], interval: Tuple[float, float] = (0.05, 0.95)) -> ParamFamily:
    """Product Bernoulli(p) measures with their heat-bath kernels (μ^p_{x,η}(1) = p)"""
    space = _binary_space(sites)
    ones = space.codes.sum(axis=1)

    def model_at(p: float) -> Model:
        weights = p ** ones * (1.0 - p) ** (space.n_sites - ones)
        mu = Measure(space, weights / weights.sum())
        return Model(build_heat_bath_kernels(mu), mu, name=f"bernoulli(p={p:g})")

    return ParamFamily(model_at, interval, name="bernoulli")


def gibbs_field_family(
    sites: Sequence[Site],
    couplings: Sequence[Tuple[Site, Site, float]],
    beta: float = 1.0,
    base: float = 0.0,
    slope: float = 1.0,
    interval: Tuple[float, float] = (0.0, 1.0),
    neighborhood: Optional[Mapping[Site, Sequence[Site]]] = None,
    name: str = "gibbs_field",
) -> ParamFamily:
    """
    Binary Gibbs measures with field h(p) = base + slope·p and heat-bath kernels.

    With slope > 0 every μ^p_{x,η}(1) is increasing in p.
    """
    space = _binary_space(sites, neighborhood)

    def model_at(p: float) -> Model:
        mu = gibbs_measure(space, beta, field=base + slope * p, couplings=couplings)
        return Model(build_heat_bath_kernels(mu), mu, name=f"{name}(p={p:g})")

    return ParamFamily(model_at, interval, name=name)


def _richardson(func: Callable[[float], Any], p: float, h: float, tol: float = DERIVATIVE_TOL):
    """Central differences with Richardson extrapolation, halving h until estimates settle"""

    def central(step: float):
        return (np.asarray(func(p + step), dtype=float) - np.asarray(func(p - step), dtype=float)) / (2.0 * step)

    coarse = central(h)
    previous, error = None, math.inf
    for _ in range(MAX_HALVINGS):
        fine = central(h / 2.0)
        estimate = (4.0 * fine - coarse) / 3.0
        if previous is not None:
            error = float(np.max(np.abs(estimate - previous)))
            if error < tol:
                return estimate, error
        previous, coarse, h = estimate, fine, h / 2.0
    logger.warning(f"Richardson derivative did not settle below {tol:g} (last change {error:.3e})")
    return previous, error


def _check_step(family: ParamFamily, p: float, h: float) -> None:
    a, b = family.interval
    if not h > 0 or p - h < a or p + h > b:
        raise BadArgs(f"Need p ± h inside [{a}, {b}], got p={p}, h={h}")


def event_derivative(family: ParamFamily, A: Event, p: float, h: float = DERIVATIVE_STEP) -> Tuple[float, float]:
    """d/dp μ_p(A) with its Richardson error estimate"""
    _check_step(family, p, h)
    value, error = _richardson(lambda q: A.probability(family.at(q).mu), p, h)
    return float(value), error


def kernel_slope(family: ParamFamily, p: float, h: float = DERIVATIVE_STEP) -> Tuple[float, float]:
    """β_p = min over (x, η) of d/dp μ^p_{x,η}(1), with its error estimate"""
    _check_step(family, p, h)
    values, error = _richardson(lambda q: family.at(q).kernels.probs[:, :, 1], p, h)
    return float(np.min(values)), error


@dataclass
class RussoReport:
    p: float
    derivative: float
    derivative_error: float
    beta: float
    beta_error: float
    weighted_bound: float
    plain_bound: float
    passed: bool

    @property
    def gap(self) -> float:
        return self.derivative - self.weighted_bound

    def to_dict(self) -> Dict[str, Any]:
        return {**asdict(self), "gap": self.gap}


def _heat_bath_binary(model: Model, A: Event) -> None:
    _require_binary(model.space)
    if model.kernels.kind != "heat_bath":
        raise NotHeatBath(f"{model.name} uses '{model.kernels.kind}' kernels, not heat-bath")
    if not A.increasing:
        raise NotIncreasing(f"Event '{A.name}' is not increasing")


def russo_check(
    family: ParamFamily, A: Event, p: float, h: float = DERIVATIVE_STEP, slack: float = 1e-6
) -> RussoReport:
    """
    Check d/dp μ_p(A) ≥ β_p Σ_x μ_p(A_x)/sup_ζ μ^p_{x,ζ}(1) ≥ β_p Σ_x μ_p(A_x).

    Raises:
        NotIncreasing: If A is not an up-set
        NotHeatBath: If the family's kernels are not heat-bath kernels
        BadArgs: If p ± h leaves the parameter interval
    """
    model = family.at(p)
    _heat_bath_binary(model, A)
    derivative, derivative_error = event_derivative(family, A, p, h)
    beta, beta_error = kernel_slope(family, p, h)

    weighted, plain = 0.0, 0.0
    for x in model.sites:
        influence = pivotal_measure(model, A, x)
        top = float(model.kernels.probs[model.site_index(x), :, 1].max())
        weighted += influence / top
        plain += influence
    weighted *= beta
    plain *= beta
    passed = derivative >= weighted - slack and weighted >= plain - slack
    if not passed:
        logger.warning(f"Russo bound fails for '{A.name}' at p={p}: d/dp={derivative:.6g}, bound={weighted:.6g}")
    return RussoReport(
        p=float(p),
        derivative=derivative,
        derivative_error=derivative_error,
        beta=beta,
        beta_error=beta_error,
        weighted_bound=weighted,
        plain_bound=plain,
        passed=bool(passed),
    )


@dataclass
class SandwichReport:
    site: Site
    q: float
    lower: float
    middle: float
    upper: float
    passed: bool


def dx_indicator_bounds(model: Model, A: Event, x: Site, q: float = 2.0, slack: float = 1e-9) -> SandwichReport:
    """(inf_η μ_{x,η}(0))^q μ(A_x) ≤ ‖D_x 1_A‖_q^q ≤ 2μ(A_x), each side exact"""
    _require_binary(model.space)
    influence = pivotal_measure(model, A, x)
    floor = float(model.kernels.probs[model.site_index(x), :, 0].min())
    lower = floor ** q * influence
    middle = lp_norm(model.mu, d_x(model, x, A.indicator()), q) ** q
    upper = 2.0 * influence
    passed = lower <= middle + slack and middle <= upper + slack
    return SandwichReport(site=x, q=float(q), lower=lower, middle=middle, upper=upper, passed=bool(passed))


def delta(model: Model, A: Event) -> float:
    """δ = sup over (x, η) of μ_{x,η}(A_x)"""
    best = 0.0
    for x in model.sites:
        position = model.site_index(x)
        pivotal = pivotal_mask(model.space, A, x)
        for a in range(2):
            landing = pivotal[model.space.replaced(position, a)]
            mass = model.kernels.probs[position, :, a] * landing
            best = max(best, float(mass.max()))
    return best


@dataclass
class ThresholdPoint:
    p: float
    probability: float
    derivative: float
    alpha: float
    beta: float
    delta: float
    rho: float
    log_c1C: float
    log_rhs: float
    passed: bool


@dataclass
class ThresholdReport:
    event: str
    points: List[ThresholdPoint]
    differential_passed: bool
    p1: float
    p2: float
    product_lhs: float
    log_product_rhs: float
    product_passed: bool
    note: str = "relative to the frozen kernel constant c′"

    @property
    def passed(self) -> bool:
        return self.differential_passed and self.product_passed

    def to_dict(self) -> Dict[str, Any]:
        return {**asdict(self), "passed": self.passed}


def sharp_threshold_check(
    family: ParamFamily,
    A: Event,
    p1: float,
    p2: float,
    grid: Sequence[float],
    h: float = DERIVATIVE_STEP,
    seed: int = 0,
    restarts: int = 4,
    audit_size: int = 200,
    slack: float = 1e-6,
) -> ThresholdReport:
    """
    Differential sharp-threshold inequality on a grid and the integrated product bound.

    At every grid point: d/dp μ_p(A) ≥ β_p log(e²α_p²/δ_p)/(4c′C_p) · μ_p(A)(1 − μ_p(A)),
    with C_p = C(α_p⁻³, |N|, ρ_p) and ρ_p the audited log-Sobolev constant.
    At the endpoints: μ_{p1}(A)(1 − μ_{p2}(A)) ≤ (δ/(e²α²))^{(p2 − p1)/C′} with
    C′ = 4c′C(α⁻³, |N|, ρ)/β and extremes taken over the grid.

    Raises:
        ThresholdHypothesisFailed: If δ_p ≥ e²α_p² at some grid point
        BadArgs: If p1 ≥ p2 or a grid point is outside [p1, p2]
    """
    if not p1 < p2:
        raise BadArgs(f"Need p1 < p2, got {p1}, {p2}")
    grid = sorted(float(p) for p in grid)
    if not grid or grid[0] < p1 or grid[-1] > p2:
        raise BadArgs(f"Grid must be nonempty and inside [{p1}, {p2}]")

    points: List[ThresholdPoint] = []
    for p in grid:
        model = family.at(p)
        _heat_bath_binary(model, A)
        alpha, d = model.alpha, delta(model, A)
        if not d < math.e ** 2 * alpha ** 2:
            raise ThresholdHypothesisFailed(
                f"delta={d:.6g} >= e^2 alpha^2={math.e ** 2 * alpha ** 2:.6g} at p={p} for '{A.name}'"
            )
        constants: ConstantsReport = certify_constants(model, restarts=restarts, seed=seed, audit_size=audit_size)
        log_c1C = corollary_log_constant(log_talagrand_constant(alpha ** -3, model.nbhd_size, constants.rho))
        derivative, _ = event_derivative(family, A, p, h)
        beta, _ = kernel_slope(family, p, h)
        probability = A.probability(model.mu)
        spread = probability * (1.0 - probability)
        if d > 0 and beta > 0 and spread > 0:
            gain = LOG_E2 + 2.0 * math.log(alpha) - math.log(d)
            log_rhs = math.log(beta) + math.log(gain) - math.log(4.0) - log_c1C + math.log(spread)
        else:
            log_rhs = -math.inf
        passed = log_rhs == -math.inf or (derivative > 0 and math.log(derivative) >= log_rhs - slack)
        points.append(ThresholdPoint(
            p=p, probability=probability, derivative=derivative, alpha=alpha, beta=beta, delta=d,
            rho=constants.rho, log_c1C=log_c1C, log_rhs=log_rhs, passed=bool(passed),
        ))

    alpha = min(pt.alpha for pt in points)
    beta = min(pt.beta for pt in points)
    d = max(pt.delta for pt in points)
    rho = min(pt.rho for pt in points)
    nbhd_size = max(family.at(p).nbhd_size for p in grid)
    if beta > 0:
        log_c_prime = (
            math.log(4.0)
            + corollary_log_constant(log_talagrand_constant(alpha ** -3, nbhd_size, rho))
            - math.log(beta)
        )
        exponent = math.exp(math.log(p2 - p1) - log_c_prime)
    else:
        exponent = 0.0
    log_product_rhs = exponent * (math.log(d) - LOG_E2 - 2.0 * math.log(alpha)) if d > 0 else -math.inf
    product_lhs = A.probability(family.at(p1).mu) * (1.0 - A.probability(family.at(p2).mu))
    product_passed = product_lhs <= math.exp(log_product_rhs) * (1.0 + slack)

    report = ThresholdReport(
        event=A.name,
        points=points,
        differential_passed=all(pt.passed for pt in points),
        p1=float(p1),
        p2=float(p2),
        product_lhs=product_lhs,
        log_product_rhs=log_product_rhs,
        product_passed=bool(product_passed),
    )
    logger.info(f"Sharp threshold for '{A.name}' on [{p1}, {p2}]: passed={report.passed}")
    return report


@dataclass
class KKLReport:
    event: str
    lhs: float
    worst_site: Optional[Site]
    support: List[Site]
    R: float
    log_constant: float
    rhs: float
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def kkl_check(
    model: Model, A: Event, constants: Optional[ConstantsReport] = None, seed: int = 0, slack: float = 1e-6
) -> KKLReport:
    """
    sup_x μ(A_x) ≥ min(log(α⁴R/16)/(8CR), e²α²/2), R = |supp(A)|/[μ(A)(1 − μ(A))].

    Raises:
        DegenerateEvent: If μ(A) ∈ {0, 1}
    """
    _require_binary(model.space)
    probability = A.probability(model.mu)
    variance = probability * (1.0 - probability)
    if not variance > 0:
        raise DegenerateEvent(f"Event '{A.name}' has probability {probability}")
    if constants is None:
        constants = certify_constants(model, seed=seed)

    influences = {x: pivotal_measure(model, A, x) for x in model.sites}
    worst_site = max(influences, key=influences.get)
    lhs = influences[worst_site]
    sites = support(model, A)
    R = len(sites) / variance
    alpha = model.alpha
    log_constant = log_talagrand_constant(alpha ** -3, model.nbhd_size, constants.rho)

    inner = math.log(alpha ** 4 * R / 16.0) if R > 0 else -math.inf
    if inner <= 0:
        first = 0.0 if inner > -math.inf else -math.inf
    else:
        first = math.exp(math.log(inner) - math.log(8.0) - log_constant - math.log(R))
    rhs = min(first, math.e ** 2 * alpha ** 2 / 2.0)
    passed = lhs >= rhs * (1.0 - slack) if rhs > 0 else True
    return KKLReport(
        event=A.name, lhs=lhs, worst_site=worst_site, support=sites, R=R,
        log_constant=log_constant, rhs=rhs, passed=bool(passed),
    )
