"""
Poisson Graphical Construction
Samples unit-rate Poisson clocks on sites × [0, t], composes the exact resampling
operators along a realization, and estimates P_t f by Monte Carlo
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from .errors import BadArgs, NegativeTime, OrderViolated
from .operators import FunctionOnOmega, as_function, psi_x
from .statespace import Model, Site

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

# Samples per stream; streams (not workers) fix the random numbers, so the estimate
# does not depend on the worker count.
BLOCK_SIZE = 256
MIN_SAMPLES = 100
FACTORIZATION_TOL = 1e-12


@dataclass(frozen=True)
class PoissonRealization:
    """Finite set of (site, time) points with strictly increasing times in [0, horizon]"""

    points: Tuple[Tuple[Site, float], ...]
    horizon: float

    def __post_init__(self):
        points = tuple((site, float(time)) for site, time in self.points)
        times = [time for _, time in points]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise BadArgs("Realization times must be strictly increasing")
        if times and (times[0] < 0 or times[-1] > self.horizon):
            raise BadArgs(f"Realization times must lie in [0, {self.horizon}]")
        object.__setattr__(self, "points", points)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def first_time(self) -> float:
        return self.points[0][1] if self.points else float("inf")

    @property
    def last_time(self) -> float:
        return self.points[-1][1] if self.points else float("-inf")


@dataclass(frozen=True)
class RngStream:
    """Reproducible numpy generator for one (seed, stream id) pair"""

    seed: int
    stream_id: int

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,)))


def sample_ppp(model: Model, t: float, rng: np.random.Generator) -> PoissonRealization:
    """
    Sample independent unit-rate Poisson clocks on every site up to time t.

    Interarrival times are exponential(1); the merged points are sorted by time and
    the whole draw is repeated on a (measure-zero) time tie.

    Raises:
        NegativeTime: If t < 0
    """
    if t < 0:
        raise NegativeTime(f"Horizon must be nonnegative, got {t}")
    while True:
        points: List[Tuple[Site, float]] = []
        for site in model.sites:
            clock = rng.exponential(1.0)
            while clock <= t:
                points.append((site, clock))
                clock += rng.exponential(1.0)
        points.sort(key=lambda point: point[1])
        times = [time for _, time in points]
        if len(set(times)) == len(times):
            return PoissonRealization(tuple(points), float(t))
        logger.debug("Time tie in Poisson realization, redrawing")


def apply_psi_set(model: Model, realization: PoissonRealization, f: Sequence[float]) -> FunctionOnOmega:
    """
    Ψ_A f = Ψ_{x₁}Ψ_{x₂}⋯Ψ_{xₙ} f for the points of A in increasing time order.

    The operator on the right acts first on f, so the earliest update is the
    outermost factor: this is the transition operator of the chain that resamples
    x₁ first, then x₂, and so on.
    """
    result = as_function(model, f).copy()
    for site, _ in reversed(realization.points):
        result = psi_x(model, site, result)
    return result


@dataclass
class FactorizationReport:
    ok: bool
    max_difference: float


def check_factorization(
    model: Model, A: PoissonRealization, B: PoissonRealization, f: Sequence[float]
) -> FactorizationReport:
    """
    Check Ψ_{A∪B} f = Ψ_A Ψ_B f for A entirely before B.

    Raises:
        OrderViolated: If some time of A is not below every time of B
    """
    if len(A) and len(B) and not A.last_time < B.first_time:
        raise OrderViolated(f"A ends at {A.last_time} but B starts at {B.first_time}")
    union = PoissonRealization(A.points + B.points, max(A.horizon, B.horizon))
    joint = apply_psi_set(model, union, f)
    nested = apply_psi_set(model, A, apply_psi_set(model, B, f))
    difference = float(np.max(np.abs(joint - nested)))
    scale = max(1.0, float(np.max(np.abs(f))))
    return FactorizationReport(ok=difference <= FACTORIZATION_TOL * scale, max_difference=difference)


@dataclass
class MCReport:
    estimate: FunctionOnOmega
    std_err: np.ndarray
    n_samples: int
    n_streams: int
    seed: int
    workers: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "estimate": [float(v) for v in self.estimate],
            "std_err": [float(v) for v in self.std_err],
            "n_samples": self.n_samples,
            "n_streams": self.n_streams,
            "seed": self.seed,
            "workers": self.workers,
        }


def _stream_sums(model: Model, t: float, f: np.ndarray, seed: int, stream_id: int, count: int):
    rng = RngStream(seed, stream_id).generator()
    first = np.zeros(model.n_states)
    second = np.zeros(model.n_states)
    for _ in range(count):
        value = apply_psi_set(model, sample_ppp(model, t, rng), f)
        first += value
        second += value ** 2
    return first, second


def mc_semigroup(
    model: Model, t: float, f: Sequence[float], n_samples: int, seed: int, workers: int = 1
) -> MCReport:
    """
    Monte Carlo estimate of P_t f = E[Ψ_{N[0,t]} f].

    Samples are split into blocks of BLOCK_SIZE, block b drawing from stream id b.
    Blocks run on a thread pool and are summed in stream order, so results are
    bitwise identical for any worker count.

    Args:
        model: Reversible model
        t: Horizon, t ≥ 0
        f: Function on Ω
        n_samples: Number of realizations, at least 100
        seed: Root seed
        workers: Threads

    Returns:
        MCReport with per-entry standard errors
    """
    if n_samples < MIN_SAMPLES:
        raise BadArgs(f"Monte Carlo needs at least {MIN_SAMPLES} samples, got {n_samples}")
    if t < 0:
        raise NegativeTime(f"Horizon must be nonnegative, got {t}")
    f = as_function(model, f)
    counts = [BLOCK_SIZE] * (n_samples // BLOCK_SIZE)
    if n_samples % BLOCK_SIZE:
        counts.append(n_samples % BLOCK_SIZE)

    if t == 0:
        return MCReport(f.copy(), np.zeros(model.n_states), n_samples, len(counts), seed, workers)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        futures = [
            executor.submit(_stream_sums, model, t, f, seed, stream_id, count)
            for stream_id, count in enumerate(counts)
        ]
        sums = [future.result() for future in futures]

    first = np.zeros(model.n_states)
    second = np.zeros(model.n_states)
    for block_first, block_second in sums:
        first += block_first
        second += block_second
    estimate = first / n_samples
    sample_variance = np.maximum(second - n_samples * estimate ** 2, 0.0) / (n_samples - 1)
    std_err = np.sqrt(sample_variance / n_samples)
    logger.info(f"Monte Carlo P_t f on {model.name}: t={t}, {n_samples} samples, {len(counts)} streams")
    return MCReport(estimate, std_err, n_samples, len(counts), seed, workers)


def mc_agreement(
    exact: Sequence[float], report: MCReport, sigmas: float = 4.0, tol: float = 1e-12
) -> float:
    """Fraction of entries with |estimate − exact| ≤ sigmas·stdErr (exact match where stdErr = 0)"""
    exact = np.asarray(exact, dtype=float)
    error = np.abs(report.estimate - exact)
    allowed = np.where(report.std_err > 0, sigmas * report.std_err, tol * max(1.0, float(np.max(np.abs(exact)))))
    return float(np.mean(error <= allowed))
