"""
Norms and Functionals
L^p norms, Orlicz norms for three Young functions, variance, entropy, and the
Orlicz-norm lemmas the Talagrand-type inequalities are built on
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Sequence, Union

import numpy as np
from numpy.polynomial import legendre
from scipy import special

from .errors import BadExponent, NegativeInput
from .statespace import Measure

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

Weights = Union[Measure, Sequence[float], np.ndarray]

ORLICZ_RTOL = 1e-12
QUADRATURE_NODES = 64
QUADRATURE_BUDGET = 1e-6
# c' in ‖f‖_Φ² ≤ c'‖f‖₂²/(1 + log(‖f‖₂/‖f‖₁))
KERNEL_CONSTANT = 16.0


def _weights(mu: Weights) -> np.ndarray:
    if isinstance(mu, Measure):
        return mu.weights
    return np.asarray(mu, dtype=float)


class YoungFunction(Enum):
    """The three Young functions used by the inequalities"""

    PHI = "phi"        # x² / log(e + |x|)
    XSQLOG = "xsqlog"  # x² log(1 + x²)
    EXPSQ = "expsq"    # e^{x²} − 1

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self is YoungFunction.PHI:
            return x ** 2 / np.log(math.e + np.abs(x))
        if self is YoungFunction.XSQLOG:
            return x ** 2 * np.log1p(x ** 2)
        with np.errstate(over="ignore"):
            return np.expm1(x ** 2)


def lp_norm(mu: Weights, f: Sequence[float], p: float) -> float:
    """
    (Σ μ(η)|f(η)|^p)^{1/p}

    Raises:
        BadExponent: If p < 1
    """
    if not p >= 1:
        raise BadExponent(f"L^p norm needs p >= 1, got {p}")
    w, f = _weights(mu), np.abs(np.asarray(f, dtype=float))
    if math.isinf(p):
        return float(f[w > 0].max(initial=0.0))
    scale = float(f.max(initial=0.0))
    if scale == 0.0:
        return 0.0
    # factor out the sup norm so large p does not overflow
    return scale * float(w @ (f / scale) ** p) ** (1.0 / p)


def orlicz_norm(mu: Weights, f: Sequence[float], young: YoungFunction = YoungFunction.PHI) -> float:
    """
    Luxemburg norm inf{a > 0 : ∫ young(f/a) dμ ≤ 1}.

    Monotone bisection on a, starting from [‖f‖₂/10, 10·max(1, 2‖f‖₂)] and doubling
    outward until the defining integral straddles 1.

    Args:
        mu: Measure or raw weight vector (for product measures such as μ×μ_x)
        f: Function values, aligned with the weights
        young: Young function

    Returns:
        The norm to relative tolerance 1e−12 (upper end of the final bracket)
    """
    w = _weights(mu)
    f = np.asarray(f, dtype=float)
    support = w > 0
    if not np.any(f[support] != 0):
        return 0.0
    w, f = w[support], f[support]

    def mass(a: float) -> float:
        return float(w @ young(f / a))

    l2 = float(np.sqrt(w @ f ** 2))
    low, high = l2 / 10.0, 10.0 * max(1.0, 2.0 * l2)
    while mass(low) <= 1.0:
        low /= 2.0
    while mass(high) > 1.0:
        high *= 2.0
    while high - low > ORLICZ_RTOL * high:
        middle = 0.5 * (low + high)
        if mass(middle) > 1.0:
            low = middle
        else:
            high = middle
    return high


def variance(mu: Weights, f: Sequence[float]) -> float:
    """Var_μ(f) = ∫ (f − ∫f dμ)² dμ"""
    w, f = _weights(mu), np.asarray(f, dtype=float)
    mean = float(w @ f)
    return float(w @ (f - mean) ** 2)


def entropy(mu: Weights, g: Sequence[float]) -> float:
    """
    Ent_μ(g) = ∫ g log(g / ∫g dμ) dμ for g ≥ 0, with 0·log 0 = 0.

    Raises:
        NegativeInput: If g has a negative entry
    """
    w, g = _weights(mu), np.asarray(g, dtype=float)
    if np.any(g < 0):
        raise NegativeInput(f"Entropy needs g >= 0, got min {g.min():.3e}")
    mean = float(w @ g)
    if mean == 0.0:
        return 0.0
    on_support = g[w > 0]
    if on_support.size == 0 or np.all(on_support == on_support[0]):
        return 0.0
    return max(float(w @ special.xlogy(g, g / mean)), 0.0)


@dataclass
class LemmaCheck:
    """Outcome of one inequality lhs ≤ rhs"""

    name: str
    lhs: float
    rhs: float
    passed: bool

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


def _compare(name: str, lhs: float, rhs: float, slack: float) -> LemmaCheck:
    return LemmaCheck(name=name, lhs=lhs, rhs=rhs, passed=bool(lhs <= rhs + slack))


def young_norm_estimate_check(mu: Weights, f: Sequence[float], young: YoungFunction, slack: float = 1e-9) -> LemmaCheck:
    """‖f‖_young ≤ max(1, K) with K = ∫ young(f) dμ"""
    w = _weights(mu)
    k = float(w @ young(np.asarray(f, dtype=float)))
    norm = orlicz_norm(w, f, young)
    bound = max(1.0, k)
    return _compare("young_norm_estimate", norm, bound, slack * bound)


def phi_l2_check(mu: Weights, f: Sequence[float], slack: float = 1e-9) -> LemmaCheck:
    """‖f‖_Φ ≤ 2‖f‖₂"""
    bound = 2.0 * lp_norm(mu, f, 2)
    return _compare("phi_le_two_l2", orlicz_norm(mu, f, YoungFunction.PHI), bound, slack * max(bound, 1.0))


def phi_holder_check(mu: Weights, f: Sequence[float], g: Sequence[float], slack: float = 1e-9) -> LemmaCheck:
    """‖fg‖_Φ ≤ 24 ‖f‖_{e^{x²}−1} ‖g‖₂"""
    product = np.asarray(f, dtype=float) * np.asarray(g, dtype=float)
    bound = 24.0 * orlicz_norm(mu, f, YoungFunction.EXPSQ) * lp_norm(mu, g, 2)
    return _compare("phi_holder", orlicz_norm(mu, product, YoungFunction.PHI), bound, slack * max(bound, 1.0))


def lp_norm_integral(mu: Weights, f: Sequence[float], nodes: int = QUADRATURE_NODES) -> float:
    """∫₁² ‖f‖_r² dr by fixed Gauss–Legendre quadrature"""
    points, weights = legendre.leggauss(nodes)
    radii = 1.5 + 0.5 * points
    values = np.array([lp_norm(mu, f, r) ** 2 for r in radii])
    return float(0.5 * weights @ values)


def phi_integral_check(mu: Weights, f: Sequence[float], budget: float = QUADRATURE_BUDGET) -> LemmaCheck:
    """∫₁² ‖f‖_r² dr ≤ 2e⁴ ‖f‖_Φ², within the quadrature budget"""
    bound = 2.0 * math.e ** 4 * orlicz_norm(mu, f, YoungFunction.PHI) ** 2
    return _compare("lp_integral_le_phi", lp_norm_integral(mu, f), bound, budget)


def kernel_bound_ratio(mu: Weights, f: Sequence[float]) -> float:
    """‖f‖_Φ² (1 + log(‖f‖₂/‖f‖₁)) / ‖f‖₂², or 0 for f = 0"""
    l1, l2 = lp_norm(mu, f, 1), lp_norm(mu, f, 2)
    if l2 == 0.0:
        return 0.0
    return orlicz_norm(mu, f, YoungFunction.PHI) ** 2 * (1.0 + math.log(l2 / l1)) / l2 ** 2


def calibrate_kernel_constant(mu: Weights, functions: Iterable[Sequence[float]]) -> float:
    """Largest observed kernel_bound_ratio over a reference family"""
    ratios: List[float] = [kernel_bound_ratio(mu, f) for f in functions]
    observed = max(ratios, default=0.0)
    if observed > KERNEL_CONSTANT:
        logger.warning(f"Observed kernel constant {observed:.4f} exceeds the frozen value {KERNEL_CONSTANT}")
    else:
        logger.info(f"Calibrated kernel constant {observed:.4f} (frozen value {KERNEL_CONSTANT})")
    return observed
