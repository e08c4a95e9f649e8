"""
Talagrand-Type Inequalities
Explicit (log-space) constants and exact two-sided evaluation of the Orlicz
Talagrand inequality, its L² corollary, the semigroup/derivative commutation
bound and the reverse direction towards log-Sobolev
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .constants import ConstantsReport, hypercontract_exponent
from .errors import BadArgs
from .functionals import (
    KERNEL_CONSTANT,
    LemmaCheck,
    YoungFunction,
    entropy,
    lp_norm,
    orlicz_norm,
    variance,
)
from .operators import as_function, d_x, derivative_energy, dirichlet_form, semigroup_apply
from .statespace import Model, product_model

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

ZERO_VARIANCE = 1e-14
REVERSE_FACTOR = 13.0 / 4.0 * 700.0 ** 4
ENTROPY_SHIFT_FACTOR = 13.0 / 4.0


def _log(value: float) -> float:
    return math.log(value) if value > 0 else -math.inf


def _exp(value: float) -> float:
    try:
        return math.exp(value)
    except OverflowError:
        return math.inf


def neighborhood_exponent(nbhd_size: int) -> float:
    """λ = 72 n² (1 + n)²"""
    return 72.0 * nbhd_size ** 2 * (1 + nbhd_size) ** 2


def log_talagrand_constant(K: float, nbhd_size: int, rho: float) -> float:
    """
    log C for C = [4K e^λ 2^{1/(2ρ)} / (1 − e^{−1})] · (e/(2ρ)) · 2e⁴.

    The factors are, in order: the good-function constant with the commutation
    bound at horizon T = 1/(2ρ), the time integral up to T, and the Orlicz
    integral bound ∫₁²‖f‖_r² dr ≤ 2e⁴‖f‖_Φ².

    Raises:
        BadArgs: Unless K > 0, nbhd_size ≥ 1 and ρ > 0
    """
    if not K > 0 or nbhd_size < 1 or not rho > 0:
        raise BadArgs(f"Talagrand constant needs K > 0, n >= 1, rho > 0; got K={K}, n={nbhd_size}, rho={rho}")
    return (
        math.log(4.0 * K)
        + neighborhood_exponent(nbhd_size)
        + math.log(2.0) / (2.0 * rho)
        - math.log1p(-math.exp(-1.0))
        + 1.0 - math.log(2.0 * rho)
        + math.log(2.0) + 4.0
    )


def talagrand_constant(K: float, nbhd_size: int, rho: float) -> float:
    """C itself; +inf once it leaves the float range (n ≥ 2)"""
    return _exp(log_talagrand_constant(K, nbhd_size, rho))


def log_commutation_constant(nbhd_size: int) -> float:
    """log C̃ for C̃ = 2e^λ"""
    return math.log(2.0) + neighborhood_exponent(nbhd_size)


def audited_log_constant(model: Model, constants: ConstantsReport) -> float:
    """log C with K = α⁻³, n = |N| and the audited ρ"""
    return log_talagrand_constant(model.alpha ** -3, model.nbhd_size, constants.rho)


def corollary_log_constant(log_constant: float, kernel_constant: float = KERNEL_CONSTANT) -> float:
    """log(c′·C) for the L² corollary"""
    return math.log(kernel_constant) + log_constant


@dataclass
class TalagrandReport:
    lhs: float
    rhs_terms: Dict[str, float]
    log_constant: float
    constant_used: float
    ratio: float
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _verdict(lhs: float, log_constant: float, total: float, slack: float):
    if lhs <= 0:
        return 0.0, True
    if total <= 0:
        return math.inf, False
    ratio = _exp(math.log(lhs) - log_constant - math.log(total))
    return ratio, bool(ratio <= 1.0 + slack)


def verify_talagrand(
    model: Model,
    f: Sequence[float],
    constant: Optional[float] = None,
    log_constant: Optional[float] = None,
    slack: float = 1e-6,
) -> TalagrandReport:
    """
    Evaluate Var(f) ≤ C Σ_x ‖D_x f‖_Φ² exactly.

    Args:
        model: Reversible model
        f: Function on Ω
        constant: C (give this or ``log_constant``)
        log_constant: log C, for constants beyond the float range
        slack: Relative slack on the ratio

    Returns:
        TalagrandReport with per-site terms
    """
    if (constant is None) == (log_constant is None):
        raise BadArgs("Pass exactly one of constant or log_constant")
    if log_constant is None:
        log_constant = _log(constant)
    f = as_function(model, f)
    lhs = variance(model.mu, f)
    terms = {str(site): orlicz_norm(model.mu, d_x(model, site, f), YoungFunction.PHI) ** 2 for site in model.sites}
    ratio, passed = _verdict(lhs, log_constant, sum(terms.values()), slack)
    return TalagrandReport(
        lhs=lhs,
        rhs_terms=terms,
        log_constant=log_constant,
        constant_used=_exp(log_constant),
        ratio=ratio,
        passed=passed,
    )


@dataclass
class CorollaryReport:
    lhs: float
    terms: Dict[str, float]
    skipped_sites: List[str]
    log_constant: float
    ratio: float
    passed: bool


def _corollary_terms(model: Model, f: np.ndarray):
    terms, skipped = {}, []
    for site in model.sites:
        derivative = d_x(model, site, f)
        if variance(model.mu, derivative) <= ZERO_VARIANCE:
            skipped.append(str(site))
            continue
        l1, l2 = lp_norm(model.mu, derivative, 1), lp_norm(model.mu, derivative, 2)
        terms[str(site)] = l2 ** 2 / (1.0 + math.log(l2 / l1))
    return terms, skipped


def verify_corollary(model: Model, f: Sequence[float], log_c1C: float, slack: float = 1e-6) -> CorollaryReport:
    """
    Evaluate Var(f) ≤ c₁C Σ_x ‖D_x f‖₂² / (1 + log(‖D_x f‖₂/‖D_x f‖₁)).

    Sites where D_x f is μ-a.s. constant (variance ≤ 1e−14) contribute 0.
    """
    f = as_function(model, f)
    lhs = variance(model.mu, f)
    terms, skipped = _corollary_terms(model, f)
    ratio, passed = _verdict(lhs, log_c1C, sum(terms.values()), slack)
    return CorollaryReport(lhs=lhs, terms=terms, skipped_sites=skipped, log_constant=log_c1C, ratio=ratio, passed=passed)


def calibrate_corollary(model: Model, functions: Sequence[Sequence[float]]) -> float:
    """Largest observed Var(f) / Σ corollary terms over a family; the empirical c₁C"""
    observed = 0.0
    for f in functions:
        f = as_function(model, f)
        lhs = variance(model.mu, f)
        terms, _ = _corollary_terms(model, f)
        total = sum(terms.values())
        if lhs > ZERO_VARIANCE and total > 0:
            observed = max(observed, lhs / total)
    return observed


@dataclass
class CommutationReport:
    t: float
    exponent: float
    lhs: float
    rhs_base: float
    log_constant: float
    log_rhs: float
    ratio: float
    passed: bool
    log_proof_constant: Optional[float] = None


def verify_commutation(model: Model, f: Sequence[float], t: float, rho: float, slack: float = 1e-6) -> CommutationReport:
    """
    Evaluate Σ_x ‖D_x P_t f‖₂² ≤ C̃ 2^t Σ_x ‖D_x f‖²_{p(t)}, p(t) = 1 + e^{−2ρt}.

    ``log_proof_constant`` carries 2^{⌈t⌉} e^{λ(t/⌈t⌉)²}, the factor the iteration
    argument actually produces, for comparison with C̃ 2^t.
    """
    f = as_function(model, f)
    exponent = hypercontract_exponent(t, 2.0, rho)
    lhs = derivative_energy(model, semigroup_apply(model, t, f), 2.0)
    base = derivative_energy(model, f, exponent)
    log_constant = log_commutation_constant(model.nbhd_size)
    log_rhs = log_constant + t * math.log(2.0) + _log(base)
    if lhs <= 0:
        ratio, passed = 0.0, True
    elif base <= 0:
        ratio, passed = math.inf, False
    else:
        ratio = _exp(math.log(lhs) - log_rhs)
        passed = bool(ratio <= 1.0 + slack)

    proof = None
    if t > 0:
        steps = math.ceil(t)
        proof = steps * math.log(2.0) + neighborhood_exponent(model.nbhd_size) * (t / steps) ** 2
    return CommutationReport(
        t=float(t), exponent=exponent, lhs=lhs, rhs_base=base, log_constant=log_constant,
        log_rhs=log_rhs, ratio=ratio, passed=passed, log_proof_constant=proof,
    )


@dataclass
class ReverseReport:
    """Reverse direction: Talagrand with C ≥ 1 gives Ent(f²) ≤ (13/4)700⁴ C E(f,f)"""

    constant: float
    entropy_form: str
    passed: bool
    worst_ratio: float
    worst_index: Optional[int]
    rows: List[Dict[str, float]] = field(default_factory=list)
    note: str = ""


def reverse_talagrand_check(model: Model, test_family: Sequence[Sequence[float]], slack: float = 1e-6) -> ReverseReport:
    """
    Fit the smallest C ≥ 1 with Var ≤ C Σ‖D_x f‖_Φ² over the family, then check
    Ent(f²) ≤ (13/4)·700⁴·C·E(f,f) for every member.

    Raises:
        BadArgs: If the family is empty
    """
    if not test_family:
        raise BadArgs("Reverse check needs a nonempty test family")
    functions = [as_function(model, f) for f in test_family]

    fitted = 1.0
    for f in functions:
        lhs = variance(model.mu, f)
        total = sum(orlicz_norm(model.mu, d_x(model, site, f), YoungFunction.PHI) ** 2 for site in model.sites)
        if lhs > ZERO_VARIANCE and total > 0:
            fitted = max(fitted, lhs / total)

    rows, passed = [], True
    worst, worst_index = 0.0, None
    for i, f in enumerate(functions):
        ent = entropy(model.mu, f ** 2)
        energy = dirichlet_form(model, f, f)
        bound = REVERSE_FACTOR * fitted * energy
        ok = ent <= bound * (1.0 + slack) + slack
        ratio = ent / bound if bound > 0 else (0.0 if ent <= 0 else math.inf)
        passed = passed and ok
        if worst_index is None or ratio > worst:
            worst, worst_index = ratio, i
        rows.append({"index": i, "entropy": ent, "energy": energy, "bound": bound, "ratio": ratio})

    note = (
        "checked in the Ent(f^2) form bounded by the argument; the displayed statement reads Ent(f)"
    )
    return ReverseReport(
        constant=fitted, entropy_form="Ent(f^2)", passed=passed, worst_ratio=worst,
        worst_index=worst_index, rows=rows, note=note,
    )


def pair_measure(model: Model, x) -> Dict[str, np.ndarray]:
    """
    The measure μ(dη)μ_{x,η}(dξ) on pairs, flattened over (η, a).

    Returns:
        ``weights`` and the ``source``/``target`` state indices of each pair
    """
    position = model.site_index(x)
    k = model.alphabet.size
    weights = (model.mu.weights[:, None] * model.kernels.probs[position]).ravel()
    source = np.repeat(np.arange(model.n_states), k)
    target = np.stack([model.space.replaced(position, a) for a in range(k)], axis=1).ravel()
    return {"weights": weights, "source": source, "target": target}


def orlicz_derivative_check(model: Model, f: Sequence[float], x, slack: float = 1e-9) -> LemmaCheck:
    """‖D_x f‖_{Φ;μ} ≤ ‖f(ξ) − f(η)‖_{Φ;μ×μ_x}"""
    f = as_function(model, f)
    pairs = pair_measure(model, x)
    increments = f[pairs["target"]] - f[pairs["source"]]
    lhs = orlicz_norm(model.mu, d_x(model, x, f), YoungFunction.PHI)
    rhs = orlicz_norm(pairs["weights"], increments, YoungFunction.PHI)
    return LemmaCheck(f"orlicz_derivative_{x}", lhs, rhs, bool(lhs <= rhs * (1 + slack) + slack))


def entropy_shift_check(
    model: Model, f: Sequence[float], shifts: Optional[Sequence[float]] = None, slack: float = 1e-9
) -> LemmaCheck:
    """sup_c Ent((f + c)²) ≤ (13/4)‖f − ∫f dμ‖²_φ with φ(x) = x² log(1 + x²), over a grid of c"""
    f = as_function(model, f)
    mean = model.mu.expect(f)
    if shifts is None:
        scale = float(np.max(np.abs(f))) if f.size else 0.0
        shifts = [-mean] + list(np.linspace(-3.0 * scale - 1.0, 3.0 * scale + 1.0, 25))
    lhs = max(entropy(model.mu, (f + c) ** 2) for c in shifts)
    rhs = ENTROPY_SHIFT_FACTOR * orlicz_norm(model.mu, f - mean, YoungFunction.XSQLOG) ** 2
    return LemmaCheck("entropy_shift", lhs, rhs, bool(lhs <= rhs * (1 + slack) + slack))


@dataclass
class ChainReport:
    rho_le_kappa: bool
    audit_passed: bool
    poincare_implied: bool
    log_poincare_constant: float
    violations: int
    passed: bool


def chain_of_implications(
    model: Model, constants: ConstantsReport, functions: Sequence[Sequence[float]], log_c1C: float,
    slack: float = 1e-6,
) -> ChainReport:
    """
    Check the audited constants against each other: ρ ≤ κ, the log-Sobolev audit,
    and the Poincaré inequality implied by the corollary.

    With the log term dropped the corollary gives Var ≤ c₁C Σ‖D_x f‖₂² ≤ 2c₁C E(f,f),
    so κ ≥ 1/(2c₁C) must hold, and Var ≤ c₁C Σ‖D_x f‖₂² is checked on every f.
    """
    rho_le_kappa = constants.rho <= constants.kappa + 1e-8
    log_poincare = math.log(2.0) + log_c1C
    implied = -math.log(constants.kappa) <= log_poincare
    violations = 0
    for f in functions:
        lhs = variance(model.mu, f)
        ratio, ok = _verdict(lhs, log_c1C, derivative_energy(model, f, 2.0), slack)
        violations += 0 if ok else 1
    audit_passed = bool(constants.audit_passed) if constants.audit_passed is not None else True
    passed = rho_le_kappa and audit_passed and implied and violations == 0
    return ChainReport(
        rho_le_kappa=rho_le_kappa, audit_passed=audit_passed, poincare_implied=implied,
        log_poincare_constant=log_poincare, violations=violations, passed=passed,
    )


def tensorization_check(
    m1: Model, m2: Model, constants1: ConstantsReport, constants2: ConstantsReport,
    functions: Sequence[Sequence[float]],
) -> List[TalagrandReport]:
    """
    Talagrand on the product model with ρ = min(ρ₁, ρ₂), n = max(n₁, n₂) and
    K = α⁻³ of the product.
    """
    product = product_model(m1, m2)
    rho = min(constants1.rho, constants2.rho)
    nbhd = max(m1.nbhd_size, m2.nbhd_size)
    log_constant = log_talagrand_constant(product.alpha ** -3, nbhd, rho)
    return [verify_talagrand(product, f, log_constant=log_constant) for f in functions]
