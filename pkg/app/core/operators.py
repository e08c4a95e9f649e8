"""
Resampling Operators
Ψ_x, D_x, the generator L, the Dirichlet form and the exact semigroup P_t
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Sequence

import numpy as np
from scipy import linalg

from .errors import BadArgs, NegativeTime, SpectrumFailure
from .functionals import lp_norm
from .statespace import STRUCTURAL_TOL, Model, Site

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

# Functions on Ω are plain float vectors indexed by state
FunctionOnOmega = np.ndarray


def as_function(model: Model, f: Sequence[float]) -> FunctionOnOmega:
    """Validate and convert a function on Ω to a float vector"""
    values = np.asarray(f, dtype=float)
    if values.shape != (model.n_states,):
        raise BadArgs(f"Function has shape {values.shape}, expected ({model.n_states},)")
    if not np.all(np.isfinite(values)):
        raise BadArgs("Function has non-finite entries")
    return values


def _rates(model: Model) -> np.ndarray:
    rates = model._cache.get("rates")
    if rates is None:
        rates = model.kernels.rate_matrix()
        rates.setflags(write=False)
        model._cache["rates"] = rates
    return rates


@dataclass(frozen=True, eq=False)
class Generator:
    """
    Generator matrix with the spectral data of its symmetrization.

    ``eigenvectors`` are the orthonormal eigenvectors of D^{1/2} L D^{-1/2},
    D = diag(μ), sorted by ascending eigenvalue.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sqrt_mu: np.ndarray


def psi_x(model: Model, x: Site, f: Sequence[float]) -> FunctionOnOmega:
    """
    Apply the resampling operator (Ψ_x f)(η) = Σ_a μ_{x,η}(a) f(η_{x↦a}).

    Raises:
        UnknownSite: If x is not a site of the model
    """
    position = model.site_index(x)
    f = as_function(model, f)
    probs = model.kernels.probs[position]
    result = np.zeros(model.n_states)
    for a in range(model.alphabet.size):
        result += probs[:, a] * f[model.space.replaced(position, a)]
    return result


def d_x(model: Model, x: Site, f: Sequence[float]) -> FunctionOnOmega:
    """D_x f = Ψ_x f − f"""
    return psi_x(model, x, f) - as_function(model, f)


def generator_matrix(model: Model) -> Generator:
    """
    Assemble L = Σ_x (Ψ_x − I) and diagonalize its symmetrization.

    The result is cached on the model.

    Raises:
        SpectrumFailure: If μ has zero weights, L is not reversible, or eigh fails
    """
    cached = model._cache.get("generator")
    if cached is not None:
        return cached

    matrix = _rates(model)
    if not model.mu.strictly_positive:
        raise SpectrumFailure("Symmetrization needs a strictly positive measure")

    sqrt_mu = np.sqrt(model.mu.weights)
    symmetric = sqrt_mu[:, None] * matrix / sqrt_mu[None, :]
    scale = max(1.0, float(np.max(np.abs(symmetric))))
    asymmetry = float(np.max(np.abs(symmetric - symmetric.T)))
    if asymmetry > STRUCTURAL_TOL * scale:
        raise SpectrumFailure(f"Generator of {model.name} is not reversible (asymmetry {asymmetry:.3e})")

    try:
        eigenvalues, eigenvectors = linalg.eigh(0.5 * (symmetric + symmetric.T))
    except linalg.LinAlgError as e:
        raise SpectrumFailure(f"Eigen-decomposition failed: {str(e)}")

    top = float(eigenvalues[-1])
    if abs(top) > STRUCTURAL_TOL * scale:
        raise SpectrumFailure(f"Largest eigenvalue {top:.3e} is not 0")

    generator = Generator(matrix=matrix, eigenvalues=eigenvalues, eigenvectors=eigenvectors, sqrt_mu=sqrt_mu)
    model._cache["generator"] = generator
    logger.debug(f"Diagonalized generator of {model.name}: spectrum [{eigenvalues[0]:.4f}, {top:.2e}]")
    return generator


def dirichlet_form(model: Model, f: Sequence[float], g: Sequence[float]) -> float:
    """E(f, g) = −Σ_η μ(η) f(η) (Lg)(η)"""
    f, g = as_function(model, f), as_function(model, g)
    lg = _rates(model) @ g
    return float(-(model.mu.weights * f) @ lg)


def dirichlet_form_local(model: Model, f: Sequence[float]) -> float:
    """E(f, f) written as ½ Σ_x ∫ Ψ_x (f − f(η))²(η) μ(dη)"""
    f = as_function(model, f)
    total = 0.0
    for x in range(model.space.n_sites):
        probs = model.kernels.probs[x]
        squares = np.zeros(model.n_states)
        for a in range(model.alphabet.size):
            squares += probs[:, a] * (f[model.space.replaced(x, a)] - f) ** 2
        total += float(model.mu.weights @ squares)
    return 0.5 * total


def derivative_energy(model: Model, f: Sequence[float], p: float = 2.0) -> float:
    """Σ_x ‖D_x f‖_p² under μ"""
    return float(sum(lp_norm(model.mu, d_x(model, site, f), p) ** 2 for site in model.sites))


def semigroup_matrix(model: Model, t: float) -> np.ndarray:
    """P_t = D^{-1/2} V e^{Λt} V^T D^{1/2} as a dense matrix"""
    if t < 0:
        raise NegativeTime(f"Semigroup time must be nonnegative, got {t}")
    generator = generator_matrix(model)
    v = generator.eigenvectors
    core = (v * np.exp(generator.eigenvalues * t)) @ v.T
    return core / generator.sqrt_mu[:, None] * generator.sqrt_mu[None, :]


def semigroup_apply(model: Model, t: float, f: Sequence[float]) -> FunctionOnOmega:
    """
    Apply P_t = e^{tL} through the symmetrized eigen-decomposition.

    Args:
        model: Reversible model
        t: Time, t ≥ 0
        f: Function on Ω

    Returns:
        P_t f

    Raises:
        NegativeTime: If t < 0
    """
    if t < 0:
        raise NegativeTime(f"Semigroup time must be nonnegative, got {t}")
    f = as_function(model, f)
    if t == 0:
        return f.copy()
    generator = generator_matrix(model)
    v = generator.eigenvectors
    coefficients = v.T @ (generator.sqrt_mu * f)
    return (v @ (np.exp(generator.eigenvalues * t) * coefficients)) / generator.sqrt_mu


@dataclass
class StructuralReport:
    """Largest deviation seen for each structural identity"""

    deviations: Dict[str, float]
    tol: float
    ok: bool

    def to_dict(self) -> Dict[str, Any]:
        return {"deviations": dict(self.deviations), "tol": self.tol, "ok": self.ok}


def structural_identities(
    model: Model, functions: Sequence[Sequence[float]], times: Sequence[float] = (0.1, 1.0, 10.0), tol: float = 1e-9
) -> StructuralReport:
    """
    Sweep the exact identities of a reversible model over a family of functions.

    Checked: ∫ Ψ_x f dμ = ∫ f dμ, E(f,f) against its local form, E(f,f) ≥ 0,
    P_s P_t f = P_{s+t} f, ∫ f P_t g dμ = ∫ g P_t f dμ, P_t 1 = 1 and P_t |f| ≥ 0.
    Deviations are relative to max(1, scale of the quantities compared).
    """
    weights = model.mu.weights
    worst = {name: 0.0 for name in (
        "psi_invariance", "dirichlet_local", "dirichlet_nonnegative", "semigroup_law", "self_adjoint", "markov",
    )}

    def note(name: str, deviation: float, scale: float = 1.0):
        worst[name] = max(worst[name], deviation / max(1.0, scale))

    ones = np.ones(model.n_states)
    for t in times:
        note("markov", float(np.max(np.abs(semigroup_apply(model, t, ones) - 1.0))))
    functions = [as_function(model, f) for f in functions]
    for f, g in zip(functions, functions[1:] + functions[:1]):
        scale = float(np.max(np.abs(f)))
        mean = float(weights @ f)
        for x in model.sites:
            note("psi_invariance", abs(float(weights @ psi_x(model, x, f)) - mean), scale)
        energy = dirichlet_form(model, f, f)
        note("dirichlet_local", abs(energy - dirichlet_form_local(model, f)), energy)
        note("dirichlet_nonnegative", max(0.0, -energy), scale ** 2)
        for s, t in zip(times, times[1:] + times[:1]):
            nested = semigroup_apply(model, s, semigroup_apply(model, t, f))
            note("semigroup_law", float(np.max(np.abs(nested - semigroup_apply(model, s + t, f)))), scale)
        for t in times:
            left = float(weights @ (f * semigroup_apply(model, t, g)))
            right = float(weights @ (g * semigroup_apply(model, t, f)))
            note("self_adjoint", abs(left - right), scale * float(np.max(np.abs(g))))
            note("markov", max(0.0, -float(np.min(semigroup_apply(model, t, np.abs(f))))), scale)
    ok = all(value <= tol for value in worst.values())
    if not ok:
        logger.warning(f"Structural identities fail on {model.name}: {worst}")
    return StructuralReport(deviations=worst, tol=tol, ok=ok)
