"""
Command-Line Interface
Subcommand dispatch, report emission and exit codes for verification runs
"""

import argparse
import logging
import math
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core.constants import (
    certify_constants,
    empirical_gap,
    good_constant_check,
    hypercontractivity_check,
    jensen_check,
    l2_decay_check,
    poincare_check,
    random_functions,
)
from .core.errors import ConfigError, LabError, ThresholdHypothesisFailed
from .core.functionals import (
    KERNEL_CONSTANT,
    LemmaCheck,
    YoungFunction,
    calibrate_kernel_constant,
    phi_holder_check,
    phi_integral_check,
    phi_l2_check,
    young_norm_estimate_check,
)
from .core.graphical import (
    PoissonRealization,
    RngStream,
    check_factorization,
    mc_agreement,
    mc_semigroup,
    sample_ppp,
)
from .core.influence import DERIVATIVE_STEP, dx_indicator_bounds, kkl_check, russo_check, sharp_threshold_check
from .core.operators import semigroup_apply, structural_identities
from .core.statespace import check_detailed_balance
from .core.talagrand import (
    audited_log_constant,
    calibrate_corollary,
    chain_of_implications,
    corollary_log_constant,
    entropy_shift_check,
    orlicz_derivative_check,
    reverse_talagrand_check,
    verify_commutation,
    verify_corollary,
    verify_talagrand,
)
from .core.trees import (
    catalan,
    catalan_identity_check,
    check_decomposition,
    comb_tree,
    enumerate_trees,
    mass_bound,
    mass_bound_check,
    power_series_terms,
    series_bound_check,
    tree_mass,
)
from .utils.config_loader import LabConfig, load_config
from .utils.helpers import create_run_manifest, load_function_csv
from .utils.report_generator import ReportGenerator
from .utils.settings import Settings, ToleranceProfile, get_profile, load_settings

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

DEFAULT_TREE_SIZE = 8
DEFAULT_SAMPLES = 10_000
MC_AGREEMENT = 0.99
FACTORIZATION_PAIRS = 100
GOOD_FUNCTION_TIMES = (0.0, 0.1, 1.0, 10.0)
SERIES_ARGUMENTS = (0.0, 0.5, 1.0, 10.0, 288.0)


def _ratio(lhs: float, rhs: float) -> float:
    if rhs > 0:
        return lhs / rhs
    return 0.0 if lhs <= 0 else math.inf


def tally(outcomes: Sequence[Tuple[bool, float]]) -> Dict[str, Any]:
    """Summarize (passed, ratio) outcomes by violation count and worst ratio"""
    violations = sum(1 for ok, _ in outcomes if not ok)
    worst_index = int(np.argmax([ratio for _, ratio in outcomes])) if outcomes else None
    return {
        "checked": len(outcomes),
        "violations": violations,
        "worst_ratio": outcomes[worst_index][1] if outcomes else 0.0,
        "worst_index": worst_index,
        "passed": violations == 0,
    }


def tally_checks(checks: Sequence[LemmaCheck]) -> Dict[str, Any]:
    return tally([(c.passed, _ratio(c.lhs, c.rhs)) for c in checks])


class LabRunner:
    """
    Runs subcommands against one config and collects their sections.

    Certified constants and the random test family are computed once per run.
    """

    def __init__(
        self, config: Optional[LabConfig], settings: Settings, profile: ToleranceProfile, flags: Dict[str, Any]
    ):
        self.config = config
        self.settings = settings
        self.profile = profile
        self.flags = flags
        self.report = ReportGenerator(settings.out_dir)
        self._constants = None
        self._functions: Optional[List[np.ndarray]] = None

    @property
    def model(self):
        if self.config is None:
            raise ConfigError(["--config is required for this subcommand"])
        return self.config.model

    @property
    def seed(self) -> int:
        return self.settings.seed

    def functions(self) -> List[np.ndarray]:
        if self._functions is None:
            count = self.flags.get("functions") or self.config.n_functions
            self._functions = random_functions(self.model.n_states, int(count), self.seed)
        return self._functions

    def times(self) -> Tuple[float, ...]:
        if self.flags.get("t") is not None:
            return (float(self.flags["t"]),)
        return self.config.times

    def commutation_times(self) -> Tuple[float, ...]:
        if self.flags.get("t") is not None:
            return (float(self.flags["t"]),)
        return self.config.commutation_times

    def constants(self):
        if self._constants is None:
            self._constants = certify_constants(self.model, seed=self.seed, workers=self.settings.workers)
        return self._constants

    def constants_section(self):
        model, functions, slack = self.model, self.functions(), self.profile.slack
        constants = self.constants()
        kappa, rho = constants.kappa, constants.rho
        balance = check_detailed_balance(model, tol=self.profile.structural)
        structure = structural_identities(model, functions, tol=1e-9)
        poincare = [poincare_check(model, kappa, f, slack) for f in functions]
        decay = [l2_decay_check(model, kappa, f, t) for f in functions for t in self.times()]
        hyper = [c for f in functions for c in hypercontractivity_check(model, rho, f, self.times(), slack=slack)]
        jensen = [jensen_check(model, f) for f in functions]
        K = model.alpha ** -3
        good = [good_constant_check(model, f, K, GOOD_FUNCTION_TIMES, slack) for f in functions]
        section = {
            "model": {"name": model.name, "states": model.n_states, "alpha": model.alpha, "nbhd_size": model.nbhd_size},
            "detailed_balance": {"ok": balance.ok, "worst_violation": balance.worst_violation},
            "structural_identities": structure.to_dict(),
            "constants": {k: v for k, v in constants.to_dict().items() if k not in ("rho_witness", "optimizer_trace")},
            "rho_le_kappa": {"passed": bool(rho <= kappa + 1e-8), "rho": rho, "kappa": kappa},
            "empirical_gap": empirical_gap(model, functions),
            "poincare": tally_checks(poincare),
            "l2_decay": tally_checks(decay),
            "hypercontractivity": tally_checks(hyper),
            "jensen": tally_checks(jensen),
            "good_function": {"K": K, **tally([(r.passed, r.worst_ratio / K) for r in good])},
        }
        self.report.add_section("constants", section, {"rho_witness": constants.rho_witness})

    def talagrand_section(self):
        model, functions, slack = self.model, self.functions(), self.profile.slack
        constants = self.constants()
        log_constant = audited_log_constant(model, constants)
        log_c1C = corollary_log_constant(log_constant)
        reports = [verify_talagrand(model, f, log_constant=log_constant, slack=slack) for f in functions]
        corollary = [verify_corollary(model, f, log_c1C, slack) for f in functions]
        chain = chain_of_implications(model, constants, functions, log_c1C, slack)

        pairs = list(zip(functions, functions[1:]))
        budget = self.profile.quadrature
        orlicz = {
            "phi_le_two_l2": tally_checks([phi_l2_check(model.mu, f) for f in functions]),
            "lp_integral": tally_checks([phi_integral_check(model.mu, f, budget) for f in functions]),
            "phi_holder": tally_checks([phi_holder_check(model.mu, f, g) for f, g in pairs]),
            "young_estimate": {
                young.value: tally_checks([young_norm_estimate_check(model.mu, f / 4.0, young) for f in functions])
                for young in YoungFunction
            },
            "derivative": tally_checks(
                [orlicz_derivative_check(model, f, x) for f in functions[:20] for x in model.sites]
            ),
        }
        worst = tally([(r.passed, r.ratio) for r in reports])
        section = {
            "log_constant": log_constant,
            "talagrand": worst,
            "corollary": {
                "log_c1C": log_c1C,
                "kernel_constant": KERNEL_CONSTANT,
                "observed_kernel_constant": calibrate_kernel_constant(model.mu, functions),
                "observed_c1C": calibrate_corollary(model, functions),
                **tally([(r.passed, r.ratio) for r in corollary]),
            },
            "chain": vars(chain),
            "orlicz_lemmas": orlicz,
        }
        witnesses = {}
        if worst["worst_index"] is not None:
            witnesses["talagrand_worst"] = functions[worst["worst_index"]]
        self.report.add_section("talagrand", section, witnesses)

    def commutation_section(self):
        model, functions, slack = self.model, self.functions(), self.profile.slack
        rho = self.constants().rho
        rows = []
        for t in self.commutation_times():
            reports = [verify_commutation(model, f, t, rho, slack) for f in functions]
            rows.append({
                "t": t,
                "exponent": reports[0].exponent,
                "log_constant": reports[0].log_constant,
                "log_proof_constant": reports[0].log_proof_constant,
                **tally([(r.passed, r.ratio) for r in reports]),
            })
        self.report.add_section("commutation", {"rho": rho, "times": rows})

    def reverse_section(self):
        model, functions = self.model, self.functions()
        reverse = reverse_talagrand_check(model, functions, self.profile.slack)
        shifts = [entropy_shift_check(model, f) for f in functions[:20]]
        section = {
            "constant": reverse.constant,
            "entropy_form": reverse.entropy_form,
            "note": reverse.note,
            "passed": reverse.passed,
            "worst_ratio": reverse.worst_ratio,
            "worst_index": reverse.worst_index,
            "entropy_shift": tally_checks(shifts),
        }
        witnesses = {"reverse_worst": functions[reverse.worst_index]} if reverse.worst_index is not None else {}
        self.report.add_section("reverse", section, witnesses)

    def _family(self):
        if self.config.family is None:
            raise ConfigError(["family: required for this subcommand"], self.config.path)
        return self.config.family

    def _interior_grid(self) -> np.ndarray:
        family = self._family()
        a, b = family.interval
        return np.linspace(a, b, self.config.family_grid + 2)[1:-1]

    def russo_section(self):
        family = self._family()
        a, b = family.interval
        rows = []
        for event in self.config.events:
            if not event.increasing:
                rows.append({"event": event.name, "skipped": "not increasing"})
                continue
            for p in self._interior_grid():
                h = min(DERIVATIVE_STEP, (p - a) / 2.0, (b - p) / 2.0)
                rows.append({"event": event.name, **russo_check(family, event, float(p), h, self.profile.slack).to_dict()})
        self.report.add_section("russo", {"family": family.name, "points": rows})

    def kkl_section(self):
        model = self.model
        constants = self.constants()
        rows, sandwich = [], []
        for event in self.config.events:
            if not event.increasing:
                rows.append({"event": event.name, "skipped": "not increasing"})
                continue
            for x in model.sites:
                for q in (1.0, 2.0):
                    report = dx_indicator_bounds(model, event, x, q)
                    sandwich.append((report.passed, _ratio(report.middle, report.upper)))
            probability = event.probability(model.mu)
            if not 0.0 < probability < 1.0:
                rows.append({"event": event.name, "skipped": "degenerate"})
                continue
            rows.append(kkl_check(model, event, constants, slack=self.profile.slack).to_dict())
        self.report.add_section("kkl", {"events": rows, "dx_sandwich": tally(sandwich)})

    def threshold_section(self):
        family = self._family()
        a, b = family.interval
        p1, p2 = self.config.threshold or (a + 0.1 * (b - a), b - 0.1 * (b - a))
        h = min(DERIVATIVE_STEP, (p1 - a) / 2.0, (b - p2) / 2.0)
        grid = np.linspace(p1, p2, self.config.family_grid)
        rows = []
        for event in self.config.events:
            if not event.increasing:
                rows.append({"event": event.name, "skipped": "not increasing"})
                continue
            try:
                report = sharp_threshold_check(family, event, p1, p2, grid, h=h, seed=self.seed, slack=self.profile.slack)
            except ThresholdHypothesisFailed as e:
                logger.warning(str(e))
                rows.append({"event": event.name, "skipped": f"hypothesis fails: {e}"})
                continue
            rows.append(report.to_dict())
        self.report.add_section("threshold", {"family": family.name, "interval": [p1, p2], "events": rows})

    def simulate_section(self):
        model = self.model
        t = float(self.flags["t"]) if self.flags.get("t") is not None else 1.0
        samples = int(self.flags.get("samples") or DEFAULT_SAMPLES)
        labels = model.space.labels()
        if self.flags.get("function_csv"):
            f = load_function_csv(labels, self.flags["function_csv"])
        else:
            f = self.functions()[0]
        exact = semigroup_apply(model, t, f)
        estimate = mc_semigroup(model, t, f, samples, seed=self.seed, workers=self.settings.workers)
        agreement = mc_agreement(exact, estimate, sigmas=self.profile.mc_sigmas)

        rng = RngStream(self.seed, 10 ** 6).generator()
        factorization = []
        for _ in range(FACTORIZATION_PAIRS):
            first = sample_ppp(model, 1.0, rng)
            later = sample_ppp(model, 1.0, rng)
            shifted = PoissonRealization(tuple((x, s + 1.0) for x, s in later.points), 2.0)
            report = check_factorization(model, first, shifted, f)
            factorization.append((report.ok, report.max_difference))

        section = {
            "t": t,
            "n_samples": estimate.n_samples,
            "n_streams": estimate.n_streams,
            "agreement": {"fraction": agreement, "required": MC_AGREEMENT, "sigmas": self.profile.mc_sigmas,
                          "passed": agreement >= MC_AGREEMENT},
            "factorization": tally(factorization),
        }
        self.report.set_simulation(labels, exact, estimate.estimate, estimate.std_err)
        self.report.add_section("simulate", section)

    def trees_section(self):
        n = int(self.flags.get("n") or DEFAULT_TREE_SIZE)
        largest = enumerate_trees(n)
        counts = []
        for k in range(1, n + 1):
            trees = enumerate_trees(k)
            row = {"n": k, "count": len(trees), "catalan": catalan(k - 1), "passed": len(trees) == catalan(k - 1)}
            bound = mass_bound_check(k)
            row["mass_bound"] = {"passed": bound.passed, "equality_trees": len(bound.equality_trees)}
            comb = comb_tree(k)
            row["comb_equality"] = {"passed": tree_mass(comb, 1) == mass_bound(k, 1)}
            if k <= 8:
                decomposition = check_decomposition(k)
                row["decomposition"] = {"ok": decomposition.ok, "max_multiplicity": decomposition.max_multiplicity}
            row["catalan_identity"] = {"passed": catalan_identity_check(k)}
            counts.append(row)

        listing = [
            {"tree": tree.bracket(), "mass_t1": tree_mass(tree, Fraction(1)), "bound_t1": mass_bound(n, Fraction(1))}
            for tree in largest
        ]
        series = {"passed": all(series_bound_check(x, 60) for x in SERIES_ARGUMENTS), "arguments": list(SERIES_ARGUMENTS)}
        terms = power_series_terms(1, Fraction(1, 10), n)
        section = {
            "n": n,
            "counts": counts,
            "trees": listing,
            "series_bound": series,
            "power_series": {"passed": all(row["equal"] for row in terms), "terms": len(terms)},
        }
        self.report.add_section("trees", section)


SUBCOMMANDS: Dict[str, Callable[[LabRunner], None]] = {
    "constants": LabRunner.constants_section,
    "talagrand": LabRunner.talagrand_section,
    "commutation": LabRunner.commutation_section,
    "reverse": LabRunner.reverse_section,
    "russo": LabRunner.russo_section,
    "kkl": LabRunner.kkl_section,
    "threshold": LabRunner.threshold_section,
    "simulate": LabRunner.simulate_section,
    "trees": LabRunner.trees_section,
}
CONFIG_FREE = {"trees"}


def _plan(subcommand: str, config: Optional[LabConfig]) -> List[str]:
    if subcommand != "all":
        return [subcommand]
    plan = ["constants", "talagrand", "commutation", "reverse", "simulate", "trees"]
    if config is not None and config.events:
        plan.append("kkl")
        if config.family is not None:
            plan += ["russo", "threshold"]
    return plan


def _configure_logging(flags: Dict[str, Any]) -> None:
    if flags.get("verbose"):
        logging.getLogger().setLevel(logging.DEBUG)
    elif flags.get("quiet"):
        logging.getLogger().setLevel(logging.WARNING)


MANIFEST_FLAGS = ("functions", "n", "t", "samples", "function_csv")


def run(subcommand: str, config_path: Optional[str], flags: Optional[Dict[str, Any]] = None) -> int:
    """
    Run one subcommand and write its report.

    Args:
        subcommand: One of SUBCOMMANDS or "all"
        config_path: JSON config (optional for ``trees``)
        flags: seed, workers, out, tolerance, functions, n, t, samples,
            function_csv, verbose, quiet

    Returns:
        0 if every checked inequality passed, 1 if one failed, 2 on config errors
    """
    flags = dict(flags or {})
    _configure_logging(flags)
    if subcommand != "all" and subcommand not in SUBCOMMANDS:
        logger.error(f"Unknown subcommand '{subcommand}'. Supported: {', '.join(list(SUBCOMMANDS) + ['all'])}")
        return EXIT_CONFIG

    try:
        settings = load_settings(flags)
        config = load_config(config_path) if config_path else None
        if config is None and subcommand not in CONFIG_FREE:
            raise ConfigError([f"--config is required for '{subcommand}'"])
        if flags.get("seed") is None and config is not None and config.seed is not None:
            settings = Settings(config.seed, settings.workers, settings.out_dir, settings.tolerance)
        tolerance = flags.get("tolerance") or (config.tolerance if config and config.tolerance else settings.tolerance)
        profile = get_profile(tolerance)

        runner = LabRunner(config, settings, profile, flags)
        plan = _plan(subcommand, config)
        for name in plan:
            logger.info(f"Running '{name}'")
            SUBCOMMANDS[name](runner)
    except ConfigError as e:
        logger.error(str(e))
        return EXIT_CONFIG
    except LabError as e:
        logger.error(f"Precondition failed: {str(e)}")
        return EXIT_CONFIG

    manifest = create_run_manifest(
        config.config_hash if config else None,
        settings.seed,
        profile.to_dict(),
        subcommand,
        {key: flags.get(key) for key in MANIFEST_FLAGS if flags.get(key) is not None},
    )
    labels = config.model.space.labels() if config else []
    runner.report.write(manifest, labels)
    print(runner.report.create_text_summary(manifest))

    failures = runner.report.failures()
    if failures:
        logger.error(f"{len(failures)} checks failed, first: {failures[0]}")
        return EXIT_FAILED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ips-lab",
        description="Verify functional inequalities on finite interacting particle systems",
    )
    parser.add_argument("subcommand", choices=list(SUBCOMMANDS) + ["all"])
    parser.add_argument("--config", help="JSON model config")
    parser.add_argument("--seed", type=int, help="Root seed (env IPS_LAB_SEED)")
    parser.add_argument("--workers", type=int, help="Worker threads (env IPS_LAB_WORKERS)")
    parser.add_argument("--out", help="Output directory (env IPS_LAB_OUT)")
    parser.add_argument("--tolerance", help="Tolerance profile: default, strict or loose")
    parser.add_argument("--functions", type=int, help="Size of the random test family")
    parser.add_argument("--n", type=int, help="Largest tree size for 'trees'")
    parser.add_argument("--t", type=float, help="Single time for 'simulate' and the time grids")
    parser.add_argument("--samples", type=int, help="Monte Carlo samples for 'simulate'")
    parser.add_argument("--function-csv", dest="function_csv", help="CSV with the function for 'simulate'")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("--quiet", action="store_true", help="Warnings and errors only")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    flags = vars(args)
    subcommand = flags.pop("subcommand")
    config_path = flags.pop("config")
    return run(subcommand, config_path, flags)
