"""
Config Loader
Reads JSON model configs, validates them strictly and builds the
model, events and parameter family they describe
"""

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

from ..core.errors import ConfigError, LabError
from ..core.influence import Event, ParamFamily, bernoulli_family, event_from_formula, event_from_states, gibbs_field_family
from ..core.statespace import (
    Alphabet,
    Measure,
    Model,
    SiteSet,
    StateSpace,
    build_heat_bath_kernels,
    build_table_kernels,
    check_detailed_balance,
    gibbs_measure,
    make_model,
)
from .helpers import config_hash

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
HYPERCONTRACTIVITY_TIMES = (0.1, 0.5, 1.0)
COMMUTATION_TIMES = (0.1, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0)

TOP_LEVEL_KEYS = {
    "schema_version", "name", "alphabet", "sites", "neighborhoods", "include_self",
    "kernel", "measure", "tolerance", "seed", "functions", "times", "commutation_times",
    "events", "family",
}
REQUIRED_KEYS = {"sites", "kernel"}
MEASURE_KEYS = {
    "gibbs": {"type", "beta", "field", "couplings"},
    "explicit": {"type", "weights"},
    "bernoulli": {"type", "p"},
    "stationary": {"type"},
}
KERNEL_KEYS = {"heat_bath": {"type", "hamiltonian"}, "table": {"type", "table"}}
EVENT_KEYS = {"name", "formula", "states"}
FAMILY_KEYS = {"type", "parameter", "hamiltonian", "grid", "threshold"}
HAMILTONIAN_KEYS = {"beta", "couplings", "field"}
FIELD_KEYS = {"base", "slope"}


@dataclass
class LabConfig:
    """A validated config and the objects built from it"""

    name: str
    model: Model
    raw: Dict[str, Any]
    config_hash: str
    tolerance: Optional[str] = None
    seed: Optional[int] = None
    n_functions: int = 100
    times: Tuple[float, ...] = HYPERCONTRACTIVITY_TIMES
    commutation_times: Tuple[float, ...] = COMMUTATION_TIMES
    events: List[Event] = field(default_factory=list)
    family: Optional[ParamFamily] = None
    family_grid: int = 9
    threshold: Optional[Tuple[float, float]] = None
    path: Optional[str] = None


def _unknown(section: str, data: Mapping[str, Any], allowed: set, errors: List[str]) -> None:
    for key in sorted(set(data) - allowed):
        errors.append(f"{section}: unknown key '{key}'")


def _expect(section: str, value: Any, kind, errors: List[str], label: str) -> bool:
    if isinstance(value, bool) and kind in (int, float, (int, float)):
        errors.append(f"{section}: expected {label}, got {value!r}")
        return False
    if not isinstance(value, kind):
        errors.append(f"{section}: expected {label}, got {type(value).__name__}")
        return False
    return True


def validate_config(data: Any) -> List[str]:
    """
    Schema check without building anything.

    Returns:
        One message per problem; empty when the config is well formed
    """
    errors: List[str] = []
    if not isinstance(data, dict):
        return [f"root: expected an object, got {type(data).__name__}"]
    _unknown("root", data, TOP_LEVEL_KEYS, errors)
    for key in sorted(REQUIRED_KEYS - set(data)):
        errors.append(f"root: missing required key '{key}'")

    if "schema_version" in data and data["schema_version"] != SCHEMA_VERSION:
        errors.append(f"schema_version: expected {SCHEMA_VERSION}, got {data['schema_version']!r}")
    if "name" in data:
        _expect("name", data["name"], str, errors, "a string")

    sites = data.get("sites")
    if sites is not None and _expect("sites", sites, list, errors, "a list"):
        if not sites:
            errors.append("sites: must not be empty")
        for i, site in enumerate(sites):
            if not isinstance(site, str):
                errors.append(f"sites[{i}]: expected a string, got {site!r}")
    known = set(sites) if isinstance(sites, list) else set()

    if "alphabet" in data and _expect("alphabet", data["alphabet"], list, errors, "a list"):
        if len(data["alphabet"]) < 2:
            errors.append("alphabet: needs at least 2 symbols")
    if "include_self" in data:
        _expect("include_self", data["include_self"], bool, errors, "a boolean")
    if "neighborhoods" in data and _expect("neighborhoods", data["neighborhoods"], dict, errors, "an object"):
        for site, members in data["neighborhoods"].items():
            if site not in known:
                errors.append(f"neighborhoods: unknown site '{site}'")
            if not isinstance(members, list):
                errors.append(f"neighborhoods.{site}: expected a list")
                continue
            for member in members:
                if member not in known:
                    errors.append(f"neighborhoods.{site}: unknown site '{member}'")

    _validate_measure(data.get("measure"), known, errors)
    measure = data.get("measure")
    if isinstance(measure, dict) and measure.get("type") == "bernoulli" and len(data.get("alphabet", [0, 1])) != 2:
        errors.append("measure: 'bernoulli' needs a two-symbol alphabet")
    _validate_kernel(data.get("kernel"), measure, known, errors)

    if "tolerance" in data:
        _expect("tolerance", data["tolerance"], str, errors, "a profile name")
    if "seed" in data:
        _expect("seed", data["seed"], int, errors, "an integer")
    if "functions" in data and _expect("functions", data["functions"], int, errors, "an integer"):
        if data["functions"] < 1:
            errors.append("functions: must be at least 1")
    for key in ("times", "commutation_times"):
        if key in data and _expect(key, data[key], list, errors, "a list"):
            for i, t in enumerate(data[key]):
                if isinstance(t, bool) or not isinstance(t, (int, float)) or t < 0:
                    errors.append(f"{key}[{i}]: expected a nonnegative number, got {t!r}")

    if "events" in data and _expect("events", data["events"], list, errors, "a list"):
        for i, event in enumerate(data["events"]):
            section = f"events[{i}]"
            if not _expect(section, event, dict, errors, "an object"):
                continue
            _unknown(section, event, EVENT_KEYS, errors)
            if ("formula" in event) == ("states" in event):
                errors.append(f"{section}: give exactly one of 'formula' or 'states'")

    if "family" in data:
        _validate_family(data["family"], errors)
    return errors


def _validate_couplings(section: str, entry: Mapping[str, Any], known: set, errors: List[str]) -> None:
    for i, coupling in enumerate(entry.get("couplings", [])):
        if not (isinstance(coupling, list) and len(coupling) == 3):
            errors.append(f"{section}.couplings[{i}]: expected [site, site, J]")
        elif coupling[0] not in known or coupling[1] not in known:
            errors.append(f"{section}.couplings[{i}]: unknown site in {coupling[:2]}")
    if isinstance(entry.get("field"), dict):
        for site in entry["field"]:
            if site not in known:
                errors.append(f"{section}.field: unknown site '{site}'")


def _validate_measure(measure: Any, known: set, errors: List[str]) -> None:
    if measure is None:
        return
    if isinstance(measure, list):
        for i, w in enumerate(measure):
            if isinstance(w, bool) or not isinstance(w, (int, float)) or w < 0:
                errors.append(f"measure[{i}]: expected a nonnegative weight, got {w!r}")
        return
    if not _expect("measure", measure, dict, errors, "an array of weights or an object"):
        return
    kind = measure.get("type")
    if kind not in MEASURE_KEYS:
        errors.append(f"measure.type: expected one of {sorted(MEASURE_KEYS)}, got {kind!r}")
        return
    _unknown("measure", measure, MEASURE_KEYS[kind], errors)
    if kind == "gibbs":
        _validate_couplings("measure", measure, known, errors)
    if kind == "explicit" and not isinstance(measure.get("weights"), list):
        errors.append("measure.weights: expected a list")
    if kind == "bernoulli":
        p = measure.get("p")
        if isinstance(p, bool) or not isinstance(p, (int, float)) or not 0 < p < 1:
            errors.append(f"measure.p: expected a number in (0, 1), got {p!r}")


def _validate_kernel(kernel: Any, measure: Any, known: set, errors: List[str]) -> None:
    if kernel is None or not _expect("kernel", kernel, dict, errors, "an object"):
        return
    kind = kernel.get("type")
    if kind not in KERNEL_KEYS:
        errors.append(f"kernel.type: expected one of {sorted(KERNEL_KEYS)}, got {kind!r}")
        return
    _unknown("kernel", kernel, KERNEL_KEYS[kind], errors)
    if kind == "table":
        if not isinstance(kernel.get("table"), dict):
            errors.append("kernel.table: expected an object keyed by site")
        return
    hamiltonian = kernel.get("hamiltonian")
    has_measure = measure is not None and not (isinstance(measure, dict) and measure.get("type") == "stationary")
    if hamiltonian is None:
        if not has_measure:
            errors.append("kernel: 'heat_bath' needs a 'hamiltonian' or an explicit 'measure'")
        return
    if has_measure:
        errors.append("kernel: give either 'kernel.hamiltonian' or 'measure', not both")
    if _expect("kernel.hamiltonian", hamiltonian, dict, errors, "an object"):
        _unknown("kernel.hamiltonian", hamiltonian, HAMILTONIAN_KEYS, errors)
        _validate_couplings("kernel.hamiltonian", hamiltonian, known, errors)


def _validate_family(family: Any, errors: List[str]) -> None:
    if not _expect("family", family, dict, errors, "an object"):
        return
    _unknown("family", family, FAMILY_KEYS, errors)
    if family.get("type", "gibbs") not in ("gibbs", "bernoulli"):
        errors.append(f"family.type: expected 'gibbs' or 'bernoulli', got {family.get('type')!r}")
    for key in ("parameter", "threshold"):
        if key in family:
            pair = family[key]
            if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(v, (int, float)) for v in pair)):
                errors.append(f"family.{key}: expected [a, b]")
            elif not pair[0] < pair[1]:
                errors.append(f"family.{key}: expected a < b, got {pair}")
    if "parameter" not in family:
        errors.append("family: missing required key 'parameter'")
    elif "threshold" in family and not any(e.startswith("family.") for e in errors):
        (a, b), (p1, p2) = family["parameter"], family["threshold"]
        if not a < p1 < p2 < b:
            errors.append(f"family.threshold: must lie strictly inside the parameter interval {family['parameter']}")
    if "grid" in family and (not isinstance(family["grid"], int) or family["grid"] < 1):
        errors.append("family.grid: expected a positive integer")
    hamiltonian = family.get("hamiltonian")
    if hamiltonian is not None and _expect("family.hamiltonian", hamiltonian, dict, errors, "an object"):
        _unknown("family.hamiltonian", hamiltonian, HAMILTONIAN_KEYS, errors)
        if isinstance(hamiltonian.get("field"), dict):
            _unknown("family.hamiltonian.field", hamiltonian["field"], FIELD_KEYS, errors)


def _build_measure(space: StateSpace, entry: Any) -> Optional[Measure]:
    """Measure from a plain weight array or a typed object; None means solve for it"""
    if entry is None:
        return None
    if isinstance(entry, list):
        return Measure(space, entry)
    kind = entry["type"]
    if kind == "gibbs":
        couplings = [(a, b, float(j)) for a, b, j in entry.get("couplings", [])]
        return gibbs_measure(space, float(entry.get("beta", 1.0)), entry.get("field", 0.0), couplings)
    if kind == "explicit":
        return Measure.from_unnormalized(space, entry["weights"])
    if kind == "bernoulli":
        p = float(entry["p"])
        ones = space.codes.sum(axis=1)
        weights = p ** ones * (1.0 - p) ** (space.n_sites - ones)
        return Measure(space, weights / weights.sum())
    return None


def _build_model(data: Dict[str, Any]) -> Model:
    alphabet = Alphabet(tuple(data.get("alphabet", [0, 1])))
    site_set = SiteSet(
        tuple(data["sites"]),
        neighborhood={s: tuple(m) for s, m in data.get("neighborhoods", {}).items()},
        include_self=data.get("include_self", True),
    )
    space = StateSpace(alphabet, site_set)
    mu = _build_measure(space, data.get("measure"))

    kernel = data["kernel"]
    name = data.get("name", "model")
    if kernel["type"] == "heat_bath":
        hamiltonian = kernel.get("hamiltonian")
        if hamiltonian is not None:
            couplings = [(a, b, float(j)) for a, b, j in hamiltonian.get("couplings", [])]
            mu = gibbs_measure(space, float(hamiltonian.get("beta", 1.0)), hamiltonian.get("field", 0.0), couplings)
        return Model(build_heat_bath_kernels(mu), mu, name=name)
    return make_model(build_table_kernels(space, kernel["table"]), mu, name=name)


def _build_family(data: Dict[str, Any]) -> ParamFamily:
    entry = data["family"]
    interval = (float(entry["parameter"][0]), float(entry["parameter"][1]))
    if entry.get("type", "gibbs") == "bernoulli":
        return bernoulli_family(tuple(data["sites"]), interval)
    hamiltonian = entry.get("hamiltonian", {})
    field_entry = hamiltonian.get("field", {})
    return gibbs_field_family(
        tuple(data["sites"]),
        [(a, b, float(j)) for a, b, j in hamiltonian.get("couplings", [])],
        beta=float(hamiltonian.get("beta", 1.0)),
        base=float(field_entry.get("base", 0.0)),
        slope=float(field_entry.get("slope", 1.0)),
        interval=interval,
        neighborhood={s: tuple(m) for s, m in data.get("neighborhoods", {}).items()},
        name=data.get("name", "family"),
    )


def parse_config(data: Any, path: Optional[str] = None, structural_tol: float = 1e-10) -> LabConfig:
    """
    Validate a decoded config and build its objects.

    Raises:
        ConfigError: With one message per problem
    """
    errors = validate_config(data)
    if errors:
        raise ConfigError(errors, path)
    try:
        model = _build_model(data)
        events = []
        for i, entry in enumerate(data.get("events", [])):
            name = entry.get("name", f"event_{i}")
            if "formula" in entry:
                events.append(event_from_formula(model.space, entry["formula"], name))
            else:
                events.append(event_from_states(model.space, entry["states"], name))
        family = _build_family(data) if "family" in data else None
    except ConfigError as e:
        raise ConfigError(e.errors, path)
    except LabError as e:
        raise ConfigError([str(e)], path)

    balance = check_detailed_balance(model, tol=structural_tol)
    if not balance.ok:
        raise ConfigError(
            [f"kernels: detailed balance fails (worst violation {balance.worst_violation:.3e} at {balance.witness})"],
            path,
        )

    family_entry = data.get("family", {})
    threshold = family_entry.get("threshold")
    config = LabConfig(
        name=data.get("name", "model"),
        model=model,
        raw=data,
        config_hash=config_hash(data),
        tolerance=data.get("tolerance"),
        seed=data.get("seed"),
        n_functions=int(data.get("functions", 100)),
        times=tuple(float(t) for t in data.get("times", HYPERCONTRACTIVITY_TIMES)),
        commutation_times=tuple(float(t) for t in data.get("commutation_times", COMMUTATION_TIMES)),
        events=events,
        family=family,
        family_grid=int(family_entry.get("grid", 9)),
        threshold=(float(threshold[0]), float(threshold[1])) if threshold else None,
        path=path,
    )
    logger.info(f"Loaded config '{config.name}': {model.n_states} states, {len(events)} events")
    return config


def load_config(path: str, structural_tol: float = 1e-10) -> LabConfig:
    """
    Read and parse a JSON config file.

    Raises:
        ConfigError: On unreadable files, JSON syntax errors (with line and column)
            and schema or model errors
    """
    if not os.path.exists(path):
        raise ConfigError([f"file not found: {path}"], path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError([f"line {e.lineno}, column {e.colno}: {e.msg}"], path)
    return parse_config(data, path=path, structural_tol=structural_tol)
