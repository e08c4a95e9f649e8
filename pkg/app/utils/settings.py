"""
Runtime Settings
Environment defaults (optionally from a .env file) and named tolerance profiles
"""

import logging
import os
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

from dotenv import load_dotenv

from ..core.errors import ConfigError

# Load environment variables
load_dotenv()

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ToleranceProfile:
    """Tolerances frozen into every report"""

    name: str
    structural: float
    normalization: float
    slack: float
    mc_sigmas: float
    quadrature: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


PROFILES: Dict[str, ToleranceProfile] = {
    "default": ToleranceProfile("default", structural=1e-10, normalization=1e-12, slack=1e-6, mc_sigmas=4.0, quadrature=1e-6),
    "strict": ToleranceProfile("strict", structural=1e-12, normalization=1e-13, slack=1e-9, mc_sigmas=3.5, quadrature=1e-8),
    "loose": ToleranceProfile("loose", structural=1e-8, normalization=1e-10, slack=1e-4, mc_sigmas=5.0, quadrature=1e-4),
}


def get_profile(name: str) -> ToleranceProfile:
    """
    Look up a tolerance profile by name.

    Raises:
        ConfigError: If the profile is unknown
    """
    try:
        return PROFILES[name]
    except KeyError:
        raise ConfigError([f"tolerance: unknown profile '{name}' (known: {', '.join(PROFILES)})"])


@dataclass(frozen=True)
class Settings:
    seed: int
    workers: int
    out_dir: str
    tolerance: str


def _env_int(key: str, default: int) -> int:
    raw = os.getenv(key)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError([f"{key}: expected an integer, got '{raw}'"])


def load_settings(overrides: Optional[Dict[str, Any]] = None) -> Settings:
    """
    Defaults from IPS_LAB_SEED, IPS_LAB_WORKERS, IPS_LAB_OUT and IPS_LAB_TOLERANCE;
    non-None entries of ``overrides`` (CLI flags) win.
    """
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    settings = Settings(
        seed=int(overrides.get("seed", _env_int("IPS_LAB_SEED", 7))),
        workers=max(1, int(overrides.get("workers", _env_int("IPS_LAB_WORKERS", 1)))),
        out_dir=str(overrides.get("out", os.getenv("IPS_LAB_OUT", "outputs"))),
        tolerance=str(overrides.get("tolerance", os.getenv("IPS_LAB_TOLERANCE", "default"))),
    )
    logger.debug(f"Settings: {settings}")
    return settings
