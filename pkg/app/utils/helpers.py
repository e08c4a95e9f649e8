"""
Utility Helper Functions
JSON-safe conversion, hashing, run manifests, and report and function-table I/O
"""

import hashlib
import json
import logging
import math
import os
from dataclasses import asdict, is_dataclass
from datetime import datetime, timezone
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Optional, Sequence

import numpy as np
import pandas as pd

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

TOOL_NAME = "ips-inequality-lab"


def to_jsonable(obj: Any) -> Any:
    """
    Convert reports to plain JSON values.

    Non-finite floats become the strings "inf", "-inf" and "nan"; Fractions become
    "p/q" strings; dataclasses, numpy arrays and scalars are unpacked.
    """
    if is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return to_jsonable(obj.to_dict())
        return to_jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(obj, Enum):
        return obj.value
    return obj


def canonical_json(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def config_hash(data: Any) -> str:
    """sha256 of the canonical JSON form of a config"""
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()


def run_timestamp() -> str:
    """UTC timestamp, pinned by SOURCE_DATE_EPOCH when it is set"""
    epoch = os.getenv("SOURCE_DATE_EPOCH")
    if epoch:
        moment = datetime.fromtimestamp(int(epoch), tz=timezone.utc)
    else:
        moment = datetime.now(tz=timezone.utc)
    return moment.strftime("%Y-%m-%dT%H:%M:%SZ")


def create_run_manifest(
    config_hash_value: Optional[str],
    seed: int,
    tolerance: Dict[str, Any],
    subcommand: str,
    flags: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    """
    Metadata that reproduces a run.

    Args:
        config_hash_value: Hash of the config (None for config-free subcommands)
        seed: Root seed
        tolerance: Frozen tolerance profile
        subcommand: Subcommand name
        flags: Remaining flags that change results

    Returns:
        Manifest dictionary
    """
    from .. import __version__

    return {
        "config_hash": config_hash_value,
        "seed": seed,
        "tolerance_profile": tolerance,
        "subcommand": subcommand,
        "flags": to_jsonable(flags or {}),
        "timestamp": run_timestamp(),
        "tool": TOOL_NAME,
        "tool_version": __version__,
    }


def save_report(report: Dict[str, Any], output_dir: str = "outputs", filename: str = "report.json") -> str:
    """
    Write a report as sorted, indented JSON.

    Returns:
        Path to the saved file
    """
    try:
        os.makedirs(output_dir, exist_ok=True)
        filepath = os.path.join(output_dir, filename)
        with open(filepath, "w", encoding="utf-8") as f:
            json.dump(to_jsonable(report), f, indent=2, sort_keys=True, ensure_ascii=False)
            f.write("\n")
        logger.info(f"Report saved to: {filepath}")
        return filepath
    except OSError as e:
        logger.error(f"Error saving report: {str(e)}")
        raise


def load_report(filepath: str) -> Optional[Dict[str, Any]]:
    """
    Load a previously saved report.

    Returns:
        Report data or None if it cannot be read
    """
    try:
        with open(filepath, "r", encoding="utf-8") as f:
            data = json.load(f)
        logger.info(f"Report loaded from: {filepath}")
        return data
    except (OSError, json.JSONDecodeError) as e:
        logger.error(f"Error loading report: {str(e)}")
        return None


def functions_frame(labels: Sequence[str], functions: Dict[str, Sequence[float]]) -> pd.DataFrame:
    """One column per function, rows indexed by configuration label"""
    frame = pd.DataFrame({name: np.asarray(values, dtype=float) for name, values in functions.items()}, index=list(labels))
    frame.index.name = "state"
    return frame


def save_function_csv(labels: Sequence[str], functions: Dict[str, Sequence[float]], filepath: str) -> str:
    functions_frame(labels, functions).to_csv(filepath, float_format="%.17g")
    logger.info(f"Functions saved to: {filepath}")
    return filepath


def load_function_csv(labels: Sequence[str], filepath: str, column: Optional[str] = None) -> np.ndarray:
    """
    Read a function on Ω from CSV, aligned to the given state labels.

    The file needs a ``state`` column; ``column`` picks the value column (default:
    the first one).

    Raises:
        ValueError: On missing states or columns
    """
    frame = pd.read_csv(filepath, dtype={"state": str}).set_index("state")
    if frame.empty or len(frame.columns) == 0:
        raise ValueError(f"{filepath}: no value columns")
    name = column or frame.columns[0]
    if name not in frame.columns:
        raise ValueError(f"{filepath}: no column '{name}'")
    missing = [label for label in labels if label not in frame.index]
    if missing:
        raise ValueError(f"{filepath}: missing states {missing[:5]}")
    return frame.loc[list(labels), name].to_numpy(dtype=float)
