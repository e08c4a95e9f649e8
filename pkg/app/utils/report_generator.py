"""
Report Generator
Assembles verification results into report.json, witness.csv and a short text summary
"""

import logging
import os
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .helpers import functions_frame, save_report, to_jsonable

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

VERDICT_KEYS = ("passed", "ok")


def _under(path: str, section: str) -> bool:
    return path == section or path.startswith(section + ".") or path.startswith(section + "[")


class ReportGenerator:
    """Collect sections, count verdicts and write the output files of one run"""

    def __init__(self, output_dir: str = "outputs"):
        self.output_dir = output_dir
        self.sections: Dict[str, Any] = {}
        self.witnesses: Dict[str, np.ndarray] = {}
        self.simulation: Optional[pd.DataFrame] = None

    def add_section(self, name: str, content: Any, witnesses: Optional[Dict[str, Sequence[float]]] = None):
        self.sections[name] = to_jsonable(content)
        for key, values in (witnesses or {}).items():
            self.witnesses[f"{name}.{key}"] = np.asarray(values, dtype=float)

    def set_simulation(self, labels: Sequence[str], exact: Sequence[float], estimate: Sequence[float], std_err: Sequence[float]):
        frame = pd.DataFrame(
            {"exact": exact, "estimate": estimate, "std_err": std_err},
            index=pd.Index(list(labels), name="state"),
        )
        with np.errstate(divide="ignore", invalid="ignore"):
            frame["z"] = (frame["estimate"] - frame["exact"]) / frame["std_err"]
        self.simulation = frame

    def verdict_counts(self) -> Dict[str, int]:
        """Number of passed and failed verdicts found anywhere in the sections"""
        counts = {"passed": 0, "failed": 0}

        def walk(node: Any):
            if isinstance(node, dict):
                for key in VERDICT_KEYS:
                    if isinstance(node.get(key), bool):
                        counts["passed" if node[key] else "failed"] += 1
                for value in node.values():
                    walk(value)
            elif isinstance(node, list):
                for value in node:
                    walk(value)

        walk(self.sections)
        return counts

    def failures(self) -> List[str]:
        """Dotted paths of every failed verdict"""
        found: List[str] = []

        def walk(node: Any, path: str):
            if isinstance(node, dict):
                for key in VERDICT_KEYS:
                    if node.get(key) is False:
                        found.append(path or "root")
                for key, value in node.items():
                    walk(value, f"{path}.{key}" if path else key)
            elif isinstance(node, list):
                for i, value in enumerate(node):
                    walk(value, f"{path}[{i}]")

        walk(self.sections, "")
        return found

    def build(self, manifest: Dict[str, Any]) -> Dict[str, Any]:
        counts = self.verdict_counts()
        return {
            "manifest": manifest,
            "summary": {**counts, "passed_all": counts["failed"] == 0, "failures": self.failures()},
            "sections": self.sections,
        }

    def write(self, manifest: Dict[str, Any], labels: Sequence[str] = ()) -> Dict[str, str]:
        """
        Write report.json and, when there is something to tabulate, witness.csv.

        Returns:
            Paths of the written files
        """
        report = self.build(manifest)
        paths = {"report": save_report(report, self.output_dir)}
        witness_path = os.path.join(self.output_dir, "witness.csv")
        if self.simulation is not None:
            self.simulation.to_csv(witness_path, float_format="%.17g")
            paths["witness"] = witness_path
        elif self.witnesses and labels:
            functions_frame(labels, self.witnesses).to_csv(witness_path, float_format="%.17g")
            paths["witness"] = witness_path
        if "witness" in paths:
            logger.info(f"Witness table saved to: {witness_path}")
        return paths

    def create_text_summary(self, manifest: Dict[str, Any]) -> str:
        counts = self.verdict_counts()
        lines = [
            f"{manifest.get('tool', 'lab')} {manifest.get('tool_version', '')} :: {manifest.get('subcommand')}",
            f"seed={manifest.get('seed')} tolerance={manifest.get('tolerance_profile', {}).get('name')}",
            "=" * 60,
        ]
        for name, content in self.sections.items():
            status = "FAIL" if any(_under(path, name) for path in self.failures()) else "ok"
            lines.append(f"{name:<28} {status}")
        lines.append("=" * 60)
        lines.append(f"passed={counts['passed']} failed={counts['failed']}")
        return "\n".join(lines)
