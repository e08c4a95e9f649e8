"""
Tests for JSON conversion, function tables and report assembly
"""
import math
import os
import sys
from fractions import Fraction

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from app.utils.helpers import (
    canonical_json,
    config_hash,
    create_run_manifest,
    load_function_csv,
    load_report,
    save_function_csv,
    to_jsonable,
)
from app.utils.report_generator import ReportGenerator


class TestJsonable:
    def test_non_finite_and_fractions(self):
        data = to_jsonable({"a": math.inf, "b": -math.inf, "c": math.nan, "d": Fraction(1, 15)})
        assert data == {"a": "inf", "b": "-inf", "c": "nan", "d": "1/15"}

    def test_numpy_values(self):
        data = to_jsonable({"x": np.array([1.0, 2.0]), "n": np.int64(3), "ok": np.bool_(True)})
        assert data == {"x": [1.0, 2.0], "n": 3, "ok": True}
        assert isinstance(data["ok"], bool)

    def test_hash_ignores_key_order(self):
        assert canonical_json({"b": 1, "a": 2}) == canonical_json({"a": 2, "b": 1})
        assert config_hash({"b": 1, "a": 2}) == config_hash({"a": 2, "b": 1})
        assert config_hash({"a": 1}) != config_hash({"a": 2})


class TestManifest:
    def test_pinned_timestamp(self, monkeypatch):
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "86400")
        manifest = create_run_manifest("abc", 7, {"name": "default"}, "constants", {"n": 4})
        assert manifest["timestamp"] == "1970-01-02T00:00:00Z"
        assert manifest["seed"] == 7
        assert manifest["flags"] == {"n": 4}


class TestFunctionCsv:
    def test_save_and_reorder(self, tmp_path):
        path = str(tmp_path / "f.csv")
        save_function_csv(["00", "01", "10"], {"f": [1.5, -2.0, 0.25]}, path)
        values = load_function_csv(["10", "00", "01"], path)
        np.testing.assert_allclose(values, [0.25, 1.5, -2.0])

    def test_missing_state(self, tmp_path):
        path = str(tmp_path / "f.csv")
        save_function_csv(["00", "01"], {"f": [1.0, 2.0]}, path)
        with pytest.raises(ValueError, match="missing states"):
            load_function_csv(["00", "01", "11"], path)

    def test_unknown_column(self, tmp_path):
        path = str(tmp_path / "f.csv")
        save_function_csv(["0", "1"], {"f": [1.0, 2.0]}, path)
        with pytest.raises(ValueError, match="no column"):
            load_function_csv(["0", "1"], path, column="g")


class TestReportGenerator:
    def test_counts_and_failure_paths(self):
        report = ReportGenerator()
        report.add_section("constants", {"poincare": {"passed": True}, "jensen": {"passed": False}})
        report.add_section("trees", {"counts": [{"passed": True}, {"passed": False}]})
        assert report.verdict_counts() == {"passed": 2, "failed": 2}
        assert report.failures() == ["constants.jensen", "trees.counts[1]"]

    def test_summary_matches_whole_section_names(self):
        report = ReportGenerator()
        report.add_section("talagrand", {"ok": True})
        report.add_section("talagrand_extra", {"check": {"passed": False}})
        lines = report.create_text_summary({"subcommand": "all"}).splitlines()
        assert any(line.startswith("talagrand ") and line.endswith("ok") for line in lines)
        assert any(line.startswith("talagrand_extra") and line.endswith("FAIL") for line in lines)

    def test_write_report_and_witness(self, tmp_path):
        report = ReportGenerator(str(tmp_path))
        report.add_section("constants", {"passed": True}, {"rho_witness": [0.5, 1.5]})
        paths = report.write({"subcommand": "constants"}, labels=["0", "1"])
        saved = load_report(paths["report"])
        assert saved["summary"]["passed_all"] is True
        assert saved["sections"]["constants"] == {"passed": True}
        np.testing.assert_allclose(load_function_csv(["1", "0"], paths["witness"]), [1.5, 0.5])

    def test_simulation_table_takes_precedence(self, tmp_path):
        report = ReportGenerator(str(tmp_path))
        report.add_section("simulate", {"passed": True}, {"f": [0.0, 1.0]})
        report.set_simulation(["0", "1"], [1.0, 2.0], [1.1, 1.9], [0.1, 0.1])
        paths = report.write({"subcommand": "simulate"}, labels=["0", "1"])
        with open(paths["witness"], encoding="utf-8") as f:
            header = f.readline().strip()
        assert header == "state,exact,estimate,std_err,z"

    def test_load_missing_report(self, tmp_path):
        assert load_report(str(tmp_path / "absent.json")) is None


if __name__ == "__main__":
    pytest.main([__file__])
