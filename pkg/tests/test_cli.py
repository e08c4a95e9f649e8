"""
Tests for the command-line runner, exit codes and report files
"""
import json
import os
import sys

import pandas as pd
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from app import cli
from app.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, main, run


def read_report(out_dir):
    with open(os.path.join(out_dir, "report.json"), "r", encoding="utf-8") as f:
        return json.load(f)


class TestTrees:
    def test_trees_without_config(self, tmp_path):
        code = run("trees", None, {"n": 4, "out": str(tmp_path)})
        assert code == EXIT_OK
        report = read_report(tmp_path)
        section = report["sections"]["trees"]
        assert len(section["trees"]) == 5
        assert [row["count"] for row in section["counts"]] == [1, 1, 2, 5]
        assert report["manifest"]["config_hash"] is None
        assert report["summary"]["passed_all"]

    def test_masses_are_exact_strings(self, tmp_path):
        run("trees", None, {"n": 4, "out": str(tmp_path)})
        masses = {row["tree"]: row["mass_t1"] for row in read_report(tmp_path)["sections"]["trees"]["trees"]}
        assert masses["[[. .] [. .]]"] == "1/30"
        assert masses["[[[. .] .] .]"] == "1/15"

    def test_tree_cap_is_a_config_error(self, tmp_path):
        assert run("trees", None, {"n": 11, "out": str(tmp_path)}) == EXIT_CONFIG

    def test_argv_entry_point(self, tmp_path):
        assert main(["trees", "--n", "3", "--out", str(tmp_path), "--quiet"]) == EXIT_OK


class TestConfigErrors:
    def test_malformed_config(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"schema_version": 1, "sites": ["a"], "bogus": True}), encoding="utf-8")
        assert run("constants", str(path), {"out": str(tmp_path)}) == EXIT_CONFIG
        assert not (tmp_path / "report.json").exists()

    def test_config_required(self, tmp_path):
        assert run("constants", None, {"out": str(tmp_path)}) == EXIT_CONFIG

    def test_unknown_tolerance(self, tmp_path, config_path):
        flags = {"out": str(tmp_path), "tolerance": "sloppy"}
        assert run("constants", config_path("ising2site.json"), flags) == EXIT_CONFIG

    def test_family_required_for_russo(self, tmp_path, config_path):
        assert run("russo", config_path("ising3ring.json"), {"out": str(tmp_path)}) == EXIT_CONFIG

    def test_unknown_subcommand(self, tmp_path):
        assert run("prove", None, {"out": str(tmp_path)}) == EXIT_CONFIG


class TestVerification:
    def test_constants_pass(self, tmp_path, config_path):
        code = run("constants", config_path("ising2site.json"), {"out": str(tmp_path), "functions": 20})
        assert code == EXIT_OK
        section = read_report(tmp_path)["sections"]["constants"]
        assert section["structural_identities"]["ok"]
        assert section["poincare"]["violations"] == 0

    def test_commutation_uses_its_own_time_grid(self, tmp_path, config_path):
        code = run("commutation", config_path("ising2site.json"), {"out": str(tmp_path), "functions": 5})
        assert code == EXIT_OK
        rows = read_report(tmp_path)["sections"]["commutation"]["times"]
        assert [row["t"] for row in rows] == [0.1, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0]

    def test_t_flag_pins_commutation_time(self, tmp_path, config_path):
        run("commutation", config_path("ising2site.json"), {"out": str(tmp_path), "functions": 5, "t": 2.0})
        rows = read_report(tmp_path)["sections"]["commutation"]["times"]
        assert [row["t"] for row in rows] == [2.0]

    def test_failed_inequality_exits_one(self, tmp_path, config_path, monkeypatch):
        monkeypatch.setattr(cli, "audited_log_constant", lambda model, constants: -50.0)
        code = run("talagrand", config_path("ising2site.json"), {"out": str(tmp_path), "functions": 10})
        assert code == EXIT_FAILED
        report = read_report(tmp_path)
        assert not report["summary"]["passed_all"]
        assert any(path.startswith("talagrand.talagrand") for path in report["summary"]["failures"])
        witness = pd.read_csv(tmp_path / "witness.csv", dtype={"state": str})
        assert list(witness["state"]) == ["00", "01", "10", "11"]

    def test_threshold_and_russo(self, tmp_path, config_path):
        flags = {"out": str(tmp_path)}
        assert run("russo", config_path("bernoulli3.json"), flags) == EXIT_OK
        assert run("threshold", config_path("bernoulli3.json"), flags) == EXIT_OK
        events = read_report(tmp_path)["sections"]["threshold"]["events"]
        assert {e["event"] for e in events} == {"dictator_s0", "majority"}

    def test_simulate_with_function_csv(self, tmp_path, config_path):
        csv_path = tmp_path / "f.csv"
        pd.DataFrame({"state": ["00", "01", "10", "11"], "f": [1.0, -1.0, 0.5, 2.0]}).to_csv(csv_path, index=False)
        flags = {"out": str(tmp_path), "samples": 2000, "t": 1.0, "function_csv": str(csv_path)}
        assert run("simulate", config_path("ising2site.json"), flags) == EXIT_OK
        table = pd.read_csv(tmp_path / "witness.csv", dtype={"state": str})
        assert list(table.columns) == ["state", "exact", "estimate", "std_err", "z"]


class TestReproducibility:
    def test_all_is_byte_identical(self, tmp_path, config_path, monkeypatch):
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
        outputs = []
        for name in ("first", "second"):
            out = tmp_path / name
            flags = {"out": str(out), "seed": 7, "functions": 20, "samples": 2000}
            assert run("all", config_path("ising2site.json"), flags) == EXIT_OK
            outputs.append((out / "report.json").read_bytes())
        assert outputs[0] == outputs[1]

    def test_manifest_records_run(self, tmp_path, config_path, monkeypatch):
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
        run("reverse", config_path("ising2site.json"), {"out": str(tmp_path), "seed": 5, "functions": 10})
        manifest = read_report(tmp_path)["manifest"]
        assert manifest["seed"] == 5
        assert manifest["subcommand"] == "reverse"
        assert manifest["timestamp"] == "1970-01-01T00:00:00Z"
        assert manifest["tolerance_profile"]["name"] == "default"
        assert manifest["flags"] == {"functions": 10}


if __name__ == "__main__":
    pytest.main([__file__])
