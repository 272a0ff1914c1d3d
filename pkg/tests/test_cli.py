"""Command-line harness: scenarios, schemas, exit codes, reproducibility."""

import json
import math
import os

import pytest

from demonlab.cli import (
    RunConfig,
    SWEEP_COLUMNS,
    main,
    run_scenario,
    run_sweep,
    write_atomic,
)
from demonlab.errors import ValidationError


def run_cli(argv):
    return main(argv)


class TestSweep:
    def test_break_even_point(self, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        status = run_cli(["sweep", "--ell-over-l", "0.5", "--cycles", "20000",
                          "--seed", "0", "--out", str(out)])
        assert status == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("#")
        assert lines[1] == ",".join(SWEEP_COLUMNS)
        fields = lines[2].split(",")
        assert float(fields[1]) == 0.0  # empirical, exactly: every cycle nets 0
        assert float(fields[3]) == 0.0  # analytic
        assert fields[5] == "true"

    def test_three_point_sweep_passes_three_sigma(self, tmp_path):
        out = tmp_path / "sweep.csv"
        status = run_cli(["sweep", "--ell-over-l", "0.5,0.25,0.125",
                          "--cycles", "50000", "--seed", "1",
                          "--out", str(out)])
        assert status == 0
        rows = out.read_text().splitlines()[2:]
        assert len(rows) == 3
        assert all(r.endswith("true") for r in rows)

    def test_json_lines_format(self, tmp_path):
        out = tmp_path / "sweep.jsonl"
        status = run_cli(["sweep", "--ell-over-l", "0.25", "--cycles", "5000",
                          "--seed", "3", "--format", "json-lines",
                          "--out", str(out)])
        assert status == 0
        rows = [json.loads(line) for line in out.read_text().splitlines()]
        assert rows[0]["schema"] == "demonlab-sweep-v1"
        assert set(rows[0]) == {"schema", "ell_over_L", "empirical", "stderr",
                                "analytic", "gap", "pass"}

    def test_merged_seeds_shrink_stderr(self):
        one = run_sweep([0.25], 20_000, [0])
        ten = run_sweep([0.25], 20_000, list(range(10)))
        ratio = one[0].stderr / ten[0].stderr
        assert 2.5 < ratio < 4.0  # about sqrt(10)

    def test_extreme_ratio(self):
        points = run_sweep([0.999], 50_000, [0])
        assert points[0].analytic == pytest.approx(-0.98859, abs=1e-4)
        assert points[0].passed

    def test_deterministic_output(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            run_cli(["sweep", "--ell-over-l", "0.25,0.5", "--cycles", "10000",
                     "--seeds", "0,1", "--out", str(path)])
        assert a.read_bytes() == b.read_bytes()


class TestArgumentHandling:
    def test_unknown_scenario_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli(["wibble"])
        assert exc.value.code == 2

    def test_invalid_ratio_exits_2(self, tmp_path, capsys):
        out = tmp_path / "never.csv"
        status = run_cli(["sweep", "--ell-over-l", "1.5", "--out", str(out)])
        assert status == 2
        assert not out.exists()  # no partial file
        assert "error" in capsys.readouterr().err

    def test_bad_config_file_exits_2(self, tmp_path, capsys):
        conf = tmp_path / "conf.json"
        conf.write_text("{not json")
        assert run_cli(["sweep", "--config", str(conf)]) == 2

    def test_unknown_config_key_exits_2(self, tmp_path, capsys):
        conf = tmp_path / "conf.json"
        conf.write_text(json.dumps({"cycless": 10}))
        assert run_cli(["sweep", "--config", str(conf)]) == 2

    def test_config_file_supplies_defaults(self, tmp_path):
        conf = tmp_path / "conf.json"
        out = tmp_path / "s.csv"
        conf.write_text(json.dumps(
            {"ell_over_l": [0.5], "cycles": 4000, "seeds": [0, 1]}))
        status = run_cli(["sweep", "--config", str(conf), "--out", str(out)])
        assert status == 0
        assert len(out.read_text().splitlines()) == 3

    def test_flags_override_config(self, tmp_path):
        conf = tmp_path / "conf.json"
        out = tmp_path / "s.csv"
        conf.write_text(json.dumps({"ell_over_l": [0.9]}))
        run_cli(["sweep", "--config", str(conf), "--ell-over-l", "0.5",
                 "--cycles", "2000", "--out", str(out)])
        assert out.read_text().splitlines()[2].startswith("0.500000")

    def test_demon_threads_must_be_integer(self, tmp_path, monkeypatch):
        monkeypatch.setenv("DEMON_THREADS", "many")
        assert run_cli(["sweep", "--ell-over-l", "0.5",
                        "--cycles", "1000"]) == 2

    def test_thread_pool_gives_identical_results(self, tmp_path, monkeypatch):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_cli(["sweep", "--ell-over-l", "0.25", "--cycles", "5000",
                 "--seeds", "0,1,2,3", "--out", str(a)])
        monkeypatch.setenv("DEMON_THREADS", "4")
        run_cli(["sweep", "--ell-over-l", "0.25", "--cycles", "5000",
                 "--seeds", "0,1,2,3", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()


class TestScenarios:
    def test_livelock_report(self, tmp_path):
        out = tmp_path / "livelock.json"
        status = run_cli(["livelock", "--ell-over-l", "0.25", "--seed", "0",
                          "--trials", "5", "--out", str(out)])
        assert status == 0
        doc = json.loads(out.read_text())
        assert doc["schema"] == "demonlab-livelock-v1"
        assert doc["all_period_two_livelocks"] is True
        for row in doc["trials"]:
            assert row["termination"] == "Livelock"
            assert row["period"] == 2
            assert row["net"] == 0.0

    def test_cycle_trace(self, tmp_path):
        out = tmp_path / "trace.jsonl"
        status = run_cli(["cycle", "--ell-over-l", "0.25", "--cycles", "3",
                          "--seed", "5", "--out", str(out)])
        assert status == 0
        records = [json.loads(l) for l in out.read_text().splitlines()]
        assert len(records) == 12  # 4 transitions per cycle
        assert {r["op"] for r in records} == {
            "InsertPartition", "Measure", "Expand", "Erase"}
        keys = {"step", "cycle", "op", "side", "register", "work_delta",
                "erasure_delta", "erasure_debt", "gas_entropy"}
        assert set(records[0]) == keys

    def test_extract_first_report(self, tmp_path):
        out = tmp_path / "ef.json"
        status = run_cli(["extract-first", "--ell-over-l", "0.25",
                          "--cycles", "20000", "--seed", "0",
                          "--out", str(out)])
        assert status == 0
        doc = json.loads(out.read_text())
        assert doc["analytic"] == pytest.approx(-0.5, abs=1e-12)
        assert doc["pass"] is True
        assert doc["gas_entropy_per_unprofitable_cycle"] == \
            pytest.approx(math.log2(4 / 3), abs=1e-12)

    def test_delayed_report(self, tmp_path):
        out = tmp_path / "delayed.json"
        status = run_cli(["delayed", "--ell-over-l", "0.25", "--n", "2000",
                          "--seeds", "0,1,2", "--out", str(out)])
        assert status == 0
        doc = json.loads(out.read_text())
        assert doc["pass"] is True
        assert doc["mean_net_per_cycle"] <= 0.0
        assert len(doc["per_seed"]) == 3

    def test_quantum_report(self, tmp_path):
        out = tmp_path / "quantum.json"
        status = run_cli(["quantum", "--out", str(out)])
        assert status == 0
        doc = json.loads(out.read_text())
        checks = doc["checks"]
        assert checks["involution_defect"] < 1e-12
        assert checks["chi_plus_state"] == pytest.approx(1.0, abs=1e-12)
        assert doc["commuting"]["commuting"] is True
        assert doc["noncommuting"]["commuting"] is False

    def test_policy_search_report(self, tmp_path):
        out = tmp_path / "search.json"
        status = run_cli(["policy-search", "--ell-over-l", "0.25",
                          "--states", "2", "--horizon", "20",
                          "--crn-seeds", "100", "--seed", "0",
                          "--out", str(out)])
        assert status == 0
        doc = json.loads(out.read_text())
        assert doc["second_law_ok"] is True
        assert doc["max_crn_mean"] <= 3 * doc["max_crn_stderr"]


class TestRunScenarioApi:
    def test_unknown_scenario_rejected(self):
        with pytest.raises(ValidationError):
            run_scenario(RunConfig(scenario="nope"))

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            RunConfig(scenario="sweep", ell_over_l=(0.0,))
        with pytest.raises(ValidationError):
            RunConfig(scenario="sweep", cycles=0)
        with pytest.raises(ValidationError):
            RunConfig(scenario="sweep", seeds=())
        with pytest.raises(ValidationError):
            RunConfig(scenario="sweep", format="xml")


class TestAtomicWrite:
    def test_creates_parents_and_replaces(self, tmp_path):
        target = tmp_path / "deep" / "dir" / "file.txt"
        write_atomic(target, "one")
        write_atomic(target, "two")
        assert target.read_text() == "two"
        assert os.listdir(target.parent) == ["file.txt"]  # no temp leftovers
