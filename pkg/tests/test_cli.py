import hashlib
import json
import subprocess
import sys

import pytest

from gridsched.cli import main


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_validate_ok(profiles_dir, capsys):
    assert main(["validate", str(profiles_dir / "node-a.xml")]) == 0
    assert "OK" in capsys.readouterr().out


def test_validate_invalid_names_element(tmp_path, capsys):
    bad = tmp_path / "bad.xml"
    bad.write_text("<computerProfile><nodeId>x</nodeId><nonVolatile><os>linux</os>"
                   "<memoryMB>10</memoryMB></nonVolatile></computerProfile>")
    assert main(["validate", str(bad)]) == 1
    assert "capacityMarksPerS" in capsys.readouterr().out


def test_validate_mixed_batch_reports_all(tmp_path, profiles_dir, capsys):
    bad = tmp_path / "bad.xml"
    bad.write_text("<computerProfile>")
    paths = [str(profiles_dir / "node-a.xml"), str(bad), str(profiles_dir / "blast-app.xml")]
    assert main(["validate", *paths]) == 1
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 3
    assert out[0].endswith("OK") and "ERROR" in out[1] and out[2].endswith("OK")


def test_simulate_demo(tmp_path, scenarios_dir, capsys):
    out = tmp_path / "r.json"
    rc = main(["simulate", "--scenario", str(scenarios_dir / "demo.json"), "--out", str(out),
               "--traces", "--csv"])
    assert rc == 0
    rep = json.loads(out.read_text())
    assert rep["metrics"]["jobs_submitted"] > 0
    for suffix in (".accounting.jsonl", ".trace.jsonl", ".timeseries.csv", ".sla.csv"):
        assert (tmp_path / f"r{suffix}").exists()
    assert "on_time=" in capsys.readouterr().out
    assert not list(tmp_path.glob(".*.tmp"))


def test_simulate_seed_override_deterministic(tmp_path, scenarios_dir):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert main(["simulate", "--scenario", str(scenarios_dir / "demo.json"), "--seed", "7",
                     "--out", str(p), "--quiet"]) == 0
    assert digest(a) == digest(b)


def test_busy_vs_idle_policy_comparison(tmp_path, scenarios_dir):
    fracs = {}
    for policy in ("spot_load", "subscribed_load"):
        out = tmp_path / f"{policy}.json"
        assert main(["simulate", "--scenario", str(scenarios_dir / "busy_vs_idle.json"),
                     "--policy", policy, "--out", str(out), "--quiet"]) == 0
        fracs[policy] = json.loads(out.read_text())["metrics"]["on_time_fraction"]
    assert fracs["spot_load"] != fracs["subscribed_load"]
    assert fracs["subscribed_load"] >= fracs["spot_load"]


def test_config_error_exit_2(tmp_path, capsys):
    bad = tmp_path / "s.json"
    bad.write_text(json.dumps({"duration_s": 10, "nodes": [], "policy": "x"}))
    assert main(["simulate", "--scenario", str(bad), "--out", str(tmp_path / "r.json")]) == 2
    assert not (tmp_path / "r.json").exists()
    bad.write_text("{not json")
    assert main(["simulate", "--scenario", str(bad)]) == 2
    assert main(["simulate", "--scenario", str(tmp_path / "missing.json")]) == 2


def test_bad_flag_is_config_error(scenarios_dir):
    assert main(["simulate", "--scenario", str(scenarios_dir / "demo.json"), "--policy", "fifo"]) == 2
    assert main(["simulate", "--scenario", str(scenarios_dir / "demo.json"), "--seed", "-1"]) == 2


@pytest.fixture
def two_reports(tmp_path, scenarios_dir):
    paths = []
    for policy in ("spot_load", "subscribed_load"):
        out = tmp_path / f"{policy}.json"
        main(["simulate", "--scenario", str(scenarios_dir / "busy_vs_idle.json"), "--policy", policy,
              "--out", str(out), "--quiet"])
        paths.append(out)
    return paths


def test_report_single(two_reports, capsys):
    assert main(["report", str(two_reports[0])]) == 0
    out = capsys.readouterr().out
    assert "spot_load/edf#1" in out and "on_time_fraction" in out


def test_report_two_columns(two_reports, tmp_path, capsys):
    csv = tmp_path / "cmp.csv"
    assert main(["report", *map(str, two_reports), "--csv", str(csv)]) == 0
    header = capsys.readouterr().out.splitlines()[0].split()
    assert header == ["metric", "spot_load/edf#1", "subscribed_load/edf#1"]
    rows = csv.read_text().splitlines()
    assert rows[0] == "metric,spot_load/edf#1,subscribed_load/edf#1"
    assert any(r.startswith("on_time_fraction,0.5000,1.0000") for r in rows)


def test_report_missing_field(two_reports, capsys):
    data = json.loads(two_reports[0].read_text())
    del data["metrics"]["miss_rate"]
    two_reports[0].write_text(json.dumps(data))
    assert main(["report", str(two_reports[0])]) == 1
    assert "metrics.miss_rate" in capsys.readouterr().err


def test_module_entry_point(profiles_dir):
    proc = subprocess.run([sys.executable, "-m", "gridsched", "validate", str(profiles_dir / "node-a.xml")],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "OK" in proc.stdout
