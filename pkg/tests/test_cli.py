"""Tests for the verification CLI: config validation before any writes,
report structure, CSV artifacts, seeded determinism, and exit codes."""

import json
import os

import pytest

from ipl.cli import ConfigError, SUBCOMMANDS, main, run

SPECTRAL_CFG = {
    "schema_version": 1,
    "seed": 5,
    "bundle": {"lambda": [0.11, 0.07], "mu": [1.0, 0.0], "r_min": 5.0, "k": 1},
    "domain": [5.0, 10000.0],
    "counting": {"n_samples": 5, "radius": [0.005, 0.02], "expected_total": 1},
}


def canonical(report):
    rep = dict(report)
    rep.pop("wall_time_s")
    return json.dumps(rep, sort_keys=True)


def test_subcommand_roster():
    assert SUBCOMMANDS == ("conventions", "model-check", "invariants",
                           "spectral", "stability", "moduli")


def test_unknown_subcommand_rejected_before_writes(tmp_path):
    out = tmp_path / "out"
    with pytest.raises(ConfigError):
        run("nonsense", SPECTRAL_CFG, out_dir=str(out), quiet=True)
    assert not out.exists()


def test_bad_schema_version_exits_2_and_writes_nothing(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"schema_version": 2}))
    out = tmp_path / "out"
    rc = main(["conventions", "--config", str(cfg_path),
               "--out", str(out), "--quiet"])
    assert rc == 2
    assert not out.exists()


def test_missing_seed_rejected(tmp_path):
    cfg = {k: v for k, v in SPECTRAL_CFG.items() if k != "seed"}
    with pytest.raises(ConfigError):
        run("spectral", cfg, out_dir=str(tmp_path / "out"), quiet=True)
    assert not (tmp_path / "out").exists()


def test_nonpositive_tolerance_rejected(tmp_path):
    cfg = json.loads(json.dumps(SPECTRAL_CFG))
    cfg["residues"] = {"n_mu": 2, "tolerance": 0.0}
    with pytest.raises(ConfigError):
        run("spectral", cfg, out_dir=str(tmp_path / "out"), quiet=True)
    assert not (tmp_path / "out").exists()


def test_report_structure_and_artifacts(tmp_path):
    report, code = run("conventions", {"schema_version": 1},
                       out_dir=str(tmp_path), quiet=True)
    assert code == 0
    assert report["passed"]
    assert report["schema_version"] == 1
    assert report["subcommand"] == "conventions"
    assert sorted(report) == ["artifacts", "checks", "csv_columns", "inputs",
                              "passed", "provenance", "schema_version",
                              "subcommand", "wall_time_s"]
    for key in ("package", "package_version", "python", "numpy",
                "conventions_hash", "threads"):
        assert key in report["provenance"]
    for check in report["checks"]:
        assert check["pass"]
        assert set(check) >= {"name", "value", "tolerance", "pass"}
    assert report["artifacts"] == sorted(report["artifacts"])
    assert (tmp_path / "conventions_report.json").exists()
    for name in report["artifacts"]:
        assert (tmp_path / name).exists()
    on_disk = json.loads((tmp_path / "conventions_report.json").read_text())
    assert canonical(on_disk) == canonical(report)


def test_csv_artifact_columns(tmp_path):
    report, code = run("spectral", SPECTRAL_CFG, out_dir=str(tmp_path),
                       quiet=True)
    assert code == 0
    assert report["csv_columns"] == ["xi1", "xi2", "re_w", "im_w", "mult"]
    lines = (tmp_path / "jumping_points.csv").read_text().splitlines()
    assert lines[0] == "xi1,xi2,re_w,im_w,mult"
    assert len(lines) == 1 + SPECTRAL_CFG["counting"]["n_samples"]
    for line in lines[1:]:
        xi1, xi2, re_w, im_w, mult = line.split(",")
        float(xi1), float(xi2), float(re_w), float(im_w)
        assert int(mult) >= 1


def test_same_seed_runs_are_identical(tmp_path):
    rep_a, _ = run("spectral", SPECTRAL_CFG, out_dir=str(tmp_path / "a"),
                   quiet=True)
    rep_b, _ = run("spectral", SPECTRAL_CFG, out_dir=str(tmp_path / "b"),
                   quiet=True)
    assert canonical(rep_a) == canonical(rep_b)
    csv_a = (tmp_path / "a" / "jumping_points.csv").read_bytes()
    csv_b = (tmp_path / "b" / "jumping_points.csv").read_bytes()
    assert csv_a == csv_b
    sum_a = (tmp_path / "a" / "spectral_summary.json").read_bytes()
    sum_b = (tmp_path / "b" / "spectral_summary.json").read_bytes()
    assert sum_a == sum_b


def test_numerical_failure_exits_1_with_full_report(tmp_path):
    cfg = {
        "schema_version": 1,
        "obstructions": [
            {"k": 1, "xi0": [0.3, 0.2], "mu": [0.5, 0.0],
             "expect": "blocked_mu0"},
        ],
    }
    report, code = run("stability", cfg, out_dir=str(tmp_path), quiet=True)
    assert code == 1
    assert not report["passed"]
    assert (tmp_path / "stability_report.json").exists()
    failed = [c for c in report["checks"] if not c["pass"]]
    assert failed


def test_seed_override_via_main(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(SPECTRAL_CFG))
    out = tmp_path / "out"
    rc = main(["spectral", "--config", str(cfg_path), "--out", str(out),
               "--seed", "99", "--quiet"])
    assert rc == 0
    report = json.loads((out / "spectral_report.json").read_text())
    assert report["inputs"]["seed"] == 99


def test_thread_budget_recorded(tmp_path, monkeypatch):
    monkeypatch.setenv("IPL_THREADS", "3")
    report, _ = run("conventions", {"schema_version": 1},
                    out_dir=str(tmp_path), quiet=True)
    assert report["provenance"]["threads"] == 3
