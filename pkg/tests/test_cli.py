"""End-to-end tests for the scenario runner CLI."""

import json
import os

import pytest

from speclab import cli


def write_cfg(tmp_path, cfg, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def small_threshold_cfg():
    return {
        "schema_version": cli.SCHEMA_VERSION,
        "grid": {"mode": "radial_swave", "extent": 6.0, "nodes": 120},
        "potential": {"builtin": "exact_eigen", "params": {"s": 2.0}},
        "threshold": {"expect_dim_X1": 1, "expect_verdicts": ["EIGENVALUE"]},
    }


def test_fixtures_emit_and_parse(tmp_path):
    out = str(tmp_path / "fx")
    assert cli.main(["fixtures", "--out", out]) == cli.EXIT_OK
    names = sorted(os.listdir(out))
    assert names == sorted(f"{n}.json" for n in cli._FIXTURE_SCENARIOS)
    for name in names:
        cfg = json.loads((tmp_path / "fx" / name).read_text())
        assert cfg["schema_version"] == cli.SCHEMA_VERSION
        assert "grid" in cfg and "potential" in cfg


def test_threshold_ok_and_report(tmp_path, capsys):
    cfg_path = write_cfg(tmp_path, small_threshold_cfg())
    out = str(tmp_path / "run")
    rc = cli.main(["threshold", "--config", cfg_path, "--out", out])
    assert rc == cli.EXIT_OK
    report = json.loads((tmp_path / "run" / "threshold_report.json").read_text())
    assert report["dims"] == [1]
    assert report["verdicts"] == ["EIGENVALUE"]
    assert report["seed"] == 0


def test_threshold_gate_failure_exits_2(tmp_path):
    cfg = small_threshold_cfg()
    cfg["threshold"]["expect_verdicts"] = ["RESONANCE"]
    rc = cli.main(["threshold", "--config", write_cfg(tmp_path, cfg)])
    assert rc == cli.EXIT_ASSERT


def test_missing_config_exits_3(tmp_path):
    rc = cli.main(["threshold", "--config", str(tmp_path / "nope.json")])
    assert rc == cli.EXIT_CONFIG


def test_malformed_config_exits_3(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert cli.main(["threshold", "--config", str(path)]) == cli.EXIT_CONFIG


def test_missing_section_exits_3(tmp_path):
    cfg = small_threshold_cfg()
    del cfg["grid"]
    rc = cli.main(["threshold", "--config", write_cfg(tmp_path, cfg)])
    assert rc == cli.EXIT_CONFIG


def test_unknown_builtin_exits_3(tmp_path):
    cfg = small_threshold_cfg()
    cfg["potential"] = {"builtin": "does_not_exist"}
    rc = cli.main(["threshold", "--config", write_cfg(tmp_path, cfg)])
    assert rc == cli.EXIT_CONFIG


def test_reports_are_deterministic(tmp_path):
    cfg_path = write_cfg(tmp_path, small_threshold_cfg())
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert cli.main(["threshold", "--config", cfg_path, "--out", out1]) == 0
    assert cli.main(["threshold", "--config", cfg_path, "--out", out2]) == 0
    a = (tmp_path / "a" / "threshold_report.json").read_bytes()
    b = (tmp_path / "b" / "threshold_report.json").read_bytes()
    assert a == b


def test_grid_scale_doubles_nodes(tmp_path, capsys):
    cfg_path = write_cfg(tmp_path, small_threshold_cfg())
    rc = cli.main(["threshold", "--config", cfg_path, "--grid-scale", "2"])
    assert rc == cli.EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["grid"]["nodes"] == 240
    assert report["grid_scale"] == 2


def test_invert_report(tmp_path, capsys):
    cfg = {
        "schema_version": cli.SCHEMA_VERSION,
        "grid": {"mode": "radial_swave", "extent": 2.25, "nodes": 225},
        "potential": {"builtin": "exact_eigen", "params": {"s": 2.0}},
        "invert": {"lambdas": [0.05], "window": 0.25},
    }
    out = str(tmp_path / "run")
    rc = cli.main(["invert", "--config", write_cfg(tmp_path, cfg), "--out", out])
    assert rc == cli.EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["residuals"]["one_sided_S0"] < 1e-9
    for row in report["per_lambda"]:
        assert row["chain"] < 1e-6
        assert row["telescope"] < 1e-6
        assert row["exact_inverse"] < 1e-6
    assert os.path.exists(os.path.join(out, "low_energy_scan.csv"))


def test_evolve_free_decay(tmp_path, capsys):
    cfg = {
        "schema_version": cli.SCHEMA_VERSION,
        "grid": {"mode": "radial_swave", "extent": 40.0, "nodes": 400},
        "potential": {"builtin": "gaussian_well", "params": {"depth": 0.0}},
        "evolve": {
            "t_start": 2.0, "t_end": 6.4, "n_times": 8, "k_max": 2.5,
            "expect_exponent": [-1.5, 0.2],
        },
    }
    out = str(tmp_path / "run")
    rc = cli.main(["evolve", "--config", write_cfg(tmp_path, cfg), "--out", out])
    assert rc == cli.EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert abs(report["exponent"] + 1.5) < 0.2
    assert os.path.exists(os.path.join(out, "decay_scan.csv"))


def test_ftscan_verdict_gate(tmp_path):
    cfg = {
        "schema_version": cli.SCHEMA_VERSION,
        "grid": {"mode": "radial_swave", "extent": 10.0, "nodes": 100},
        "potential": {"builtin": "gaussian_well",
                      "params": {"depth": 4.0, "width": 1.0}},
        "ftscan": {"window": "HIGH", "n": 128, "lam_max": 8.0,
                   "expect_verdict": "OK"},
    }
    rc = cli.main(["ftscan", "--config", write_cfg(tmp_path, cfg)])
    assert rc == cli.EXIT_OK


def test_seed_recorded_and_changes_probe(tmp_path, capsys):
    cfg_path = write_cfg(tmp_path, small_threshold_cfg())
    rc = cli.main(["threshold", "--config", cfg_path, "--seed", "5"])
    assert rc == cli.EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["seed"] == 5


def test_bad_schema_version_exits_3(tmp_path):
    cfg = small_threshold_cfg()
    cfg["schema_version"] = 99
    rc = cli.main(["threshold", "--config", write_cfg(tmp_path, cfg)])
    assert rc == cli.EXIT_CONFIG
