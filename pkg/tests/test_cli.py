import json
import os
import subprocess
import sys

import pytest

from isl import cli

N1 = {"schema": "isl-config/1", "n": 1, "seed": 42}
COMMUTING = {
    "schema": "isl-config/1",
    "n": 1,
    "family": {
        "points": [[0.5, 0.5]],
        "residues": [[[0.1, 0], [0, -0.1]], [[0.2, 0], [0, -0.2]], [[0.05, 0], [0, -0.05]]],
    },
}


def _run(tmp_path, mode, cfg, *extra, name="out"):
    p = tmp_path / f"{name}.json"
    p.write_text(json.dumps(cfg))
    out = tmp_path / name
    code = cli.main([mode, "--config", str(p), "--out", str(out), *extra])
    return code, out


def _report(out):
    return json.loads((out / "report.json").read_text())


def test_verify_all_n1_seed42(tmp_path):
    code, out = _run(tmp_path, "verify-all", N1)
    rep = _report(out)
    row = next(c for c in rep["checks"] if c["name"] == "pvi_residual")
    assert row["value"] < 1e-5
    assert code == 0 and rep["exit_code"] == 0
    assert rep["seed"] == 42
    assert (out / "trace.csv").exists() and (out / "poles.json").exists()


def test_commuting_monodromy_and_deform(tmp_path):
    code, out = _run(tmp_path, "monodromy", COMMUTING)
    assert code == 0
    code, out = _run(tmp_path, "deform", COMMUTING, name="deform")
    assert code == 0
    drift = next(c for c in _report(out)["checks"] if c["name"] == "isomonodromy_drift")
    assert drift["absolute"] < 1e-9


def test_rerun_is_byte_identical(tmp_path):
    _, a = _run(tmp_path, "garnier", N1, name="a")
    _, b = _run(tmp_path, "garnier", N1, name="b")
    for f in ("report.json", "poles.json", "trace.csv"):
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_seed_override_changes_results(tmp_path):
    _, a = _run(tmp_path, "monodromy", N1, name="a")
    _, b = _run(tmp_path, "monodromy", N1, "--seed", "7", name="b")
    assert _report(b)["seed"] == 7
    assert (a / "report.json").read_bytes() != (b / "report.json").read_bytes()


def test_missing_theta_names_field(tmp_path, capsys):
    code, _ = _run(tmp_path, "riccati", {"schema": "isl-config/1", "n": 1})
    assert code > 2
    assert "[theta]" in capsys.readouterr().err


def test_malformed_json_exit(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{")
    assert cli.main(["deform", "--config", str(p)]) == cli.EXIT_CONFIG
    assert "line 1" in capsys.readouterr().err


def test_bad_family_is_config_error(tmp_path):
    cfg = {**COMMUTING, "family": {**COMMUTING["family"], "residues": [[[1, 0], [0, 0]]] * 3}}
    code, _ = _run(tmp_path, "monodromy", cfg)
    assert code == cli.EXIT_CONFIG


def test_exit_code_on_violation(tmp_path):
    cfg = {**N1, "thresholds": {"conservation": 1e-30}}
    code, out = _run(tmp_path, "deform", cfg)
    assert code == 1
    assert any(c["pass"] is False for c in _report(out)["checks"])


def test_report_exit_codes():
    r = cli.Report("deform", None)
    r.check("a", 1.0, 2.0)
    assert r.exit_code() == 0
    r.check("b", None, 2.0)
    assert r.exit_code() == 2
    r.check("c", 3.0, 2.0)
    assert r.exit_code() == 1


def test_forced_indeterminate_check():
    r = cli.Report("deform", None)
    r.check("drift", 1e-9, 1e-6, indeterminate=True, noise_floor=1e-3)
    assert r.checks[0]["pass"] is None and r.checks[0]["noise_floor"] == 1e-3
    assert r.exit_code() == 2


def test_jsonable_handles_special_values():
    got = cli.jsonable({"z": 1 - 2j, "nan": float("nan"), "inf": float("inf"), "t": (1, 2)})
    assert got == {"z": [1.0, -2.0], "nan": None, "inf": "inf", "t": [1, 2]}


def test_riccati_n1(tmp_path):
    cfg = {"schema": "isl-config/1", "n": 1, "seed": 3, "theta": {"thetas": [0.3, [0.45, 0.1], 1.7]}}
    code, out = _run(tmp_path, "riccati", cfg)
    assert code == 0
    assert _report(out)["checks"][0]["value"] < 1e-5


def test_slice_poles_n1(tmp_path):
    cfg = {"schema": "isl-config/1", "n": 1, "seed": 1, "tol": 1e-11, "slice": {"starts": 16}}
    code, out = _run(tmp_path, "slice-poles", cfg)
    assert code == 0
    poles = json.loads((out / "poles.json").read_text())
    assert poles and all(p["order"] == 1 for p in poles)


def test_console_script_and_log_levels(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(COMMUTING))
    env = {**os.environ, "ISL_LOG": "info"}
    cmd = [sys.executable, "-m", "isl.cli", "monodromy", "--config", str(p), "--out", str(tmp_path / "o")]
    r = subprocess.run(cmd, env=env, capture_output=True, text=True)
    assert r.returncode == 0
    assert "isl INFO" in r.stderr
    env["ISL_LOG"] = "error"
    r = subprocess.run(cmd, env=env, capture_output=True, text=True)
    assert r.returncode == 0 and r.stderr == ""
