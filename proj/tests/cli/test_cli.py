import json
import os
import subprocess
from pathlib import Path

import pytest

SDSLAB = os.environ.get("SDSLAB", "build/sdslab")
CONFIGS = Path(__file__).resolve().parents[2] / "configs"
COMMANDS = ["geometry", "forward", "backward", "roundtrip", "energy-report", "residual-scan", "perturbed"]


def run(cmd, config, out, *extra):
    return subprocess.run([SDSLAB, cmd, "--config", str(config), "--out", str(out), *extra],
                          capture_output=True, text=True)


def write_config(tmp_path, body, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(body))
    return p


BASE = {"geometry": {"lambda": 3.0, "mass": 0.1}, "band": {"max_k": 2, "max_ell": 2}}


def test_geometry_report(tmp_path):
    r = run("geometry", CONFIGS / "demo.json", tmp_path)
    assert r.returncode == 0, r.stderr
    g = json.loads((tmp_path / "geometry.json").read_text())
    assert g["r_c"] == pytest.approx(0.87888507, abs=1e-7)
    assert g["verdict"] is True
    assert g["alpha_h"] + g["alpha_bar_c"] == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("cmd", COMMANDS)
def test_demo_commands_deterministic(tmp_path, cmd):
    a = run(cmd, CONFIGS / "demo.json", tmp_path / "a", "--seed", "11")
    b = run(cmd, CONFIGS / "demo.json", tmp_path / "b", "--seed", "11", "--threads", "2")
    assert a.returncode == 0, a.stderr
    assert b.returncode == 0, b.stderr
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
    assert not any(n.startswith(".") for n in names)
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes(), n


def test_seed_changes_output(tmp_path):
    run("forward", CONFIGS / "demo.json", tmp_path / "a", "--seed", "1")
    run("forward", CONFIGS / "demo.json", tmp_path / "b", "--seed", "2")
    assert (tmp_path / "a" / "trajectory.csv").read_bytes() != (tmp_path / "b" / "trajectory.csv").read_bytes()


def test_demo_forward_spurious_below_threshold(tmp_path):
    assert run("forward", CONFIGS / "demo.json", tmp_path).returncode == 0
    e = json.loads((tmp_path / "extraction.json").read_text())
    assert e["spurious_inv_r_relative"] <= e["spurious_threshold"]
    assert e["spurious_log_relative"] <= e["spurious_threshold"]


def test_demo_roundtrip_accuracy(tmp_path):
    assert run("roundtrip", CONFIGS / "demo.json", tmp_path).returncode == 0
    r = json.loads((tmp_path / "roundtrip.json").read_text())
    assert r["psi0_error_h1"] < 1e-3 and r["psi3_error_h1"] < 1e-3


def test_constant_roundtrip_exact(tmp_path):
    r = run("roundtrip", CONFIGS / "constant.json", tmp_path)
    assert r.returncode == 0, r.stderr
    rep = json.loads((tmp_path / "roundtrip.json").read_text())
    assert rep["psi0_error_h1"] < 1e-12 and rep["psi3_error_h1"] < 1e-12


def test_zero_data_zero_ledger(tmp_path):
    cfg = dict(BASE, data={k: {"kind": "zero"} for k in ("psi0", "psi3", "u", "du")})
    r = run("forward", write_config(tmp_path, cfg), tmp_path / "out")
    assert r.returncode == 0, r.stderr
    rows = (tmp_path / "out" / "ledger.csv").read_text().strip().splitlines()[1:]
    assert rows
    for row in rows:
        assert all(float(x) == 0.0 for x in row.split(",")[3:])


def test_synthetic_g1_log_flag(tmp_path):
    r = run("perturbed", CONFIGS / "synthetic_g1.json", tmp_path)
    assert r.returncode == 0, r.stderr
    p = json.loads((tmp_path / "perturbed.json").read_text())
    assert p["class_tag"] == "G1"
    assert p["log_term"] is True and p["residual_order"]["log_detected"] is True


def test_sds_perturbed_has_no_log(tmp_path):
    r = run("perturbed", CONFIGS / "demo.json", tmp_path)
    assert r.returncode == 0, r.stderr
    p = json.loads((tmp_path / "perturbed.json").read_text())
    assert p["class_tag"] == "G2" and p["psi31_norm"] == 0.0
    assert p["backward"]["sds_discrepancy"] < 1e-7


@pytest.mark.parametrize("geometry,kind", [
    ({"lambda": 3.0, "mass": 1.0 / (3.0 * 3.0 ** 0.5)}, "NonSubextremal"),
    ({"lambda": -3.0, "mass": 0.1}, "InvalidArgument"),
])
def test_geometry_errors_exit_2(tmp_path, geometry, kind):
    r = run("geometry", write_config(tmp_path, {"geometry": geometry}), tmp_path / "out")
    assert r.returncode == 2
    assert r.stderr.startswith("[geometry] " + kind + ":")
    assert not (tmp_path / "out").exists()


@pytest.mark.parametrize("patch", [
    {"bogus": 1},
    {"radii": {"r0": 0.5}},
    {"radii": {"schedule": [50, 25]}},
    {"band": {"max_k": -1}},
    {"data": {"psi0": {"kind": "mystery"}}},
    {"data": {"psi0": {"kind": "mode", "k": 5}}},
    {"integrator": {"variable": "sideways"}},
    {"perturbed": {"model": {"kind": "polynomial", "lambda": 3.0}}},
])
def test_invalid_config_exit_2(tmp_path, patch):
    r = run("forward", write_config(tmp_path, dict(BASE, **patch)), tmp_path / "out")
    assert r.returncode == 2, r.stderr
    assert r.stderr.startswith("[")
    assert not (tmp_path / "out").exists()


def test_malformed_json_exit_2(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{ not json")
    assert run("geometry", p, tmp_path / "out").returncode == 2


def test_integrator_failure_exit_3_no_partial_files(tmp_path):
    r = run("forward", write_config(tmp_path, dict(BASE, integrator={"max_steps": 3})), tmp_path / "out")
    assert r.returncode == 3
    assert r.stderr.startswith("[mode_evolution] StepSizeUnderflow:")
    assert not (tmp_path / "out").exists()


def test_ill_conditioned_fit_exit_3(tmp_path):
    r = run("forward", write_config(tmp_path, dict(BASE, extraction={"max_condition": 10})), tmp_path / "out")
    assert r.returncode == 3
    assert "IllConditionedFit" in r.stderr


def test_verdict_failure_exit_1(tmp_path):
    cfg = dict(BASE, roundtrip={"tolerance": 1e-30})
    r = run("roundtrip", write_config(tmp_path, cfg), tmp_path / "out")
    assert r.returncode == 1
    rep = json.loads((tmp_path / "out" / "roundtrip.json").read_text())
    assert rep["verdict"] is False


def test_field_file_data(tmp_path):
    run("forward", CONFIGS / "constant.json", tmp_path / "fw")
    ex = json.loads((tmp_path / "fw" / "extraction.json").read_text())
    (tmp_path / "psi0.json").write_text(json.dumps(ex["psi0"]))
    cfg = dict(BASE, data={"psi0": {"kind": "file", "path": "psi0.json"}, "psi3": {"kind": "zero"}})
    r = run("roundtrip", write_config(tmp_path, cfg), tmp_path / "rt")
    assert r.returncode == 0, r.stderr


def test_missing_subcommand_exit_2(tmp_path):
    r = subprocess.run([SDSLAB, "--config", str(CONFIGS / "demo.json")], capture_output=True, text=True)
    assert r.returncode == 2
