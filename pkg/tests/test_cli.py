import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from penaltyflow.cli import build_parser, main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, obj, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def run(*argv):
    return main([str(a) for a in argv])


def test_run_flagship(tmp_path, capsys):
    out = tmp_path / "out"
    assert run("run", "--config", CONFIGS / "flagship.json", "--out", out) == 0
    assert "PASS" in capsys.readouterr().out
    report = json.loads((out / "report.json").read_text())
    assert report["passed"] is True
    assert report["beta_psi_terminal"] <= 1e-2
    assert report["distance_terminal"] <= 5e-2
    assert set(report["verdicts"]) >= {"growth", "condition_h", "lyapunov", "dissipation"}
    with open(out / "trajectory.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "x_0", "x_1", "v_0", "v_1", "phi", "psi", "beta", "E"]
    assert len(rows) == 10002
    assert (out / "energy.csv").exists()


def test_run_is_reproducible(tmp_path):
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        assert run("run", "--config", CONFIGS / "heavy_ball.json", "--out", out, "--plot") == 0
    for name in ("report.json", "trajectory.csv", "trajectory.svg"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_run_growth_infeasible(tmp_path, capsys):
    out = tmp_path / "out"
    assert run("run", "--config", CONFIGS / "growth_infeasible.json", "--out", out) == 2
    text = capsys.readouterr().out
    assert "k_min=4" in text and "gamma=1" in text
    assert not (out / "trajectory.csv").exists()
    cfg = json.loads((CONFIGS / "growth_infeasible.json").read_text())
    cfg["diagnostics"] = {"override_growth": True, "condition_h": False}
    cfg["integrator"] = {"T_end": 5.0, "sample_count": 51}
    assert run("run", "--config", write(tmp_path, cfg), "--out", out) == 2
    report = json.loads((out / "report.json").read_text())
    assert report["integration"]["growth_overridden"] is True


def test_run_overrides_and_first_order(tmp_path):
    cfg = {"problem": "halfspace-2d", "system": "first_order",
           "integrator": {"sample_count": 501}}
    out = tmp_path / "out"
    assert run("run", "--config", write(tmp_path, cfg), "--out", out,
               "--tmax", 50, "--tol", 1e-8) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["integrator"]["T_end"] == 50.0
    assert report["integrator"]["abs_tol"] == pytest.approx(1e-10)
    assert "growth" not in report["verdicts"]


@pytest.mark.parametrize("cfg,needle", [
    ({"problem": "no-such-problem"}, "unknown problem"),
    ({"problem": "heavy-ball-2d", "colour": 1}, "unknown field"),
    ({"problem": "heavy-ball-2d", "integrator": {"T_end": -1}}, "T_end"),
    ({"problem": "heavy-ball-2d", "tolerances": {"terminal": 0}}, "positive"),
    ({"problem": "heavy-ball-2d", "schedule": {"family": "cubic"}}, "family"),
])
def test_run_config_errors(tmp_path, capsys, cfg, needle):
    assert run("run", "--config", write(tmp_path, cfg), "--out", tmp_path / "o") == 1
    assert needle in capsys.readouterr().err


def test_run_missing_config(tmp_path, capsys):
    assert run("run", "--config", tmp_path / "missing.json") == 1
    assert "cannot read" in capsys.readouterr().err


def test_run_integration_abort(tmp_path, capsys):
    cfg = {"problem": "affine-quadratic-2d", "gamma": 20.0,
           "schedule": {"family": "exp", "k": 10.0},
           "integrator": {"T_end": 10.0, "sample_count": 101, "max_steps": 20000}}
    out = tmp_path / "out"
    assert run("run", "--config", write(tmp_path, cfg), "--out", out) == 1
    assert "maximum number of steps" in capsys.readouterr().err
    report = json.loads((out / "report.json").read_text())
    assert "error" in report and (out / "trajectory.csv").exists()


@pytest.mark.parametrize("alpha,mode,code", [
    (2.0, "auto", 0), (1.5, "auto", 0), (1.0, "auto", 2), (1.0, "quadrature", 3),
    (0.5, "quadrature", 2), (3.0, "closed_form", 0)])
def test_check_h_exit_codes(alpha, mode, code, capsys):
    psi = '{"kind": "dist2", "set": {"kind": "hyperplane", "normal": [0, 1], "offset": 0}}'
    sched = json.dumps({"family": "power", "alpha": alpha})
    assert run("check-h", "--psi", psi, "--schedule", sched, "--p", "[0, 1]",
               "--mode", mode) == code
    line = json.loads(capsys.readouterr().out.splitlines()[0])
    assert {"value_on_0_T", "tail_exponent_estimate", "verdict"} <= set(line)


def test_check_h_config_and_dump(tmp_path):
    out = tmp_path / "h"
    assert run("check-h", "--config", CONFIGS / "check_h_line.json", "--out", out) == 0
    data = json.loads((out / "check_h.json").read_text())
    assert data["reports"][0]["verdict"] == "finite"
    assert (out / "integrand_0.csv").exists()


def test_check_h_errors(tmp_path, capsys):
    psi = '{"kind": "dist2", "set": {"kind": "hyperplane", "normal": [0, 1], "offset": 0}}'
    sched = '{"family": "power", "alpha": 2}'
    assert run("check-h", "--psi", psi, "--schedule", sched, "--p", "[1, 0]") == 1
    assert "normal cone" in capsys.readouterr().err
    assert run("check-h", "--psi", '{"kind": "logsumexp", "dim": 2}', "--schedule", sched,
               "--p", "[0, 1]") == 1
    assert run("check-h", "--psi", psi, "--schedule", sched) == 1
    assert run("check-h", "--psi", "{not json", "--schedule", sched, "--p", "[0, 1]") == 1
    bad = write(tmp_path, {"psi": {}, "schedule": {}, "p": [], "extra": 1})
    assert run("check-h", "--config", bad) == 1


def test_compare(tmp_path, capsys):
    out = tmp_path / "c"
    assert run("compare", "--config", CONFIGS / "compare_flagship.json", "--out", out) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["terminal_gap"] <= 1e-2 and report["passed"]
    assert run("compare", "--config", CONFIGS / "compare_flagship.json", "--out", out,
               "--tmax", 1) == 2


def test_sweep(tmp_path, capsys):
    out = tmp_path / "s"
    assert run("sweep", "--config", CONFIGS / "sweep.json", "--out", out, "--workers", 1) == 0
    with open(out / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 12
    for r in rows:
        assert (r["feasible"] == "True") == (float(r["alpha"]) < float(r["gamma"]))
    grid = (out / "sweep_feasible.csv").read_text().splitlines()
    assert grid[0].startswith("gamma\\alpha") and len(grid) == 5
    cfg = json.loads((CONFIGS / "sweep.json").read_text())
    cfg["sweep"]["alpha"] = []
    assert run("sweep", "--config", write(tmp_path, cfg), "--out", out) == 1


def test_sweep_process_pool(tmp_path):
    cfg = {"problem": "affine-quadratic-2d", "integrator": {"T_end": 5.0, "sample_count": 51},
           "sweep": {"gamma": [3.0], "alpha": [1.0, 2.0]}}
    out = tmp_path / "s"
    assert run("sweep", "--config", write(tmp_path, cfg), "--out", out, "--workers", 2) == 2
    data = json.loads((out / "sweep.json").read_text())
    assert [c["alpha"] for c in data["cells"]] == [1.0, 2.0]


def test_parser_and_module_entry():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])
    proc = subprocess.run([sys.executable, "-m", "penaltyflow", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "check-h" in proc.stdout
