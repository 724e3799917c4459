from __future__ import annotations

import csv
import json
import subprocess
import sys

import pytest

from conic_shock.cli import main


def test_solve_writes_artifacts(tmp_path, capsys):
    assert main(["solve", "--gamma", "1.4", "--b0", "0.1", "--q0", "50", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "s0 = 0.101123044473995" in out
    d = json.loads((tmp_path / "background.json").read_text())
    assert d["s0"] == pytest.approx(0.10112304447399506, rel=1e-13)
    assert (tmp_path / "background.csv").read_text().startswith("s,rho,u_r,u_z,c,mach_z")


def test_solve_format_json_only(tmp_path):
    assert main(["solve", "--format", "json", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "background.json").exists()
    assert not (tmp_path / "background.csv").exists()


@pytest.mark.parametrize("argv", [["solve", "--b0", "2.0"], ["solve", "--b0", "-0.1"], ["solve", "--gamma", "3.5"]])
def test_solve_errors_exit_one(tmp_path, argv, capsys):
    assert main(argv + ["--out", str(tmp_path)]) == 1
    assert "error:" in capsys.readouterr().err


def test_stability_pass(tmp_path):
    assert main(["stability", "--mu", "-1.5", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "multiplier.json").read_text())
    assert rep["verdict"] is True and rep["Q0"] > 0


def test_stability_bad_mu(tmp_path):
    assert main(["stability", "--mu", "-0.5", "--out", str(tmp_path)]) == 1


def test_polar(tmp_path):
    assert main(["polar", "--q0", "10", "--n", "12", "--out", str(tmp_path)]) == 0
    rows = list(csv.reader(open(tmp_path / "polar.csv")))
    assert rows[0] == ["s0", "cone_slope", "u_z", "u_r"] and len(rows) > 5


def test_hardy(tmp_path):
    assert main(["hardy", "--n", "20", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "hardy.json").read_text())["passed"] is True


def test_asymptotics_exit_codes(tmp_path):
    argv = ["asymptotics", "--b0q0-min", "25", "--b0q0-max", "400", "--nodes", "800", "--out", str(tmp_path)]
    assert main(argv + ["--quantities", "rho", "denominator"]) == 0
    # velocity remainders decay faster than the combined rule at gamma = 1.4
    assert main(argv + ["--quantities", "u_z"]) == 2
    assert main(argv + ["--quantities", "nonsense"]) == 1


def test_march_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["march", "--z-end", "5", "--n-sigma", "32", "--out", str(d)]) in (0, 2)
    assert (a / "march.csv").read_text() == (b / "march.csv").read_text()
    rep = json.loads((a / "march.json").read_text())
    assert "diagnostics" in rep and rep["config"]["n_sigma"] == 32


def test_march_dump(tmp_path):
    assert main(["march", "--z-end", "1.2", "--n-sigma", "16", "--dump", "--out", str(tmp_path)]) in (0, 2)
    assert len(list((tmp_path / "stations").glob("station_*.bin"))) > 1


def test_config_overrides(tmp_path):
    cfgf = tmp_path / "c.json"
    cfgf.write_text(json.dumps({"z_end": 2.0, "n_sigma": 16, "dissipation": 0.01}))
    assert main(["march", "--config", str(cfgf), "--out", str(tmp_path)]) in (0, 2)
    rep = json.loads((tmp_path / "march.json").read_text())
    assert rep["config"]["z_end"] == 2.0 and rep["config"]["dissipation"] == 0.01


def test_config_unknown_field(tmp_path, capsys):
    cfgf = tmp_path / "c.json"
    cfgf.write_text(json.dumps({"warp_factor": 9}))
    assert main(["solve", "--config", str(cfgf), "--out", str(tmp_path)]) == 1
    assert "warp_factor" in capsys.readouterr().err


def test_config_missing_file(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "none.json")]) == 1


def test_sweep_small_grid(tmp_path, monkeypatch):
    monkeypatch.setenv("CONIC_SHOCK_THREADS", "2")
    argv = ["sweep", "--gammas", "1.4", "--n-b0", "2", "--n-q0", "2", "--out", str(tmp_path)]
    assert main(argv) == 0
    rows = list(csv.DictReader(open(tmp_path / "sweep.csv")))
    assert len(rows) == 4 and all(r["verdict"] == "1" for r in rows)
    monkeypatch.setenv("CONIC_SHOCK_THREADS", "1")
    first = (tmp_path / "sweep.csv").read_text()
    assert main(argv) == 0
    assert (tmp_path / "sweep.csv").read_text() == first


def test_sweep_bad_threads(tmp_path, monkeypatch):
    monkeypatch.setenv("CONIC_SHOCK_THREADS", "many")
    assert main(["sweep", "--n-b0", "1", "--n-q0", "1", "--out", str(tmp_path)]) == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "conic_shock", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == "0.1.0"
