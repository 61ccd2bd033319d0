import json
import subprocess
import sys

import numpy as np
import pytest

from hjsolve.cli import main
from hjsolve.scheme import read_layers_csv


@pytest.fixture
def config(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"dim": 1, "model": {"name": "quadratic"}, "v0": {"name": "neg_abs"},
                             "T": 0.25, "dx": [0.04, 0.02], "K": [-1, 1],
                             "query": {"nx": 9, "nt": 3}}))
    return p


def test_solve_writes_layers_and_metadata(config, tmp_path, capsys):
    assert main(["solve", "--config", str(config), "--out", str(tmp_path / "run")]) == 0
    meta, rows = read_layers_csv(tmp_path / "run_layers.csv")
    info = json.loads((tmp_path / "run.json").read_text())
    assert meta["dx"] == 0.04 and info["lattice"]["dx"] == 0.04
    assert info["cfl"]["passed"] and info["constants"]["deriv_bound"] == 2.0
    assert sorted(set(rows[:, 0].astype(int))) == info["stored_levels"]
    assert "wrote" in capsys.readouterr().out


def test_solve_final_only(config, tmp_path):
    main(["solve", "--config", str(config), "--out", str(tmp_path / "f"), "--final-only", "--dx", "0.02"])
    _, rows = read_layers_csv(tmp_path / "f_layers.csv")
    levels = sorted(set(rows[:, 0].astype(int)))
    assert len(levels) == 2 and levels[0] == 0


def test_walk_to_stdout(config, capsys):
    assert main(["walk", "--config", str(config), "--x", "0.5", "--t", "0.2"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "s,x1"
    last = [float(v) for v in lines[-1].split(",")]
    assert last[0] == pytest.approx(0.2)


def test_walk_ensemble_file(config, tmp_path):
    out = tmp_path / "ens.csv"
    main(["walk", "--config", str(config), "--x", "0.5", "--t", "0.2", "--mode", "ensemble",
          "--n", "7", "--seed", "2", "--out", str(out)])
    rows = np.genfromtxt(out, delimiter=",", skip_header=1)
    assert set(rows[:, 0].astype(int)) == set(range(7))
    np.testing.assert_allclose(rows[:, -1], 1 / 7)


def test_walk_reports_bad_input(config, capsys):
    assert main(["walk", "--config", str(config), "--x", "0.5", "0.1", "--t", "0.2"]) == 2
    assert "coordinate" in capsys.readouterr().err


def test_converge(config, tmp_path, capsys):
    assert main(["converge", "--config", str(config), "--out", str(tmp_path / "cv")]) == 0
    assert (tmp_path / "cv.csv").exists()
    rep = json.loads((tmp_path / "cv.json").read_text())
    assert len(rep["rows"]) == 2 and rep["constants_source"] == "closed-form"
    assert "rate=" in capsys.readouterr().out


def test_check_exit_status(config, capsys):
    assert main(["check", "--config", str(config)]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 8 and "FAIL" not in out


def test_missing_config_is_an_error(tmp_path, capsys):
    assert main(["check", "--config", str(tmp_path / "none.json")]) == 2
    assert "hjsolve check" in capsys.readouterr().err


def test_module_entry_point(config):
    proc = subprocess.run([sys.executable, "-m", "hjsolve", "check", "--config", str(config)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "PASS" in proc.stdout


def test_check_fails_with_status_one(config, monkeypatch, capsys):
    from hjsolve import cli
    from hjsolve.harness import CheckResult
    monkeypatch.setattr(cli, "run_checks", lambda cfg: [CheckResult("broken", False, "x")])
    assert main(["check", "--config", str(config)]) == 1
    assert "FAIL  broken" in capsys.readouterr().out
