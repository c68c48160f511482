import json
import math
import os
import subprocess
import sys

import pytest

from rotvec.cli import read_config, run


def run_cli(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_solve_constant(capsys):
    code, out, _ = run_cli(capsys, "solve", "--model", "constant", "--omega", "0.5,2")
    assert code == 0
    assert "rho = (0.5, 2)" in out


def test_rotvec_circle(capsys):
    code, out, _ = run_cli(capsys, "rotvec", "--model", "circle", "--c", "2", "--eps", "1",
                           "--horizon", "10000")
    assert code == 0
    line = next(s for s in out.splitlines() if s.startswith("rho = "))
    assert float(line.split("(")[1].rstrip(")")) == pytest.approx(math.sqrt(3.0), abs=1e-4)


def test_solve_outside_smallness_regime(capsys):
    code, _, err = run_cli(capsys, "solve", "--model", "circle", "--c", "2", "--eps", "0.9",
                           "--gamma", "0.5")
    assert code == 1
    assert "smallness" in err


def test_usage_errors_exit_2(capsys):
    assert run_cli(capsys, "nope")[0] == 2
    assert run_cli(capsys, "solve", "--model", "circle", "--c", "2", "--eps", "0.1,0.2")[0] == 2
    assert run_cli(capsys, "psi", "--model", "constant", "--omega", "1,2")[0] == 2
    assert run_cli(capsys, "rotvec", "--model", "constant", "--omega", "x")[0] == 2


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# constant field\nmodel = constant\nomega = 0.25, 4\n")
    code, out, _ = run_cli(capsys, "solve", "--config", str(cfg))
    assert code == 0 and "rho = (0.25, 4)" in out
    code, out, _ = run_cli(capsys, "solve", "--config", str(cfg), "--omega", "1,3")
    assert code == 0 and "rho = (1, 3)" in out
    assert read_config(cfg) == {"model": "constant", "omega": "0.25, 4"}


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("model = constant\nomega = 1,2\nbogus = 3\n")
    code, _, err = run_cli(capsys, "solve", "--config", str(cfg))
    assert code == 2 and "bogus" in err


def test_tongue_csv_is_reproducible(tmp_path, capsys):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        code, _, _ = run_cli(capsys, "tongue", "--axis1=-1:1:5", "--axis2", "0:1:3",
                             "--horizon", "200", "--output", str(p))
        assert code == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_riccati_seed_reproducible(tmp_path, capsys):
    outs = []
    for name in ("a.json", "b.json"):
        path = tmp_path / name
        code, _, _ = run_cli(capsys, "riccati", "--seed", "3", "--horizon", "100",
                             "--json", str(path))
        assert code == 0
        outs.append(path.read_text())
    assert outs[0] == outs[1]


def test_short_riccati_horizon_is_config_error(capsys):
    assert run_cli(capsys, "riccati", "--horizon", "50")[0] == 2


def test_locked_circle_solve_fails(capsys):
    # stationary points: the fixed-point iteration cannot converge
    assert run_cli(capsys, "solve", "--model", "circle", "--c", "2", "--eps", "3")[0] == 1


def test_riccati_counterexample_reports_h1_fail(capsys):
    code, out, _ = run_cli(capsys, "riccati", "--system", "constant", "--a", "0",
                           "--b", "0.1", "--horizon", "100")
    assert code == 0
    assert "H1 FAIL" in out


def test_simulate_and_psi_outputs(tmp_path, capsys):
    traj = tmp_path / "traj.csv"
    code, _, _ = run_cli(capsys, "simulate", "--model", "constant", "--omega", "1,2",
                         "--horizon", "5", "--output", str(traj))
    assert code == 0
    assert traj.read_text().splitlines()[0] == "t,x1,x2"
    rep = tmp_path / "psi.json"
    code, out, _ = run_cli(capsys, "psi", "--model", "constant", "--omega", "1,2",
                           "--rho", "1,2", "--horizon", "10", "--json", str(rep))
    assert code == 0
    assert json.loads(rep.read_text())["value"] == 0.0


def test_leader_with_rate(capsys):
    code, out, _ = run_cli(capsys, "leader", "--model", "constant", "--omega", "1,2",
                           "--rate", "1,2", "--horizon", "200")
    assert code == 0
    assert "leader PASS" in out


def test_module_entry_point():
    env = dict(os.environ)
    proc = subprocess.run([sys.executable, "-m", "rotvec", "solve", "--model", "constant",
                           "--omega", "0.5,2"], capture_output=True, text=True, env=env)
    assert proc.returncode == 0
    assert "rho = (0.5, 2)" in proc.stdout


def test_config_accepts_flag_spellings(tmp_path, capsys):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("model = constant\nomega = 1,2\nL = 3\nnorm-c = 4\nk_schedule = 25,50\n")
    code, out, _ = run_cli(capsys, "solve", "--config", str(cfg))
    assert code == 0
    assert "L = 3," in out and "c = 4," in out
