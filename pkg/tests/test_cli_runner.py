import json
import os
import subprocess
import sys

import pytest

from polymerlab import cli_runner as cr
from polymerlab.env_model import Gaussian

MINIMAL = """\
[experiment]
command = simulate
beta = 0.3
dim = 3
horizon = 50
seed = 1

[environment]
family = Gaussian
"""

SMALL_SIM = """\
[experiment]
beta = 0.5
dim = 2
horizon = 12
replicas = 40
seed = 3

[environment]
family = Gaussian
"""


def _write(tmp_path, text, name="exp.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _tree(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


# ---------------------------------------------------------------- parsing

def test_minimal_config_fills_defaults():
    cfg = cr.parse_config(MINIMAL)
    assert cfg.command == "simulate" and cfg.spec == Gaussian()
    assert (cfg.beta, cfg.dim, cfg.horizon, cfg.seed) == (0.3, 3, 50, 1)
    assert cfg.replicas == 100 and cfg.workers == 1 and cfg.grids == {}


def test_negative_beta_names_the_field():
    with pytest.raises(cr.ConfigError) as exc:
        cr.parse_config(MINIMAL.replace("beta = 0.3", "beta = -0.1"))
    (line, msg), = exc.value.errors
    assert line == 3 and "beta" in msg


def test_round_trip_is_identity():
    cfg = cr.parse_config(MINIMAL + "\n[grids]\np = 1, 1.5\nn = 5, 10\n")
    text = cr.format_config(cfg)
    assert cr.parse_config(text) == cfg
    assert cr.format_config(cr.parse_config(text)) == text


def test_errors_carry_line_numbers():
    text = MINIMAL.replace("seed = 1", "seed = 1\nhorizn = 4\ndim = x") .replace("dim = 3\n", "")
    with pytest.raises(cr.ConfigError) as exc:
        cr.parse_config(text)
    got = dict((msg.split("'")[1], line) for line, msg in exc.value.errors)
    assert got == {"horizn": 6, "dim": 7}


def test_environment_and_grid_errors():
    with pytest.raises(cr.ConfigError) as exc:
        cr.parse_config(MINIMAL.replace("family = Gaussian", "family = Cauchy"))
    assert exc.value.errors[0][0] == 9
    with pytest.raises(cr.ConfigError) as exc:
        cr.parse_config(MINIMAL + "[grids]\nt = 0.5, 2\n")
    assert "thresholds" in exc.value.errors[0][1]
    with pytest.raises(cr.ConfigError):
        cr.parse_config(MINIMAL + "[extra]\nx = 1\n")
    with pytest.raises(cr.ConfigError):
        cr.parse_config("[experiment]\ndim = 2\n")


def test_hash_ignores_runtime_keys():
    a = cr.parse_config(MINIMAL)
    assert cr.config_hash(a) == cr.config_hash(a.replace(workers=8, output_dir="elsewhere"))
    assert cr.config_hash(a) != cr.config_hash(a.replace(seed=2))


# ---------------------------------------------------------------- running

def test_simulate_is_byte_identical_across_runs_and_workers(tmp_path):
    cfg = _write(tmp_path, SMALL_SIM)
    outs = []
    for i, workers in enumerate((1, 1, 3)):
        d = tmp_path / f"out{i}"
        assert cr.main(["simulate", "--config", cfg, "--output-dir", str(d), "--workers", str(workers)]) == 0
        outs.append(_tree(d))
    assert outs[0] == outs[1] == outs[2]
    assert set(outs[0]) == {"traces.csv", "traces.svg", "config.echo", "report.json"}
    assert outs[0]["traces.csv"].startswith(b"# polymerlab simulate config=")


def test_seed_flag_overrides_config(tmp_path):
    cfg = _write(tmp_path, SMALL_SIM)
    cr.main(["simulate", "--config", cfg, "--output-dir", str(tmp_path / "a")])
    cr.main(["simulate", "--config", cfg, "--output-dir", str(tmp_path / "b"), "--seed", "4"])
    a = (tmp_path / "a" / "traces.csv").read_bytes()
    b = (tmp_path / "b" / "traces.csv").read_bytes()
    assert a != b


def test_env_var_sets_default_workers(tmp_path, monkeypatch):
    monkeypatch.setenv("POLYMERLAB_WORKERS", "2")
    seen = {}
    monkeypatch.setattr(cr, "run", lambda cfg: seen.setdefault("w", cfg.workers) and 0)
    cr.main(["simulate", "--config", _write(tmp_path, SMALL_SIM)])
    assert seen["w"] == 2
    seen.clear()
    cr.main(["simulate", "--config", _write(tmp_path, SMALL_SIM + "", "b.ini"), "--workers", "3"])
    assert seen["w"] == 3


def test_invalid_config_exits_one(tmp_path, capsys):
    cfg = _write(tmp_path, SMALL_SIM.replace("beta = 0.5", "beta = -1"))
    assert cr.main(["simulate", "--config", cfg]) == 1
    assert "beta" in capsys.readouterr().err
    assert cr.main(["simulate", "--config", str(tmp_path / "missing.ini")]) == 1
    other = _write(tmp_path, MINIMAL, "m.ini")
    assert cr.main(["moments", "--config", other]) == 1


def test_oracle_command(tmp_path, capsys):
    text = """\
[experiment]
beta = 0.8
dim = 1
horizon = 4
replicas = 5
seed = 0

[environment]
family = TwoPoint
v_low = -1.0
v_high = 1.0
p_high = 0.5
"""
    out = tmp_path / "o"
    assert cr.main(["oracle", "--config", _write(tmp_path, text), "--output-dir", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["verdict"] == "PASS"
    assert rep["summary"]["max_rel_err"] <= 1e-12
    assert rep["summary"]["martingale_cond_gap"] <= 1e-12
    assert "max_rel_err" in capsys.readouterr().out


def test_check_conditions_battery(tmp_path):
    text = "[experiment]\nbeta = 1.0\n"
    out = tmp_path / "c"
    assert cr.main(["check-conditions", "--config", _write(tmp_path, text), "--output-dir", str(out)]) == 0
    reports = json.loads((out / "conditions.json").read_text())
    cond1 = {(r["meta"]["family"], r["constants"]["beta"]): r["verdict"]
             for r in reports if r["condition_id"] == "COND1"}
    for fam in ("Gaussian", "Weibull", "Poisson", "GumbelNeg"):
        assert cond1[fam, 0.5] == cond1[fam, 1.0] == "PASS"
    assert cond1["SquaresLattice", 0.5] == cond1["SquaresLattice", 1.0] == "FAIL"


def test_decompose_and_moments(tmp_path):
    text = SMALL_SIM.replace("horizon = 12", "horizon = 6").replace("replicas = 40", "replicas = 2")
    out = tmp_path / "d"
    assert cr.main(["decompose", "--config", _write(tmp_path, text), "--output-dir", str(out)]) == 0
    assert json.loads((out / "report.json").read_text())["summary"]["max_rel_err"] <= 1e-12
    text = SMALL_SIM.replace("replicas = 40", "replicas = 500") + "\n[grids]\nn = 2, 6, 12\n"
    out = tmp_path / "m"
    assert cr.main(["moments", "--config", _write(tmp_path, text, "m.ini"), "--output-dir", str(out)]) == 0
    assert (out / "moments.csv").exists() and (out / "moments.svg").exists()


def test_overshoot_inconclusive_exit_code(tmp_path):
    text = """\
[experiment]
beta = 0.1
dim = 1
horizon = 10
replicas = 20
seed = 0

[environment]
family = Gaussian

[grids]
t = 2, 50
"""
    out = tmp_path / "s"
    assert cr.main(["overshoot", "--config", _write(tmp_path, text), "--output-dir", str(out)]) == 2
    assert json.loads((out / "report.json").read_text())["verdict"] == "INCONCLUSIVE"


def test_console_script_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "polymerlab.cli_runner", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "check-conditions" in r.stdout
