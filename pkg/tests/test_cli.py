import csv
import json
import os

import numpy as np
import pytest

from gamow import cli
from gamow.errors import ConfigError, InvariantError


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_parse_sections_and_comments():
    cfg = cli.parse_config("experiment = poles  # trailing\n\n[model]\nlambda = 0.2\nomegas = 1, 2\n"
                           "[numeric]\nN = 512\n")
    assert cfg["model.lambda"] == 0.2
    assert cfg["model.omegas"] == [1.0, 2.0]
    assert cfg["numeric.N"] == 512
    assert cfg["numeric.tol"] == 1e-8


@pytest.mark.parametrize("text", [
    "experiment = poles\nmodel.colour = red\n",
    "experiment = nonsense\n",
    "experiment = poles\nnumeric.tol = 0\n",
    "experiment = poles\nnumeric.N = many\n",
    "experiment = poles\njust words\n",
    "experiment = poles\nmodel.formfactor.family = gaussian\n",
])
def test_bad_configs(text):
    with pytest.raises(ConfigError):
        cli.build_model(cli.parse_config(text))


def test_poles_uncoupled(tmp_path):
    _, d, man = cli.run_config(cli.parse_config("experiment = poles\nmodel.lambda = 0\n"), str(tmp_path / "p"))
    assert man["headline"]["z0_0"] == [1.0, 0.0]
    assert man["headline"]["gamma"] == 0
    assert sorted(os.listdir(d)) == ["manifest.json", "plot.gp", "results.csv"]


def test_survival_fit(tmp_path):
    cfg = cli.parse_config("experiment = survival\nmodel.lambda = 0.1\nnumeric.points = 120\n")
    _, d, man = cli.run_config(cfg, str(tmp_path / "s"))
    assert abs(man["headline"]["gamma_fit"] / 0.0157 - 1) < 0.05
    assert list(read_csv(os.path.join(d, "results.csv"))[0]) == ["t", "p", "p_pole", "p_background"]
    assert "results.csv" in open(os.path.join(d, "plot.gp")).read()


def test_entropy_at_equilibrium_is_zero(tmp_path):
    cfg = cli.parse_config("experiment = entropy\nnumeric.coherence = 0\nnumeric.points = 50\n")
    _, d, _ = cli.run_config(cfg, str(tmp_path / "e"))
    assert all(float(r["S"]) == 0 for r in read_csv(os.path.join(d, "results.csv")))


def test_entropy_checks_pass(tmp_path):
    _, _, man = cli.run_config(cli.parse_config("experiment = entropy\nnumeric.points = 80\n"), str(tmp_path / "e"))
    assert {"S_nonpositive", "S_nondecreasing", "naive_zero", "exponent_2gamma_min",
            "projectors_agree"} <= set(man["checks"])
    assert man["failed"] == []


def test_csv_is_byte_identical(tmp_path):
    cfg = cli.parse_config("experiment = lyapunov\nmodel.lambda = 0.3\nnumeric.points = 40\n")
    outs = [cli.run_config(cfg, str(tmp_path / f"r{k}"))[1] for k in range(2)]
    a, b = (open(os.path.join(d, "results.csv"), "rb").read() for d in outs)
    assert a == b


def test_manifest_reproduces_csv(tmp_path):
    cfg = cli.parse_config("experiment = survival\nmodel.lambda = 0.3\nnumeric.points = 40\n")
    _, d, _ = cli.run_config(cfg, str(tmp_path / "a"))
    again = cli.load_config(os.path.join(d, "manifest.json"))
    _, d2, _ = cli.run_config(again, str(tmp_path / "b"))
    assert open(os.path.join(d, "results.csv"), "rb").read() == open(os.path.join(d2, "results.csv"), "rb").read()
    man = json.load(open(os.path.join(d, "manifest.json")))
    assert man["config"] == cfg and man["oracle"] is False and "wall_time" in man


def test_invariant_failure_writes_manifest(tmp_path):
    cfg = cli.parse_config("experiment = decoherence\nmodel.lambda = 0.1\nnumeric.points = 60\n")
    with pytest.raises(InvariantError) as e:
        cli.run_config(cfg, str(tmp_path / "d"), use_oracle=True)
    assert e.value.name == "oracle_recurrence"
    man = json.load(open(tmp_path / "d" / "manifest.json"))
    assert "oracle_recurrence" in man["failed"]


def test_exit_codes(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("GAMOW_OUT", str(tmp_path))
    ok = write(tmp_path, "ok.cfg", "experiment = poles\n")
    assert cli.main(["run", ok]) == 0
    assert os.path.exists(tmp_path / "out" / "manifest.json")
    assert cli.main(["run", write(tmp_path, "bad.cfg", "experiment = poles\nfoo = 1\n")]) == 2
    assert cli.main(["run", str(tmp_path / "missing.cfg")]) == 2
    dec = write(tmp_path, "dec.cfg", "experiment = decoherence\nnumeric.points = 60\n")
    assert cli.main(["run", dec, "--oracle", "--out", "dec"]) == 1
    th = write(tmp_path, "th.cfg", "experiment = thermal\nmodel.omegas = 1, 2\nmodel.omega_max = 20.5\n"
                                   "numeric.beta = -1\nnumeric.N = 600\n")
    assert cli.main(["run", th, "--out", "th"]) == 3
    assert "invariant failure" in capsys.readouterr().err


def test_oracle_mode_survival(tmp_path):
    cfg = cli.parse_config("experiment = survival\nmodel.lambda = 0.3\nnumeric.points = 40\nnumeric.N = 2000\n")
    _, d, man = cli.run_config(cfg, str(tmp_path / "o"), use_oracle=True)
    rows = read_csv(os.path.join(d, "results.csv"))
    assert man["oracle"] is True
    assert max(abs(float(r["p"]) - float(r["p_oracle"])) for r in rows) < 1e-3


def test_sweep_zero_coupling(tmp_path):
    cfg = cli.parse_config("experiment = poles\n")
    code, path = cli.sweep(cfg, "lambda", ["0"], str(tmp_path / "sw"))
    assert code == 0
    assert [float(r["gamma"]) for r in read_csv(path)] == [0.0]


def test_sweep_golden_rule_limit(tmp_path):
    cfg = cli.parse_config("experiment = poles\n")
    code, path = cli.sweep(cfg, "lambda", ["0.02", "0.01", "0.005"], str(tmp_path / "sw"), workers=2)
    r = np.array([float(x["gamma_over_lambda2"]) for x in read_csv(path)])
    target = 2 * np.pi * 0.25
    assert code == 0
    assert np.all(np.diff(np.abs(r - target)) < 0)
    assert abs(r[-1] / target - 1) < 1e-3


def test_sweep_oracle_convergence(tmp_path):
    cfg = cli.parse_config("experiment = oracle-compare\nmodel.lambda = 0.3\nnumeric.points = 60\n")
    code, path = cli.sweep(cfg, "N", ["1000", "2000", "4000"], str(tmp_path / "sw"))
    err = [float(r["max_error"]) for r in read_csv(path)]
    assert code == 0
    assert err[0] > err[1] > err[2]


def test_sweep_rejects_undeclared_parameter(tmp_path):
    with pytest.raises(ConfigError):
        cli.sweep(cli.parse_config("experiment = poles\n"), "points", ["1"], str(tmp_path))


def test_wigner_and_thermal_runs(tmp_path):
    _, d, man = cli.run_config(cli.parse_config("experiment = wigner\n"), str(tmp_path / "w"))
    assert man["failed"] == [] and "matrix" in open(os.path.join(d, "plot.gp")).read()
    cfg = cli.parse_config("experiment = thermal\nmodel.omegas = 1, 2\nmodel.lambda = 0.05\n"
                           "model.omega_max = 20.5\nnumeric.N = 1500\nnumeric.points = 20\n")
    _, d, man = cli.run_config(cfg, str(tmp_path / "t"))
    assert man["failed"] == []
    assert abs(man["headline"]["ratio"] / np.exp(-1) - 1) < 0.05
