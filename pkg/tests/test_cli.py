import json
import subprocess
import sys

import pytest

from tnormloss.cli import run

CFG = {
    "generator": "prod", "test_fraction": 0.5, "beta_grid": [0.01], "hidden": [8],
    "optimizer": {"kind": "adam", "lr": 0.01, "epochs": 3}, "seeds": [0, 1],
    "synth": {"n_per_class": 6, "classes": 2, "d": 6, "intra_edge_p": 0.3,
              "inter_edge_p": 0.02, "noise": 0.3, "seed": 0},
    "lambdas": [-1.0, 0.0], "splits": [0.5],
}


@pytest.fixture
def cfg(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(CFG))
    return str(path)


def test_check_passes(capsys):
    assert run(["check", "--generator", "ss:-1.0"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "generator\taxiom\tmax_violation\tresult"
    assert len(out) == 6 and all(line.endswith("pass") for line in out[1:])


def test_check_whole_grid(capsys):
    assert run(["check"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 1 + 12 * 5


def test_compile_manifold_has_no_pseudo_inverse(capsys):
    assert run(["compile", "--generator", "prod"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# generator prod")
    assert "genpinv" not in out


def test_compile_kb_file(tmp_path, capsys):
    kb = tmp_path / "t.kb"
    kb.write_text('domain D = {"a", "b"} ; pred p/1 learnable ; rule forall x in D: p(x) | p(x) ;')
    assert run(["compile", "--kb", str(kb), "--generator", "luk"]) == 0
    assert "genpinv" in capsys.readouterr().out
    assert run(["compile", "--kb", str(kb), "--quantifier-mode", "minmax"]) == 0
    assert "min_groundings" in capsys.readouterr().out


def test_train_deterministic(cfg, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(["train", "--config", cfg, "--seed", "3", "--out", str(a)]) == 0
    assert run(["train", "--config", cfg, "--seed", "3", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "epoch,loss,train_acc,test_acc" and len(lines) == 5


def test_sweep(cfg, capsys):
    assert run(["sweep", "--config", cfg, "--jobs", "2"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "split,lambda,mean_acc,stddev" and len(out) == 3


def test_gradcheck(capsys):
    assert run(["gradcheck", "--generator", "ss:-1.0", "--seed", "1"]) == 0
    name, value = capsys.readouterr().out.split()
    assert name == "max_relative_error" and float(value) < 1e-4


@pytest.mark.parametrize("argv,code", [
    (["check", "--bogus"], 2),
    ([], 2),
    (["train"], 2),
    (["check", "--generator", "gauss"], 4),
    (["compile", "--kb", "/nonexistent.kb"], 3),
    (["sweep", "--config", "/nonexistent.json"], 3),
    (["train", "--config", "CFG", "--seed", "-1"], 2),
])
def test_exit_codes(argv, code, cfg, capsys):
    argv = [cfg if a == "CFG" else a for a in argv]
    assert run(argv) == code
    assert capsys.readouterr().err


def test_kb_error(tmp_path):
    kb = tmp_path / "bad.kb"
    kb.write_text("domain D ; rule forall x: p(x) ;")
    assert run(["compile", "--kb", str(kb)]) == 5


def test_config_error(tmp_path):
    path = tmp_path / "c.json"
    path.write_text('{"generator": "ss:-1.0", "splits": [2.0]}')
    assert run(["train", "--config", str(path)]) == 4


def test_console_script_logs_to_stderr(cfg):
    proc = subprocess.run([sys.executable, "-m", "tnormloss.cli", "train", "--config", cfg, "-v"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("epoch,loss")
    assert "INFO" in proc.stderr and "INFO" not in proc.stdout
