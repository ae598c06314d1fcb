import json
import os
import subprocess
import sys

import pytest

from syskit.cli import main
from syskit.report import failed_checks, to_csv, to_json


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_gen_flat_torus(tmp_path, capsys):
    path = str(tmp_path / "t4.mesh")
    code, out = run(capsys, "gen", "flat-torus", "4", "--out", path)
    info = json.loads(out)
    assert code == 0 and info["vertices"] == 16 and info["area"] == 16.0
    assert os.path.exists(path)


def test_gen_other_kinds(tmp_path, capsys):
    _, out = run(capsys, "gen", "hairy-torus", "3", "0.1", "--out", str(tmp_path / "h.mesh"))
    assert json.loads(out)["genus"] == 4
    _, out = run(capsys, "gen", "sphere-subdiv", "0", "--out", str(tmp_path / "s.mesh"))
    assert json.loads(out)["faces"] == 20


def test_short_loops_with_figures(tmp_path, capsys):
    mesh = str(tmp_path / "t.mesh")
    run(capsys, "gen", "flat-torus", "8", "--out", mesh)
    out_json = str(tmp_path / "sl.json")
    code, _ = run(capsys, "run", "short-loops", mesh, "--ell", "8", "--count", "2", "--out", out_json)
    assert code == 0
    rep = json.loads(open(out_json).read())
    assert [round(lp["length"], 3) for lp in rep["loops"]] == [8.0, 9.414]
    for name in rep["figures"]:
        assert os.path.getsize(tmp_path / name) > 0
    assert "sl_lengths.png" in rep["figures"]


def test_calculator_csv(capsys):
    code, out = run(capsys, "run", "calc-fat-torus", "--eps", "max", "--format", "csv")
    assert code == 0
    assert out == "fat-torus,eps=1.76274717404,0.915035911172\n"


def test_deterministic_output(tmp_path, capsys):
    mesh = str(tmp_path / "g.mesh")
    run(capsys, "gen", "genus2", "--out", mesh)
    out = str(tmp_path / "p.json")
    texts = []
    for _ in range(2):
        run(capsys, "run", "pants-full", mesh, "--out", out)
        texts.append(open(out).read())
    assert texts[0] == texts[1]


def test_missing_file(capsys):
    code, out = run(capsys, "run", "short-loops", "does-not-exist.mesh")
    assert code == 1 and json.loads(out)["error"]["code"] == "PARSE"


def test_bad_const(capsys):
    code, out = run(capsys, "run", "calc-group", "--const", "b1")
    assert code == 1 and json.loads(out)["error"]["code"] == "BAD_PARAMS"


def test_failed_audit_exit_code(tmp_path, capsys):
    mesh = str(tmp_path / "t.mesh")
    run(capsys, "gen", "flat-torus", "4", "--out", mesh)
    code, _ = run(capsys, "run", "pants-full", mesh, "--const", "C_g=1e-9", "--out", str(tmp_path / "p.json"))
    assert code == 2


def test_log_env_goes_to_stderr(tmp_path):
    env = dict(os.environ, SYSKIT_LOG="info")
    proc = subprocess.run([sys.executable, "-m", "syskit.cli", "run", "calc-collar", "--const", "L=1"],
                          capture_output=True, text=True, env=env, cwd=tmp_path)
    assert proc.returncode == 0
    json.loads(proc.stdout)


def test_report_serialisers():
    rep = {"b": 1.0, "a": [float("nan"), float("inf")], "_hidden": 3,
           "checks": [{"name": "x", "lhs": 2, "rhs": 1, "pass": False}]}
    text = to_json(rep)
    assert '"_hidden"' not in text and '"nan"' in text and '"inf"' in text
    assert text.index('"a"') < text.index('"b"')
    assert failed_checks(rep) == ["x"]
    assert to_csv({"calculator": "c", "inputs": {"z": 1.5, "a": 2}, "value": 0.1}) == "c,a=2,z=1.5,0.1\n"
    assert to_csv({"k": {"x": True}}) == "key,value\nk.x,true\n"
