import json
import shutil
import subprocess
from pathlib import Path

import pytest

from aggrahull import __version__
from aggrahull.cli import main, validate_report

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def run(args, tmp_path, name="report.json"):
    out = tmp_path / name
    code = main(args + ["--out", str(out), "--quiet"])
    return code, json.loads(out.read_text()) if out.exists() else None


def test_check_report(tmp_path):
    code, rep = run(["check", str(FIXTURES / "three_spheres.json")], tmp_path)
    assert code == 0
    validate_report(rep)
    assert rep["results"]["pdlc"]["found"]
    assert rep["results"]["hhc"]["verdict"] == "holds-by-m3-pdlc"
    assert rep["input"]["digest"].startswith("sha256:")


def test_hull_and_replay(tmp_path, capsys):
    code, rep = run(["hull", str(FIXTURES / "three_spheres.json"), "--samples", "2000"], tmp_path)
    assert code == 0
    assert len(rep["results"]["aggregations"]) == 4
    assert main(["replay", str(tmp_path / "report.json")]) == 0
    assert "reproduced" in capsys.readouterr().out


def test_replay_detects_tampering(tmp_path, capsys):
    run(["hull", str(FIXTURES / "disk.json"), "--samples", "2000"], tmp_path)
    p = tmp_path / "report.json"
    rep = json.loads(p.read_text())
    rep["results"]["aggregations"][0]["lambda"][0] += 0.5
    p.write_text(json.dumps(rep))
    assert main(["replay", str(p)]) == 1
    assert "mismatch" in capsys.readouterr().out
    rep["input"]["digest"] = "sha256:" + "0" * 64
    p.write_text(json.dumps(rep))
    assert main(["replay", str(p)]) == 2


def test_counterexample_exit_code(tmp_path):
    code, rep = run(["hull", str(FIXTURES / "parallelogram_n3.json"), "--verify",
                     "--samples", "2000"], tmp_path)
    assert code == 1
    assert rep["results"]["verification"]["status"].startswith("counterexample")


def test_precondition_exit_code(tmp_path, capsys):
    assert main(["hull", str(FIXTURES / "empty_ball.json"), "--quiet"]) == 3
    assert "precondition failed" in capsys.readouterr().err


def test_input_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 2, "constraints": [{"A": [[1, 2], [0, 1]]}]}')
    assert main(["check", str(bad)]) == 2
    assert "not symmetric" in capsys.readouterr().err
    assert main(["falsify-hhc", str(FIXTURES / "separable.json"), "--normal", "1,1"]) == 2


def test_falsify_output(tmp_path):
    code, rep = run(["falsify-hhc", str(FIXTURES / "separable.json"), "--trials", "5"], tmp_path)
    assert code == 0
    validate_report(rep)
    w = rep["results"]["witness"]
    assert w is not None and w["residual"] > w["threshold"]


@pytest.mark.skipif(shutil.which("aggrahull") is None, reason="console script not installed")
def test_console_script():
    out = subprocess.run(["aggrahull", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and __version__ in out.stdout
