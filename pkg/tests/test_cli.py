from __future__ import annotations

import json
import subprocess
import sys

import pytest

from conjlab.cli import main


def _run(*args: str) -> subprocess.CompletedProcess:
    return subprocess.run([sys.executable, "-m", "conjlab", *args], capture_output=True, text=True, timeout=300)


def test_phi(capsys):
    assert main(["phi", "jiang", "--t", "3", "--s", "1"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(0.1353352832, abs=1e-8)


def test_map(capsys, golden):
    assert main(["map", "H", "jiang", "--t", "4", "--x", "0.7"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(golden["jiang_H_t4_xi0.7"]["value"][0], abs=1e-8)
    assert main(["map", "G", "s3_rot", "--t", "1", "--x", "[0.1, -0.2]"]) == 0
    assert len(capsys.readouterr().out.split()) == 2


def test_sweep(capsys):
    assert main(["sweep", "jiang", "--quantity", "theta", "--t0", "0", "--t1", "5", "--n", "3"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "t,quantity,value,scenario" and len(lines) == 4
    assert float(lines[-1].split(",")[2]) == pytest.approx(2.718281828, rel=1e-9)


def test_bad_inputs(tmp_path, capsys):
    bad = tmp_path / "bad.scn"
    bad.write_text("[linear]\nA = constant(-1\n")
    assert main(["phi", str(bad), "--t", "1", "--s", "0"]) == 2
    assert "parse error" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["phi", "jiang", "--t", "-1", "--s", "0"])


def test_verify_subprocess_deterministic(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"r{k}.json"
        proc = _run("verify", "jiang", "--suite", "continuity", "--json", str(path), "-q")
        assert proc.returncode == 0, proc.stderr
        d = json.loads(path.read_text())
        outs.append(d["entries"])
    assert outs[0] == outs[1]


def test_verify_csv_stdout():
    proc = _run("verify", "zero_f", "--suite", "conjugacy", "--csv", "-", "-q")
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.startswith("scenario,check_id")
