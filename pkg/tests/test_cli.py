import json
import subprocess
import sys

import pytest

from hc3lab import cli
from hc3lab.band import alpha0
from hc3lab.model1d import ConvergenceError, Material


def read_json(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_alpha0_command(tmp_path):
    out = tmp_path / "o"
    assert cli.run(["alpha0", "--a", "1", "--m", "2", "--out", str(out)]) == 0
    rep = read_json(out / "alpha0.json")
    assert set(rep) >= {"a", "m", "theta0", "alpha0"}
    assert rep["alpha0"] == pytest.approx(alpha0(Material(1.0, 2.0)), rel=1e-6)
    man = read_json(out / "manifest.json")
    assert man["command"] == "alpha0"
    assert "alpha0.json" in json.dumps(man["artifacts"])


def test_band_command_m_below_one(tmp_path):
    out = tmp_path / "o"
    assert cli.run(["band", "--a", "1", "--m", "0.5", "--alpha", "1.0", "--out", str(out)]) == 0
    assert (out / "band_profile.csv").exists()
    assert read_json(out / "band.json")["alpha0"] == 1.0


def test_unknown_key_writes_nothing(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[material]\nbogus = 1\n")
    out = tmp_path / "o"
    assert cli.run(["alpha0", "--config", str(cfg), "--out", str(out)]) == 1
    assert not out.exists()


def test_usage_errors(tmp_path):
    assert cli.run([]) == 1
    assert cli.run(["no-such-command"]) == 1
    assert cli.run(["alpha0", "--m", "-1", "--out", str(tmp_path / "o")]) == 1
    assert cli.run(["alpha0", "--threads", "0", "--out", str(tmp_path / "p")]) == 1


def test_numerical_error_exit_code(tmp_path, monkeypatch):
    def boom(ctx):
        raise ConvergenceError("forced")

    monkeypatch.setitem(cli.COMMANDS, "theta0", (boom, "forced failure"))
    assert cli.run(["theta0", "--out", str(tmp_path / "o")]) == 2


def test_print_default_config(capsys):
    assert cli.run(["--print-default-config"]) == 0
    assert "[material]" in capsys.readouterr().out


def test_reruns_byte_identical(tmp_path):
    runs = []
    for k in range(2):
        out = tmp_path / f"r{k}"
        assert cli.run(["constants", "--m", "10", "--set", "grid.extrapolate=false", "--out", str(out)]) == 0
        runs.append({p.name: p.read_bytes() for p in out.iterdir() if p.name != "manifest.json"})
    assert runs[0] == runs[1] and runs[0]


def test_console_script(tmp_path):
    out = tmp_path / "o"
    proc = subprocess.run([sys.executable, "-m", "hc3lab.cli", "theta0", "--out", str(out)],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0, proc.stderr
    assert read_json(out / "theta0.json")["theta0"] == pytest.approx(0.590106, abs=1e-6)
