import json
import shutil
import subprocess
from pathlib import Path

import pytest

from pptp.errors import InvariantViolation
from pptp.sim import cli
from pptp.sim.engine import Simulation

CHAIN5 = Path(__file__).resolve().parents[1] / "scenarios" / "chain5.scn"


@pytest.fixture
def scn(tmp_path):
    path = tmp_path / "chain5.scn"
    path.write_text(CHAIN5.read_text())
    return path


def test_validate_ok(scn, capsys):
    assert cli.main(["validate", str(scn)]) == cli.EXIT_OK
    assert "6 nodes" in capsys.readouterr().out


def test_validate_config_error(tmp_path, capsys):
    bad = tmp_path / "bad.scn"
    bad.write_text("node C role=consumer\nlink C ghost\n")
    assert cli.main(["validate", str(bad)]) == cli.EXIT_CONFIG
    assert "line 2" in capsys.readouterr().err


def test_missing_file(tmp_path):
    assert cli.main(["validate", str(tmp_path / "nope.scn")]) == cli.EXIT_CONFIG


def test_run_and_report(scn, tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["run", str(scn), "--seed", "3", "--ticks", "200", "--out", str(out)]) == 0
    summary = json.loads((out / cli.SUMMARY_FILE).read_text())
    assert summary["run"] == {"seed": 3, "ticks": 200, "window": 100}
    assert summary["totals"]["conserved"] is True
    header = (out / cli.METRICS_FILE).read_text().splitlines()[0]
    assert header.startswith("tick,consumer,path_id")
    capsys.readouterr()
    assert cli.main(["report", str(out)]) == 0
    assert "conserved=True" in capsys.readouterr().out


def test_run_twice_identical(scn, tmp_path):
    for name in ("a", "b"):
        assert cli.main(["run", str(scn), "--ticks", "150", "--out", str(tmp_path / name)]) == 0
    for f in (cli.METRICS_FILE, cli.SUMMARY_FILE):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_report_missing_dir(tmp_path):
    assert cli.main(["report", str(tmp_path)]) == cli.EXIT_CONFIG


def test_invariant_violation_exit_code(scn, tmp_path, monkeypatch, capsys):
    def broken(self):
        raise InvariantViolation("forced")

    monkeypatch.setattr(Simulation, "_check_invariants", broken)
    assert cli.main(["run", str(scn), "--ticks", "20", "--out", str(tmp_path / "o")]) == cli.EXIT_INVARIANT
    assert "forced" in capsys.readouterr().err


def test_usage_error():
    with pytest.raises(SystemExit) as err:
        cli.main([])
    assert err.value.code != 0


@pytest.mark.skipif(shutil.which("pptpsim") is None, reason="console script not installed")
def test_console_script(scn):
    proc = subprocess.run(["pptpsim", "validate", str(scn)], capture_output=True, text=True)
    assert proc.returncode == 0
    proc = subprocess.run(["pptpsim", "validate", str(scn) + ".missing"], capture_output=True, text=True)
    assert proc.returncode == 1
