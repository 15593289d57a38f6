import os
import subprocess
from pathlib import Path

import pytest

CLI = os.environ.get("DELAYRECON_CLI", "")
pytestmark = pytest.mark.skipif(not CLI or not Path(CLI).exists(), reason="command-line tool not built")

SMALL = [
    "--set", "sim.transient=500",
    "--set", "sim.pool=2000",
    "--set", "sim.test=200",
    "--set", "sample.n_train=100",
    "--set", "cells=4",
    "--set", "network.hidden=8",
]


def cli(*args, cwd=None):
    return subprocess.run([CLI, *map(str, args)], capture_output=True, text=True, cwd=cwd)


def test_help_and_usage_errors():
    assert cli("--help").returncode == 0
    assert cli("frobnicate").returncode == 1
    assert cli("--set", "trian.lr=1", "run", "--steps", "1").returncode == 1
    assert cli("--deterministic", "maybe", "run").returncode == 1


def test_missing_config_file_is_a_usage_error(tmp_path):
    assert cli("--config", tmp_path / "nope.cfg", "run").returncode == 1


def test_numeric_failure_exit_code(tmp_path):
    r = cli(*SMALL, "--set", "train.lr=1e300", "--out", tmp_path / "bad", "run", "--steps", "20")
    assert r.returncode == 2
    assert not (tmp_path / "bad").exists()


def test_pipeline_subcommands(tmp_path):
    states = tmp_path / "states.csv"
    assert cli("simulate", "--system", "lorenz63", "--steps", "3000", "--transient", "500", "-o", states).returncode == 0
    assert states.read_text().splitlines()[0] == "x0,x1,x2"

    delay = tmp_path / "delay.csv"
    assert cli("embed", "-i", states, "--column", "x0", "--tau-steps", "18", "-m", "4", "-o", delay).returncode == 0
    assert len(delay.read_text().splitlines()) == 3000 - 54 + 1

    r = cli("--out", tmp_path / "sel", "select-params", "-i", states, "--column", "x0", "--max-lag", "40", "--max-dim", "6")
    assert r.returncode == 0
    assert "tau_steps" in r.stdout
    assert (tmp_path / "sel" / "ami.csv").exists()

    labels = tmp_path / "labels.csv"
    assert cli("cluster", "-i", states, "-k", "10", "-o", labels).returncode == 0

    basis = tmp_path / "basis.dmat"
    r = cli("pod", "-i", states, "-n", "2", "-o", basis)
    assert r.returncode == 0
    assert basis.read_bytes()[:4] == b"DMAT"


def test_run_is_deterministic(tmp_path):
    outs = []
    for name in ("a", "b"):
        r = cli(*SMALL, "--seed", "3", "--out", tmp_path / name, "run", "--steps", "15")
        assert r.returncode == 0, r.stderr
        outs.append((tmp_path / name / "report.csv").read_bytes())
    assert outs[0] == outs[1]
    assert outs[0].startswith(b"metric,value\n")

    r = cli("report", "-i", tmp_path / "a" / "report.csv", "--format", "csv")
    assert r.returncode == 0
    assert r.stdout.encode() == outs[0]
