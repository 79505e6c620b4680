#!/usr/bin/python3
"""Acceptance runs of the absnet-lab package."""
import json
from subprocess import run

import numpy as np
import pytest

from absnet_lab.core import Status
from absnet_lab.engines.net_core import StudentNetwork, max_heavy_angle
from absnet_lab.utils import load_network_json
from absnet_lab.verifier import acceptance_teacher, run_suite, suite_failed

pytestmark = pytest.mark.slow


@pytest.mark.parametrize("suite", ["kernels", "claims", "init", "sampling", "landscape"])
def test_suite_has_no_failures(suite, verifier_config):
    reports = run_suite(suite, verifier_config)
    failures = {report.name: report.measured for report in reports if report.status == Status.FAIL}
    assert not suite_failed(reports), failures


def test_kernels_are_deterministic(verifier_config):
    small = verifier_config.copy(update={"mc_samples": 20_000, "g_smoothness_pairs": 100})
    first = [report.to_dict() for report in run_suite("kernels", small)]
    second = [report.to_dict() for report in run_suite("kernels", small)]
    assert first == second


def test_cli_train_reaches_target(experiment, tmp_path):
    trajectory = tmp_path / "trajectory.csv"
    network = tmp_path / "final.json"
    svg = tmp_path / "trajectory.svg"
    result = run(
        [
            "python3",
            "-m",
            "absnet_lab",
            "train",
            "-c",
            experiment,
            "--out-traj",
            str(trajectory),
            "--network",
            str(network),
            "--svg",
            str(svg),
        ],
        capture_output=True,
        check=False,
    )
    assert result.returncode == 0, result.stderr
    table = np.loadtxt(trajectory, delimiter=",", skiprows=1, ndmin=2)
    assert table[-1, 1] <= 1e-8
    assert json.loads(network.read_text(encoding="utf-8"))["d"] == 2
    assert "<svg" in svg.read_text(encoding="utf-8")


def test_cli_train_aligns_every_heavy_student(aligned_experiment, seed, tmp_path):
    trajectory = tmp_path / "trajectory.csv"
    network = tmp_path / "final.json"
    result = run(
        [
            "python3",
            "-m",
            "absnet_lab",
            "train",
            "-c",
            aligned_experiment,
            "--out-traj",
            str(trajectory),
            "--network",
            str(network),
        ],
        capture_output=True,
        check=False,
    )
    assert result.returncode == 0, result.stderr
    losses = np.loadtxt(trajectory, delimiter=",", skiprows=1, ndmin=2)[:, 1]
    assert losses[-1] <= 1e-8
    assert np.all(np.diff(losses) <= 1e-12)
    student = StudentNetwork(load_network_json(str(network)))
    assert student.m == 20
    assert max_heavy_angle(acceptance_teacher(seed), student) <= 1e-3


def test_cli_kernel_table():
    result = run(
        ["python3", "-m", "absnet_lab", "kernel", "--u", "1,0", "--v", "1,0"],
        capture_output=True,
        check=False,
        text=True,
    )
    assert result.returncode == 0
    assert "1.000000" in result.stdout.splitlines()[1]


def test_cli_verify_writes_report(tmp_path):
    report = tmp_path / "report.json"
    result = run(
        ["python3", "-m", "absnet_lab", "verify", "--suite", "init", "--report", str(report)],
        capture_output=True,
        check=False,
    )
    document = json.loads(report.read_text(encoding="utf-8"))
    assert document["suite"] == "init"
    assert result.returncode == 0
