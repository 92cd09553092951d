"""Exercise the command-line surface on small configurations."""

import json
import os

import numpy as np
import pytest

from vortexlab.cli import main
from vortexlab.pipeline import KERNEL_CSV_HEADER

SMALL = {
    "schedule": {"count": 1},
    "families": {"indices": [2]},
    "grids": {"radial_points": 1025, "heat_points": 64},
    "heat": {"time_count": 2},
    "diagnostics": {"centers": 33},
    "verify": {"battery_size": 1},
}


@pytest.fixture()
def small_config(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(SMALL))
    return str(path)


def test_kernels_writes_table(tmp_path, capsys):
    pairs = tmp_path / "pairs.csv"
    pairs.write_text(
        "x1,x2,y1,y2\n0.1,0.2,0.3,-0.1\n0.0,0.5,0.5,0.0\n-0.3,0.1,0.2,0.6\n"
    )
    rc = main(["kernels", "--pairs", str(pairs), "--out", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "kernels.csv").read_text().splitlines()
    assert lines[0] == KERNEL_CSV_HEADER
    assert len(lines) == 4
    assert "wrote 3 rows" in capsys.readouterr().out


def test_kernels_rejects_bad_columns(tmp_path, capsys):
    pairs = tmp_path / "pairs.csv"
    pairs.write_text("a,b\n1,2\n")
    rc = main(["kernels", "--pairs", str(pairs), "--out", str(tmp_path)])
    assert rc == 2
    assert "x1,x2,y1,y2" in capsys.readouterr().err


def test_verify_handwritten_zero_trajectory(tmp_path, capsys, small_config):
    rows = ["t,r,u_theta,omega"]
    r = np.linspace(0.0, 1.0, 33)
    for t in (0.0, 0.05, 0.1):
        rows.extend(f"{t},{ri},0.0,0.0" for ri in r)
    traj = tmp_path / "zero.csv"
    traj.write_text("\n".join(rows) + "\n")

    rc = main(["verify", "--config", small_config, "--trajectory", str(traj)])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["steady"] is True
    assert doc["nu"] is None
    assert doc["fields"][0]["R_vel"] == 0.0
    assert doc["fields"][0]["R_vort"] == 0.0


def test_run_single_stage_with_seed_override(tmp_path, capsys, small_config):
    out = tmp_path / "out"
    rc = main([
        "run", "--stage", "simulate", "--config", small_config,
        "--out", str(out), "--seed", "123",
    ])
    assert rc == 0
    assert "stage simulate:" in capsys.readouterr().out
    assert (out / "trajectories" / "index.json").exists()
    with open(out / "config.json") as fh:
        assert json.load(fh)["verify"]["seed"] == 123


def test_report_without_inputs_names_the_producer(tmp_path, capsys, small_config):
    rc = main(["report", "--config", small_config, "--out", str(tmp_path / "empty")])
    assert rc == 2
    err = capsys.readouterr().err
    assert "solver_checks.json" in err
    assert "simulate stage" in err


def test_missing_config_file(tmp_path, capsys):
    rc = main(["run", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)])
    assert rc == 2
    assert "nope.json" in capsys.readouterr().err


def test_full_run_exit_reflects_scorecard(tmp_path, capsys, small_config):
    # a single viscosity rung cannot exhibit the fourfold shrink, so the
    # summary must report failures and the exit code must say so
    out = tmp_path / "out"
    rc = main(["run", "--config", small_config, "--out", str(out), "--workers", "2"])
    assert rc == 1
    text = capsys.readouterr().out
    assert "some criteria FAILED" in text
    assert "[FAIL]" in text and "[pass]" in text
    assert (out / "summary.json").exists()
    assert (out / "figures" / "sheet_limit.png").exists()
