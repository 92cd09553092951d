import json
import os
import warnings

import numpy as np
import pytest

from vortexlab.config import ExperimentConfig
from vortexlab.errors import DomainError, StageError
from vortexlab.pipeline import (
    STAGES,
    kernel_identity_report,
    kernel_plateau_report,
    load_run_trajectories,
    run,
    verify_trajectory_file,
    write_kernel_csv,
)

TINY = {
    "schedule": {"nu0": 1e-2, "ratio": 0.5, "count": 2},
    "families": {"indices": [2, 4]},
    "grids": {"radial_points": 1025, "heat_points": 64},
    "heat": {"time_count": 2},
    "verify": {"battery_size": 2},
    "diagnostics": {"centers": 33},
}


def tiny_config():
    return ExperimentConfig.from_dict(TINY)


def run_all(cfg, out_dir, staged=False, workers=1):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if staged:
            for stage in STAGES:
                manifest = run(cfg, out_dir, workers=workers, stages=(stage,))
        else:
            manifest = run(cfg, out_dir, workers=workers)
    return manifest


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    out = str(tmp_path_factory.mktemp("mono"))
    manifest = run_all(tiny_config(), out, workers=2)
    return out, manifest


def test_kernel_identity_report_passes():
    rep = kernel_identity_report(20260814)
    assert rep["symmetry_max"] < 1e-12
    assert rep["boundary_max"] < 1e-10
    assert rep["delta_identity"]["refined_error"] < 1e-5
    assert rep["pass"]


def test_kernel_plateau_report_passes():
    rep = kernel_plateau_report(seed=20260814)
    assert len(rep["decade_sups"]) == 6
    assert rep["increase_fraction"] < 0.05
    assert rep["pass"]
    # the kernel stays bounded in absolute terms as well
    assert rep["sup_through_1e-6"] < 10.0


def test_artifacts_and_manifest(tiny_run):
    out, manifest = tiny_run
    for rel in ["config.json", "trajectories/index.json", "solver_checks.json",
                "diagnostics.csv", "assumptions.json", "verify.json",
                "heat_bounds.csv", "heat.json", "summary.json",
                "figures/sheet_limit.png", "figures/residuals.png"]:
        assert os.path.exists(os.path.join(out, rel)), rel
        assert rel in manifest["files"], rel
    assert manifest["config_hash"] == tiny_config().config_hash()
    for stage in STAGES:
        assert manifest["stages"][stage]["seconds"] >= 0.0
    # checksums describe the bytes on disk
    import hashlib

    rel = "diagnostics.csv"
    digest = hashlib.sha256(open(os.path.join(out, rel), "rb").read()).hexdigest()
    assert manifest["files"][rel] == digest


def test_summary_structure(tiny_run):
    out, _ = tiny_run
    summary = json.load(open(os.path.join(out, "summary.json")))
    ids = [c["id"] for c in summary["criteria"]]
    assert ids == list(range(1, 12))
    by_name = {c["name"]: c for c in summary["criteria"]}
    assert by_name["kernel_identities"]["pass"]
    assert by_name["solver_exactness"]["pass"]
    assert by_name["route_equivalence"]["pass"]
    # two viscosity rungs cannot shrink the sheet gap fourfold; the summary
    # must say so rather than masking it
    assert not by_name["sheet_limit_l2"]["pass"]
    assert summary["all_pass"] == all(c["pass"] for c in summary["criteria"])


def test_staged_run_matches_monolithic_bytes(tiny_run, tmp_path):
    out_mono, _ = tiny_run
    out_staged = str(tmp_path / "staged")
    manifest = run_all(tiny_config(), out_staged, staged=True, workers=1)
    names = [rel for rel in manifest["files"] if rel.endswith((".json", ".csv"))]
    assert "summary.json" in names and "diagnostics.csv" in names
    for rel in names:
        a = open(os.path.join(out_mono, rel), "rb").read()
        b = open(os.path.join(out_staged, rel), "rb").read()
        assert a == b, f"{rel} differs between monolithic and staged runs"


def test_reloaded_trajectories_are_exact(tiny_run):
    out, _ = tiny_run
    cfg = tiny_config()
    trajs = load_run_trajectories(cfg, out, "test")
    assert [t.family_index for t in trajs] == list(cfg.family_indices)
    t = trajs[-1]
    assert t.mass == cfg.mass
    # modal state survives the round trip: sampled rows equal mode evals
    # (up to summation order in the matrix product)
    mid = t.times.size // 2
    row = t.initial_modes.decayed(t.nu, float(t.times[mid])).eval_u(t.grid.r)
    row[0] = 0.0
    scale = np.max(np.abs(t.u[mid]))
    assert np.max(np.abs(row - t.u[mid])) < 1e-13 * scale


def test_missing_input_names_file_and_stage(tmp_path):
    with pytest.raises(StageError, match=r"trajectories/index\.json.*simulate"):
        run(tiny_config(), str(tmp_path), stages=("diagnose",))


def test_failed_stage_leaves_partial_manifest(tmp_path):
    out = str(tmp_path)
    with pytest.raises(StageError):
        run(tiny_config(), out, stages=("report",))
    manifest = json.load(open(os.path.join(out, "run_manifest.json")))
    assert manifest["failed_stage"] == "report"
    assert manifest["stages"] == {}


def test_config_mismatch_rejected(tiny_run):
    out, _ = tiny_run
    other = ExperimentConfig.from_dict({**TINY, "horizon": 0.2})
    with pytest.raises(StageError, match="different configuration"):
        run(other, out, stages=("report",))


def test_verify_constant_zero_trajectory(tmp_path):
    from vortexlab.radial import RadialGrid
    from vortexlab.trajio import SampledTrajectory, save_trajectory_binary

    r = RadialGrid.uniform(257).r
    times = np.array([0.0, 0.05, 0.1])
    zeros = np.zeros((times.size, r.size))
    path = str(tmp_path / "zero.bin")
    save_trajectory_binary(
        SampledTrajectory(nu=1e-3, times=times, r=r, u=zeros, omega=zeros), path
    )
    cfg = ExperimentConfig.from_dict({**TINY, "verify": {"battery_size": 1}})
    doc = verify_trajectory_file(cfg, path)
    assert doc["steady"]
    assert doc["fields"][0]["R_vel"] == 0.0
    assert doc["fields"][0]["R_vort"] == 0.0


def test_kernel_csv_roundtrip(tmp_path):
    pairs = tmp_path / "pairs.csv"
    pairs.write_text(
        "x1,x2,y1,y2\n0.1,0.2,-0.3,0.4\n0.5,0.0,0.0,0.5\n-0.2,-0.2,0.3,0.1\n"
    )
    out = str(tmp_path / "kernels.csv")
    n = write_kernel_csv(str(pairs), out)
    assert n == 3
    lines = open(out).read().strip().split("\n")
    assert lines[0] == "x1,x2,y1,y2,G,K1,K2,H"
    from vortexlab.kernels import biot_savart_kernel, green_function

    row = [float(v) for v in lines[1].split(",")]
    x = np.array([row[:2]])
    y = np.array([row[2:4]])
    assert row[4] == pytest.approx(green_function(x, y)[0], abs=1e-15)
    assert np.allclose(row[5:7], biot_savart_kernel(x, y)[0], atol=1e-15)


def test_kernel_csv_rejects_bad_input(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(DomainError, match="x1,x2,y1,y2"):
        write_kernel_csv(str(bad), str(tmp_path / "out.csv"))
    with pytest.raises(DomainError, match="does not exist"):
        write_kernel_csv(str(tmp_path / "missing.csv"), str(tmp_path / "out.csv"))
