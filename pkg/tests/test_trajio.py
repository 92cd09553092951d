"""On-disk trajectory formats: exactness, byte stability, error paths."""

import numpy as np
import pytest

from vortexlab.bessel import j1_zeros
from vortexlab.errors import TrajectoryFormatError
from vortexlab.radial import ModeExpansion, RadialGrid, evolve
from vortexlab.trajio import (
    MAGIC,
    load_trajectory_binary,
    load_trajectory_csv,
    save_trajectory_binary,
    save_trajectory_csv,
)


@pytest.fixture(scope="module")
def traj():
    ex = ModeExpansion(j1_zeros(5), np.array([0.8, -0.3, 0.1, 0.05, -0.02]))
    return evolve(ex, 0.004, np.array([0.0, 0.01, 0.05, 0.1]), RadialGrid.uniform(129))


def test_binary_round_trip_is_exact(tmp_path, traj):
    path = str(tmp_path / "traj.bin")
    save_trajectory_binary(traj, path)
    back = load_trajectory_binary(path)
    assert back.nu == traj.nu
    assert np.array_equal(back.times, traj.times)
    assert np.array_equal(back.r, traj.grid.r)
    assert np.array_equal(back.u, traj.u)
    assert np.array_equal(back.omega, traj.omega)


def test_binary_reserialization_is_byte_identical(tmp_path, traj):
    p1, p2 = str(tmp_path / "a.bin"), str(tmp_path / "b.bin")
    save_trajectory_binary(traj, p1)
    save_trajectory_binary(load_trajectory_binary(p1), p2)
    assert open(p1, "rb").read() == open(p2, "rb").read()


def test_csv_round_trip_is_exact(tmp_path, traj):
    path = str(tmp_path / "traj.csv")
    save_trajectory_csv(traj, path)
    back = load_trajectory_csv(path, nu=traj.nu)
    assert np.array_equal(back.times, traj.times)
    assert np.array_equal(back.r, traj.grid.r)
    assert np.array_equal(back.u, traj.u)
    assert np.array_equal(back.omega, traj.omega)


def test_csv_reserialization_is_byte_identical(tmp_path, traj):
    p1, p2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    save_trajectory_csv(traj, p1)
    save_trajectory_csv(load_trajectory_csv(p1), p2)
    assert open(p1, "rb").read() == open(p2, "rb").read()


def test_csv_header_and_shape(tmp_path, traj):
    path = str(tmp_path / "traj.csv")
    save_trajectory_csv(traj, path)
    lines = open(path).read().splitlines()
    assert lines[0] == "t,r,u_theta,omega"
    assert len(lines) == 1 + traj.times.size * traj.grid.m


def test_binary_rejects_bad_magic(tmp_path, traj):
    path = str(tmp_path / "traj.bin")
    save_trajectory_binary(traj, path)
    raw = bytearray(open(path, "rb").read())
    raw[:8] = b"NOTMAGIC"
    open(path, "wb").write(bytes(raw))
    with pytest.raises(TrajectoryFormatError):
        load_trajectory_binary(path)


def test_binary_rejects_truncation(tmp_path, traj):
    path = str(tmp_path / "traj.bin")
    save_trajectory_binary(traj, path)
    raw = open(path, "rb").read()
    open(path, "wb").write(raw[:-16])
    with pytest.raises(TrajectoryFormatError):
        load_trajectory_binary(path)
    open(path, "wb").write(raw[:4])
    with pytest.raises(TrajectoryFormatError):
        load_trajectory_binary(path)


def test_binary_rejects_unknown_version(tmp_path, traj):
    path = str(tmp_path / "traj.bin")
    save_trajectory_binary(traj, path)
    raw = bytearray(open(path, "rb").read())
    raw[8:12] = (99).to_bytes(4, "little")
    open(path, "wb").write(bytes(raw))
    with pytest.raises(TrajectoryFormatError):
        load_trajectory_binary(path)


def test_csv_rejects_bad_rows(tmp_path):
    path = str(tmp_path / "bad.csv")
    open(path, "w").write("t,r,u_theta,omega\n0.0,0.5,oops,1.0\n")
    with pytest.raises(TrajectoryFormatError):
        load_trajectory_csv(path)
    open(path, "w").write("wrong,header\n")
    with pytest.raises(TrajectoryFormatError):
        load_trajectory_csv(path)


def test_reprojection_recovers_modes(tmp_path):
    # projection from samples carries the O(h^2) interpolant error, so use a
    # grid fine enough for the 1e-6 claim (129 nodes would give ~6e-5)
    ex = ModeExpansion(j1_zeros(5), np.array([0.8, -0.3, 0.1, 0.05, -0.02]))
    traj = evolve(ex, 0.004, np.array([0.0, 0.05, 0.1]), RadialGrid.uniform(2049))
    path = str(tmp_path / "traj.bin")
    save_trajectory_binary(traj, path)
    rebuilt = load_trajectory_binary(path).to_trajectory(m=5)
    orig = traj.initial_modes.coeffs
    assert np.max(np.abs(rebuilt.initial_modes.coeffs - orig)) < 1e-6
    # and the rebuilt trajectory evolves the same way
    r_chk = np.linspace(0.1, 0.9, 7)
    assert np.allclose(rebuilt.eval_u(0.07, r_chk), traj.eval_u(0.07, r_chk), atol=1e-6)


def test_binary_magic_is_eight_bytes():
    assert len(MAGIC) == 8
