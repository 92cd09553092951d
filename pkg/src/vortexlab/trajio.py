"""Trajectory persistence: long-format CSV and a compact binary layout.

Both formats carry the same payload: the viscosity, the time samples, the
radial grid, and the (times, radii) swirl and vorticity arrays.  Writes are
atomic (temp file in the target directory, then rename) and contain nothing
nondeterministic, so re-serializing a loaded trajectory reproduces the file
byte for byte.

CSV: header line `t,r,u_theta,omega`, then one row per (time, radius) pair,
time-major, every float printed with %.17g so parsing returns the exact
binary64 value.

Binary (little-endian throughout):
    magic    8 bytes  b"VORTXLAB"
    version  uint32   currently 1
    M        uint32   radial node count
    J        uint32   time sample count
    nu       float64  viscosity
    r        M float64
    t        J float64
    u        J*M float64, row-major (time-major)
    omega    J*M float64, row-major
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import TrajectoryFormatError
from .radial import SWIRL, ModeExpansion, RadialField, RadialGrid, Trajectory, project_modes

MAGIC = b"VORTXLAB"
VERSION = 1
_HEADER = np.dtype(
    [("magic", "S8"), ("version", "<u4"), ("m", "<u4"), ("j", "<u4"), ("nu", "<f8")]
)


@dataclass(frozen=True)
class SampledTrajectory:
    """What the on-disk formats hold: samples only, no basis information."""

    nu: float
    times: np.ndarray
    r: np.ndarray
    u: np.ndarray
    omega: np.ndarray

    def to_trajectory(self, m: int, **kwargs) -> Trajectory:
        """Rebuild an exactly evolvable trajectory by re-projecting t = 0."""
        grid = RadialGrid(self.r)
        modes = project_modes(RadialField(grid, self.u[0], SWIRL), m, **kwargs)
        return Trajectory(
            nu=self.nu, times=self.times, grid=grid,
            u=self.u, omega=self.omega, initial_modes=modes,
        )


def _payload(traj) -> SampledTrajectory:
    if isinstance(traj, SampledTrajectory):
        return traj
    return SampledTrajectory(
        nu=traj.nu, times=traj.times, r=traj.grid.r, u=traj.u, omega=traj.omega
    )


def atomic_write_bytes(path: str, data: bytes) -> None:
    """Write via a sibling temp file and rename, so readers never see partials."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_trajectory_binary(traj, path: str) -> None:
    p = _payload(traj)
    head = np.zeros(1, dtype=_HEADER)
    head["magic"] = MAGIC
    head["version"] = VERSION
    head["m"] = p.r.size
    head["j"] = p.times.size
    head["nu"] = p.nu
    blob = b"".join(
        [
            head.tobytes(),
            np.ascontiguousarray(p.r, dtype="<f8").tobytes(),
            np.ascontiguousarray(p.times, dtype="<f8").tobytes(),
            np.ascontiguousarray(p.u, dtype="<f8").tobytes(),
            np.ascontiguousarray(p.omega, dtype="<f8").tobytes(),
        ]
    )
    atomic_write_bytes(path, blob)


def load_trajectory_binary(path: str) -> SampledTrajectory:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.itemsize:
        raise TrajectoryFormatError("file shorter than the header")
    head = np.frombuffer(raw[: _HEADER.itemsize], dtype=_HEADER)[0]
    if bytes(head["magic"]) != MAGIC:
        raise TrajectoryFormatError(f"bad magic {bytes(head['magic'])!r}")
    if int(head["version"]) != VERSION:
        raise TrajectoryFormatError(f"unsupported version {int(head['version'])}")
    m, j = int(head["m"]), int(head["j"])
    need = _HEADER.itemsize + 8 * (m + j + 2 * j * m)
    if len(raw) != need:
        raise TrajectoryFormatError(f"expected {need} bytes, file has {len(raw)}")
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.itemsize)
    r, t = body[:m], body[m:m + j]
    u = body[m + j:m + j + j * m].reshape(j, m)
    om = body[m + j + j * m:].reshape(j, m)
    return SampledTrajectory(nu=float(head["nu"]), times=t.copy(), r=r.copy(),
                             u=u.copy(), omega=om.copy())


def save_trajectory_csv(traj, path: str) -> None:
    p = _payload(traj)
    lines = ["t,r,u_theta,omega"]
    for jj in range(p.times.size):
        t = p.times[jj]
        for ii in range(p.r.size):
            lines.append(
                "%.17g,%.17g,%.17g,%.17g" % (t, p.r[ii], p.u[jj, ii], p.omega[jj, ii])
            )
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("ascii"))


def load_trajectory_csv(path: str, nu: float = float("nan")) -> SampledTrajectory:
    """Parse the long-format CSV.  The CSV does not carry nu; pass it if known."""
    with open(path, "rb") as fh:
        text = fh.read().decode("ascii")
    lines = text.splitlines()
    if not lines or lines[0] != "t,r,u_theta,omega":
        raise TrajectoryFormatError("missing t,r,u_theta,omega header line")
    try:
        data = np.array([[float(c) for c in ln.split(",")] for ln in lines[1:]])
    except ValueError as exc:
        raise TrajectoryFormatError(f"unparseable row: {exc}") from None
    if data.ndim != 2 or data.shape[1] != 4:
        raise TrajectoryFormatError("every row needs exactly 4 columns")
    times, first_seen = [], {}
    for t in data[:, 0]:
        if t not in first_seen:
            first_seen[t] = len(times)
            times.append(t)
    times = np.array(times)
    j = times.size
    if data.shape[0] % j != 0:
        raise TrajectoryFormatError("row count is not a multiple of the time count")
    m = data.shape[0] // j
    r = data[:m, 1]
    if not np.array_equal(data[:, 1].reshape(j, m), np.broadcast_to(r, (j, m))):
        raise TrajectoryFormatError("radial grid differs between time blocks")
    u = data[:, 2].reshape(j, m)
    om = data[:, 3].reshape(j, m)
    return SampledTrajectory(nu=nu, times=times, r=r.copy(), u=u, omega=om)
