"""Experiment configuration: one JSON document, strictly validated.

The schema is flat enough to read at a glance and strict enough to catch
typos: unknown keys anywhere in the document are collected and rejected in
one error, values are type- and range-checked, and the family indices must
pair one-to-one with the viscosity ladder (the experiment advances both
together).  Missing keys fall back to the documented defaults, so a config
file only needs the entries it overrides.

Schema (all keys optional, defaults in parentheses):

    schedule.nu0          first viscosity of the ladder        (1e-2)
    schedule.ratio        multiplicative step, in (0, 1)       (0.5)
    schedule.count        ladder length, >= 1                  (7)
    families.indices      annulus sharpness per rung           ([2,4,...,128])
    families.mass         total vorticity mass                 (2 pi)
    horizon               final time T                         (0.1)
    grids.radial_points   radial solver grid nodes             (4097)
    grids.heat_points     plane grid cells per axis            (768)
    grids.heat_radius     plane grid half-width, >= 1          (1.0)
    diagnostics.compact_radius   observation disk for vorticity   (0.7)
    diagnostics.maximal_radii    ball radii, strictly decreasing  ([0.1,...])
    diagnostics.centers          ball-center sweep size           (65)
    heat.eps              collar width                         (0.1)
    heat.compact_radius   observation disk, < 1 - 3 eps        (0.65)
    heat.time_count       uniform heat sample times            (8)
    verify.battery_size   random test fields per battery       (10)
    verify.seed           battery base seed                    (20260814)
    verify.deltas         near-diagonal split schedule         ([0.2,0.1,0.05,0.025])
    verify.probe_radius   radius every test bump must cross    (0.5)
    verify.cutoff         interior cutoff [inner, outer]       ([0.62, 0.8])
    tolerances.kernel_identity    kernel identity gate         (1e-10)
    tolerances.quadrature_target  weak-residual quadrature gate (1e-6)
    output_dir            artifact directory                   ("out")
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

from .errors import ConfigError

__all__ = ["ExperimentConfig", "default_config", "load_config", "DEFAULTS"]

DEFAULTS = {
    "schedule": {"nu0": 1e-2, "ratio": 0.5, "count": 7},
    "families": {"indices": [2, 4, 8, 16, 32, 64, 128], "mass": 2.0 * math.pi},
    "horizon": 0.1,
    "grids": {"radial_points": 4097, "heat_points": 768, "heat_radius": 1.0},
    "diagnostics": {
        "compact_radius": 0.7,
        "maximal_radii": [0.1, 0.05, 0.025, 0.0125],
        "centers": 65,
    },
    "heat": {"eps": 0.1, "compact_radius": 0.65, "time_count": 8},
    "verify": {
        "battery_size": 10,
        "seed": 20260814,
        "deltas": [0.2, 0.1, 0.05, 0.025],
        "probe_radius": 0.5,
        "cutoff": [0.62, 0.8],
    },
    "tolerances": {"kernel_identity": 1e-10, "quadrature_target": 1e-6},
    "output_dir": "out",
}


def _unknown_paths(data, reference, prefix=""):
    paths = []
    for key, value in data.items():
        if key not in reference:
            paths.append(prefix + str(key))
        elif isinstance(reference[key], dict):
            if isinstance(value, dict):
                paths.extend(_unknown_paths(value, reference[key], prefix + key + "."))
            # wrong-shaped values are caught by the type checks below
    return paths


def _merge(user, base):
    out = {}
    for key, default in base.items():
        if isinstance(default, dict):
            out[key] = _merge(user.get(key, {}) if isinstance(user.get(key, {}), dict) else {}, default)
        elif key in user:
            out[key] = user[key]
        else:
            out[key] = default
    return out


def _number(d, path, lo=None, hi=None, strict_lo=True):
    value = d
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{path} must be finite")
    if lo is not None and (value <= lo if strict_lo else value < lo):
        raise ConfigError(f"{path} must be {'>' if strict_lo else '>='} {lo}, got {value}")
    if hi is not None and value >= hi:
        raise ConfigError(f"{path} must be < {hi}, got {value}")
    return value


def _integer(d, path, lo):
    if isinstance(d, bool) or not isinstance(d, int):
        raise ConfigError(f"{path} must be an integer, got {d!r}")
    if d < lo:
        raise ConfigError(f"{path} must be at least {lo}, got {d}")
    return int(d)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment parameters; construct through from_dict or load_config."""

    nu0: float
    ratio: float
    count: int
    family_indices: tuple
    mass: float
    horizon: float
    radial_points: int
    heat_points: int
    heat_radius: float
    diag_compact_radius: float
    maximal_radii: tuple
    diag_centers: int
    heat_eps: float
    heat_compact_radius: float
    heat_time_count: int
    battery_size: int
    battery_seed: int
    deltas: tuple
    probe_radius: float
    cutoff_inner: float
    cutoff_outer: float
    kernel_identity_tol: float
    quadrature_target: float
    output_dir: str

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration root must be a JSON object")
        unknown = _unknown_paths(data, DEFAULTS)
        if unknown:
            raise ConfigError("unknown configuration keys: " + ", ".join(sorted(unknown)))
        d = _merge(data, DEFAULTS)

        count = _integer(d["schedule"]["count"], "schedule.count", 0)
        if count == 0:
            raise ConfigError("schedule.count is 0: the viscosity schedule is empty")
        nu0 = _number(d["schedule"]["nu0"], "schedule.nu0", lo=0.0)
        ratio = _number(d["schedule"]["ratio"], "schedule.ratio", lo=0.0, hi=1.0)

        indices = d["families"]["indices"]
        if not isinstance(indices, (list, tuple)) or not indices:
            raise ConfigError("families.indices must be a nonempty list")
        indices = tuple(_integer(i, "families.indices[]", 2) for i in indices)
        if len(indices) != count:
            raise ConfigError(
                f"families.indices has {len(indices)} entries but schedule.count is "
                f"{count}; the family and viscosity ladders advance together"
            )
        mass = _number(d["families"]["mass"], "families.mass", lo=0.0)
        horizon = _number(d["horizon"], "horizon", lo=0.0)

        radial_points = _integer(d["grids"]["radial_points"], "grids.radial_points", 257)
        heat_points = _integer(d["grids"]["heat_points"], "grids.heat_points", 64)
        heat_radius = _number(d["grids"]["heat_radius"], "grids.heat_radius", lo=1.0,
                              strict_lo=False)

        diag_radius = _number(d["diagnostics"]["compact_radius"],
                              "diagnostics.compact_radius", lo=0.0, hi=1.0)
        radii = d["diagnostics"]["maximal_radii"]
        if not isinstance(radii, (list, tuple)) or len(radii) < 2:
            raise ConfigError("diagnostics.maximal_radii needs at least two radii")
        radii = tuple(_number(r, "diagnostics.maximal_radii[]", lo=0.0, hi=1.0) for r in radii)
        if any(b >= a for a, b in zip(radii[:-1], radii[1:])):
            raise ConfigError("diagnostics.maximal_radii must strictly decrease")
        diag_centers = _integer(d["diagnostics"]["centers"], "diagnostics.centers", 9)

        eps = _number(d["heat"]["eps"], "heat.eps", lo=0.0, hi=0.5)
        heat_radius_k = _number(d["heat"]["compact_radius"], "heat.compact_radius",
                                lo=0.0, hi=1.0)
        if heat_radius_k >= 1.0 - 3.0 * eps:
            raise ConfigError(
                f"heat.compact_radius {heat_radius_k} must stay below 1 - 3*eps = "
                f"{1.0 - 3.0 * eps}"
            )
        heat_times = _integer(d["heat"]["time_count"], "heat.time_count", 2)

        battery = _integer(d["verify"]["battery_size"], "verify.battery_size", 1)
        seed = _integer(d["verify"]["seed"], "verify.seed", 0)
        deltas = d["verify"]["deltas"]
        if not isinstance(deltas, (list, tuple)) or len(deltas) < 3:
            raise ConfigError("verify.deltas needs at least three entries to extrapolate")
        deltas = tuple(_number(x, "verify.deltas[]", lo=0.0, hi=1.0) for x in deltas)
        if any(b >= a for a, b in zip(deltas[:-1], deltas[1:])):
            raise ConfigError("verify.deltas must strictly decrease")
        probe = _number(d["verify"]["probe_radius"], "verify.probe_radius", lo=0.0, hi=1.0)
        cutoff = d["verify"]["cutoff"]
        if not isinstance(cutoff, (list, tuple)) or len(cutoff) != 2:
            raise ConfigError("verify.cutoff must be [inner, outer]")
        c_in = _number(cutoff[0], "verify.cutoff[0]", lo=0.0, hi=1.0)
        c_out = _number(cutoff[1], "verify.cutoff[1]", lo=0.0, hi=1.0)
        if c_in >= c_out:
            raise ConfigError("verify.cutoff must satisfy inner < outer")

        kid = _number(d["tolerances"]["kernel_identity"], "tolerances.kernel_identity", lo=0.0)
        qt = _number(d["tolerances"]["quadrature_target"], "tolerances.quadrature_target", lo=0.0)

        out_dir = d["output_dir"]
        if not isinstance(out_dir, str) or not out_dir:
            raise ConfigError("output_dir must be a nonempty string")

        return cls(
            nu0=nu0, ratio=ratio, count=count, family_indices=indices, mass=mass,
            horizon=horizon, radial_points=radial_points, heat_points=heat_points,
            heat_radius=heat_radius, diag_compact_radius=diag_radius,
            maximal_radii=radii, diag_centers=diag_centers, heat_eps=eps,
            heat_compact_radius=heat_radius_k, heat_time_count=heat_times,
            battery_size=battery, battery_seed=seed, deltas=deltas,
            probe_radius=probe, cutoff_inner=c_in, cutoff_outer=c_out,
            kernel_identity_tol=kid, quadrature_target=qt, output_dir=out_dir,
        )

    def viscosities(self) -> tuple:
        return tuple(self.nu0 * self.ratio**k for k in range(self.count))

    def pairs(self) -> tuple:
        """(family index, viscosity) rungs, advancing together."""
        return tuple(zip(self.family_indices, self.viscosities()))

    def heat_times(self) -> tuple:
        return tuple(self.horizon * (k + 1) / self.heat_time_count
                     for k in range(self.heat_time_count))

    def as_dict(self) -> dict:
        return {
            "schedule": {"nu0": self.nu0, "ratio": self.ratio, "count": self.count},
            "families": {"indices": list(self.family_indices), "mass": self.mass},
            "horizon": self.horizon,
            "grids": {
                "radial_points": self.radial_points,
                "heat_points": self.heat_points,
                "heat_radius": self.heat_radius,
            },
            "diagnostics": {
                "compact_radius": self.diag_compact_radius,
                "maximal_radii": list(self.maximal_radii),
                "centers": self.diag_centers,
            },
            "heat": {
                "eps": self.heat_eps,
                "compact_radius": self.heat_compact_radius,
                "time_count": self.heat_time_count,
            },
            "verify": {
                "battery_size": self.battery_size,
                "seed": self.battery_seed,
                "deltas": list(self.deltas),
                "probe_radius": self.probe_radius,
                "cutoff": [self.cutoff_inner, self.cutoff_outer],
            },
            "tolerances": {
                "kernel_identity": self.kernel_identity_tol,
                "quadrature_target": self.quadrature_target,
            },
            "output_dir": self.output_dir,
        }

    def canonical_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("ascii")).hexdigest()


def default_config() -> ExperimentConfig:
    return ExperimentConfig.from_dict({})


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read configuration file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"configuration file {path} is not valid JSON: {exc}") from None
    return ExperimentConfig.from_dict(data)
