"""Staged experiment pipeline with persisted, checksummed artifacts.

Five stages, each runnable on its own against the artifacts a prior stage
left in the output directory:

    simulate   trajectories/traj_nnn.bin, trajectories/index.json,
               solver_checks.json
    diagnose   diagnostics.csv, assumptions.json
    verify     verify.json
    heat       heat_bounds.csv, heat.json
    report     summary.json, figures/*.png

A monolithic `run` calls the same stage functions in order, so a full run
and a sequence of single-stage runs write identical bytes by construction.
All delimited and JSON artifacts are deterministic for a fixed config; the
manifest is the one file that is not (it records wall-clock per stage).

The trajectory index persists the modal coefficients next to the sampled
binaries.  Reloading through the index reproduces the solver state exactly
instead of re-fitting modes to samples, which keeps staged runs bit-equal
to monolithic ones.
"""
from __future__ import annotations

import concurrent.futures
import csv
import hashlib
import io
import json
import math
import os
import time
from dataclasses import replace

import numpy as np

from .bessel import j1_zeros
from .bumps import make_cutoff, make_test_function
from .config import ExperimentConfig
from .diagnostics import (
    CompactSubdomain,
    build_convergence_report,
    summarize_assumptions,
    write_diagnostics_csv,
)
from .errors import DomainError, StageError
from .heat import PlaneGrid, bounds_table, free_part_report, write_bounds_csv
from .kernels import green_function
from .quadrature import polar_grid
from .radial import (
    SHEET_RADIUS,
    SWIRL,
    VORTICITY,
    ModeExpansion,
    RadialField,
    RadialGrid,
    Trajectory,
    build_sheet_family,
    default_mode_count,
    evolve,
    project_modes,
    sheet_limit_swirl,
    time_samples,
)
from .trajio import (
    atomic_write_bytes,
    load_trajectory_binary,
    load_trajectory_csv,
    save_trajectory_binary,
)
from .weakform import (
    generate_battery,
    symmetrized_bump_kernel,
    velocity_weak_residual,
    verify_pair,
    vorticity_interior_residual,
)

__all__ = [
    "STAGES",
    "run",
    "stage_simulate",
    "stage_diagnose",
    "stage_verify",
    "stage_heat",
    "stage_report",
    "kernel_identity_report",
    "kernel_plateau_report",
    "verify_trajectory_file",
    "write_kernel_csv",
    "load_run_trajectories",
]

STAGES = ("simulate", "diagnose", "verify", "heat", "report")

ARTIFACT_VERSION = 1

MANIFEST_NAME = "run_manifest.json"

# artifact -> stage that writes it, for missing-input error messages
_PRODUCER = {
    "config.json": "run",
    "trajectories/index.json": "simulate",
    "solver_checks.json": "simulate",
    "diagnostics.csv": "diagnose",
    "assumptions.json": "diagnose",
    "verify.json": "verify",
    "heat_bounds.csv": "heat",
    "heat.json": "heat",
    "summary.json": "report",
}

# alternate cutoffs for the cutoff-independence sweep, alongside the
# configured one; plateaus all clear the widest battery bump (radius 0.6)
SWEEP_CUTOFFS = ((0.7, 0.85), (0.75, 0.97))


def _producer_of(relpath: str) -> str:
    if relpath in _PRODUCER:
        return _PRODUCER[relpath]
    if relpath.startswith("trajectories/"):
        return "simulate"
    if relpath.startswith("figures/"):
        return "report"
    return "run"


def _require(stage: str, out_dir: str, relpath: str) -> str:
    path = os.path.join(out_dir, relpath)
    if not os.path.exists(path):
        raise StageError(
            f"{stage}: missing input {relpath} (produced by the "
            f"{_producer_of(relpath)} stage)"
        )
    return path


def _write_json(path: str, obj) -> None:
    atomic_write_bytes(path, (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("ascii"))


def _read_json(path: str):
    with open(path, "r", encoding="ascii") as fh:
        return json.load(fh)


def _sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _map_jobs(fn, items, workers: int):
    """Order-preserving map, threaded when workers > 1."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _slope_or_none(nus, values):
    """Least-squares log-log slope, None when the data cannot support one."""
    x, y = [], []
    for nu, v in zip(nus, values):
        if v > 0.0 and math.isfinite(v):
            x.append(math.log(nu))
            y.append(math.log(v))
    if len(x) < 2:
        return None
    return float(np.polyfit(np.array(x), np.array(y), 1)[0])


# ---------------------------------------------------------------------------
# run-scale kernel checks (also reused by the acceptance suite)


def _random_disk_points(rng, n, rmax=0.999):
    r = rmax * np.sqrt(rng.uniform(size=n))
    th = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return np.column_stack([r * np.cos(th), r * np.sin(th)])


def _reference_bump():
    """Fixed spatial bump for kernel checks: center (0.15, -0.1), width 0.5."""
    return make_test_function((0.15, -0.1), 0.5, 0.25, 0.75, 1.0)


def kernel_identity_report(seed: int = 0, pairs: int = 1000) -> dict:
    """Green kernel sanity: symmetry, boundary trace, and the delta identity.

    The delta identity integrates G(x, y0) against the Laplacian of a fixed
    interior bump over a polar grid centered on y0 (the Jacobian absorbs the
    log singularity) and compares with the bump value at y0, at two
    refinement levels.  The sign follows this kernel's convention, where G
    is the logarithm pair and Delta G is plus the point mass.
    """
    rng = np.random.default_rng(seed)
    x = _random_disk_points(rng, pairs)
    y = _random_disk_points(rng, pairs)
    symmetry = float(np.max(np.abs(green_function(x, y) - green_function(y, x))))

    th = rng.uniform(0.0, 2.0 * np.pi, size=pairs)
    xb = np.column_stack([np.cos(th), np.sin(th)])
    boundary = float(np.max(np.abs(green_function(xb, _random_disk_points(rng, pairs)))))

    tf = _reference_bump()
    y0 = np.array([0.25, 0.05])
    d0 = float(np.hypot(*(y0 - tf.center)))
    cover = tf.width + d0

    def level_value(lv: int) -> float:
        splits = tuple(s for s in (tf.width - d0, tf.width + d0) if 0.0 < s < cover)
        pts, w, _, _ = polar_grid(0.0, cover, 64 << lv, 96 << lv, order=6,
                                  center=tuple(y0), splits=splits)
        lap = tf.laplacian_b(pts)
        keep = lap != 0.0
        g = green_function(pts[keep], np.broadcast_to(y0, pts[keep].shape))
        return float(np.dot(w[keep], g * lap[keep]))

    target = float(tf.b(y0))
    coarse, fine = level_value(0), level_value(1)
    return {
        "pairs": pairs,
        "symmetry_max": symmetry,
        "boundary_max": boundary,
        "delta_identity": {
            "target": target,
            "coarse": coarse,
            "refined": fine,
            "refined_error": abs(fine - target),
        },
        "pass": bool(symmetry < 1e-12 and boundary < 1e-10 and abs(fine - target) < 1e-5),
    }


def kernel_plateau_report(chi=None, *, seed: int = 0, per_decade: int = 3000) -> dict:
    """Boundedness of the symmetrized kernel down to pair gap 1e-6.

    Samples the kernel on pairs whose gap is log-uniform within each decade
    from 1e-1 down to 1e-6, plus an independent far-pair bucket, and asks
    that the running sup grows by under 5% over the last two decades.
    """
    if chi is None:
        chi = make_cutoff(0.62, 0.8)
    tf = _reference_bump()
    rng = np.random.default_rng(seed)
    a = chi.a_out

    def draw(num):
        r = a * np.sqrt(rng.uniform(size=num))
        th = rng.uniform(0.0, 2.0 * np.pi, size=num)
        return np.column_stack([r * np.cos(th), r * np.sin(th)])

    far_sup = float(np.max(np.abs(symmetrized_bump_kernel(tf, draw(per_decade), draw(per_decade)))))
    decade_sups = []
    for expo in range(1, 7):
        x = draw(per_decade)
        gaps = 10.0 ** rng.uniform(-float(expo) - 1.0, -float(expo), per_decade)
        ang = rng.uniform(0.0, 2.0 * np.pi, per_decade)
        yy = x + gaps[:, None] * np.column_stack([np.cos(ang), np.sin(ang)])
        keep = np.hypot(yy[:, 0], yy[:, 1]) < 1.0
        decade_sups.append(float(np.max(np.abs(symmetrized_bump_kernel(tf, x[keep], yy[keep])))))

    running = np.maximum.accumulate([far_sup] + decade_sups)
    sup_to_1e4 = float(running[-3])
    sup_to_1e6 = float(running[-1])
    increase = sup_to_1e6 / sup_to_1e4 - 1.0
    return {
        "far_sup": far_sup,
        "decade_sups": decade_sups,
        "sup_through_1e-4": sup_to_1e4,
        "sup_through_1e-6": sup_to_1e6,
        "increase_fraction": increase,
        "pass": bool(increase < 0.05),
    }


# ---------------------------------------------------------------------------
# simulate


def _solver_metrics(traj: Trajectory) -> dict:
    energies = [traj.l2_norm_sq(float(t)) for t in traj.times]
    nonincreasing = all(b <= a * (1.0 + 1e-12) for a, b in zip(energies[:-1], energies[1:]))
    noslip = float(np.max(np.abs(traj.u[1:, -1])))
    ident = abs(traj.energy_identity_residual(float(traj.times[-1]))) / energies[0]
    # finite-difference curl rows against the mode-space vorticity
    mid = traj.times.size // 2
    om_modes = traj.eval_omega(float(traj.times[mid]), traj.grid.r)
    scale = float(np.max(np.abs(om_modes)))
    curl_gap = float(np.max(np.abs(traj.omega[mid] - om_modes))) / scale
    return {
        "n": traj.family_index,
        "nu": traj.nu,
        "initial_energy": energies[0],
        "final_energy": energies[-1],
        "energy_nonincreasing": bool(nonincreasing),
        "noslip_sup": noslip,
        "energy_identity_rel": float(ident),
        "curl_consistency_rel": curl_gap,
        "recon_error": float(traj.initial_modes.recon_error),
    }


def _single_mode_check(cfg: ExperimentConfig) -> dict:
    """Lowest-mode decay against the closed form, on its own small grid."""
    grid = RadialGrid.uniform(1025)
    modes = ModeExpansion(zeros=j1_zeros(1), coeffs=np.array([1.0]))
    times = time_samples(cfg.horizon)
    traj = evolve(modes, cfg.nu0, times, grid)
    lam1 = float(modes.zeros[0])
    from scipy.special import j1 as _j1

    profile = _j1(lam1 * grid.r)
    scale = float(np.max(np.abs(profile)))
    err = 0.0
    for j, t in enumerate(times):
        exact = math.exp(-cfg.nu0 * lam1**2 * float(t)) * profile
        err = max(err, float(np.max(np.abs(traj.u[j] - exact))) / scale)
    return {"nu": cfg.nu0, "lambda1": lam1, "max_rel_error": err}


def stage_simulate(cfg: ExperimentConfig, out_dir: str, workers: int = 1) -> list:
    traj_dir = os.path.join(out_dir, "trajectories")
    os.makedirs(traj_dir, exist_ok=True)
    grid = RadialGrid.uniform(cfg.radial_points)
    times = time_samples(cfg.horizon)

    def one(pair):
        n, nu = pair
        fam = build_sheet_family(n, grid, mass=cfg.mass)
        modes = project_modes(fam.swirl_field(), default_mode_count(n))
        traj = evolve(modes, nu, times, grid, family_index=n, mass=cfg.mass)
        relpath = f"trajectories/traj_{n:03d}.bin"
        save_trajectory_binary(traj, os.path.join(out_dir, relpath))
        entry = {
            "n": n,
            "nu": nu,
            "mass": cfg.mass,
            "mode_count": modes.m,
            "recon_error": float(modes.recon_error),
            "coeffs": [float(c) for c in modes.coeffs],
            "file": relpath,
        }
        return entry, _solver_metrics(traj), relpath

    results = _map_jobs(one, cfg.pairs(), workers)
    entries = [r[0] for r in results]
    metrics = [r[1] for r in results]
    files = [r[2] for r in results]

    index = {
        "grid_points": cfg.radial_points,
        "horizon": cfg.horizon,
        "entries": entries,
    }
    _write_json(os.path.join(out_dir, "trajectories/index.json"), index)
    checks = {"single_mode": _single_mode_check(cfg), "trajectories": metrics}
    _write_json(os.path.join(out_dir, "solver_checks.json"), checks)
    return files + ["trajectories/index.json", "solver_checks.json"]


def load_run_trajectories(cfg: ExperimentConfig, out_dir: str, stage: str) -> list:
    """Rebuild the simulated trajectories exactly from the persisted index."""
    index = _read_json(_require(stage, out_dir, "trajectories/index.json"))
    trajs = []
    for entry in index["entries"]:
        path = _require(stage, out_dir, entry["file"])
        sampled = load_trajectory_binary(path)
        modes = ModeExpansion(
            zeros=j1_zeros(entry["mode_count"]),
            coeffs=np.asarray(entry["coeffs"], dtype=float),
            recon_error=entry["recon_error"],
        )
        trajs.append(
            Trajectory(
                nu=sampled.nu, times=sampled.times, grid=RadialGrid(sampled.r),
                u=sampled.u, omega=sampled.omega, initial_modes=modes,
                family_index=entry["n"], mass=entry["mass"],
            )
        )
    return trajs


# ---------------------------------------------------------------------------
# diagnose


def _battery(cfg: ExperimentConfig):
    window = (0.2 * cfg.horizon, 0.8 * cfg.horizon)
    return generate_battery(
        cfg.battery_size, cfg.battery_seed,
        probe_radius=cfg.probe_radius, window=window, horizon=cfg.horizon,
    )


def stage_diagnose(cfg: ExperimentConfig, out_dir: str, workers: int = 1) -> list:
    trajs = load_run_trajectories(cfg, out_dir, "diagnose")
    K = CompactSubdomain(cfg.diag_compact_radius)
    # the diagnostics battery holds the raw space-time bumps
    bumps = [field.phi for field in _battery(cfg)]
    report = build_convergence_report(
        trajs, K, cfg.maximal_radii, sheet_limit_swirl, bumps,
        ref_seams=(SHEET_RADIUS,), centers=cfg.diag_centers,
    )
    write_diagnostics_csv(report, os.path.join(out_dir, "diagnostics.csv"))
    summary = summarize_assumptions(report, mass=cfg.mass)
    summary["config_hash"] = cfg.config_hash()
    _write_json(os.path.join(out_dir, "assumptions.json"), summary)
    return ["diagnostics.csv", "assumptions.json"]


# ---------------------------------------------------------------------------
# verify


def _representative_family(cfg: ExperimentConfig):
    n = cfg.family_indices[1] if len(cfg.family_indices) > 1 else cfg.family_indices[0]
    grid = RadialGrid.uniform(cfg.radial_points)
    return build_sheet_family(n, grid, mass=cfg.mass)


def stage_verify(cfg: ExperimentConfig, out_dir: str, workers: int = 1) -> list:
    chi = make_cutoff(cfg.cutoff_inner, cfg.cutoff_outer)
    battery = _battery(cfg)
    fam = _representative_family(cfg)
    u_rep, om_rep = fam.swirl_field(), fam.omega_field()

    def one_field(field):
        return verify_pair(u_rep, om_rep, chi, field, level=0).as_dict()

    fields = _map_jobs(one_field, battery, workers)

    # velocity-route refinement on the distributional limit, one halving
    seeds, coarse_v, fine_v = [], [], []
    for field in battery:
        seeds.append(field.seed)
        coarse_v.append(velocity_weak_residual(sheet_limit_swirl, field,
                                               seams=(SHEET_RADIUS,), level=0))
        fine_v.append(velocity_weak_residual(sheet_limit_swirl, field,
                                             seams=(SHEET_RADIUS,), level=1))
    vel_ratios = [abs(c) / abs(f) if f != 0.0 else float("inf")
                  for c, f in zip(coarse_v, fine_v)]

    # vorticity-route refinement on the mollified representative
    probe = battery[0]
    w0 = vorticity_interior_residual(om_rep, probe.phi, chi, level=0)
    w1 = vorticity_interior_residual(om_rep, probe.phi, chi, level=1)
    vort_ratio = abs(w0) / abs(w1) if w1 != 0.0 else float("inf")

    # cutoff-independence sweep at the base level
    cutoffs = [(cfg.cutoff_inner, cfg.cutoff_outer), *SWEEP_CUTOFFS]
    r_vel_probe = fields[0]["R_vel"]
    sweep_vals, sweep_tols = [], []
    for a_in, a_out in cutoffs:
        val = vorticity_interior_residual(om_rep, probe.phi, make_cutoff(a_in, a_out), level=0)
        sweep_vals.append(float(val))
        sweep_tols.append(abs(r_vel_probe + val))
    spread = max(sweep_vals) - min(sweep_vals)

    doc = {
        "config_hash": cfg.config_hash(),
        "representative_family": fam.index,
        "kernel_identities": kernel_identity_report(cfg.battery_seed),
        "kernel_sup_plateau": kernel_plateau_report(chi, seed=cfg.battery_seed),
        "fields": fields,
        "limit_refinement": {
            "seeds": seeds,
            "coarse": [float(v) for v in coarse_v],
            "fine": [float(v) for v in fine_v],
            "ratios": [float(r) for r in vel_ratios],
            "min_ratio": float(min(vel_ratios)),
        },
        "vorticity_refinement": {
            "field_seed": probe.seed,
            "coarse": float(w0),
            "fine": float(w1),
            "ratio": float(vort_ratio),
            "quadrature_gap": abs(float(w1) - float(w0)),
        },
        "cutoff_sweep": {
            "cutoffs": [list(c) for c in cutoffs],
            "r_vort": sweep_vals,
            "tolerances": sweep_tols,
            "spread": float(spread),
        },
    }
    _write_json(os.path.join(out_dir, "verify.json"), doc)
    return ["verify.json"]


def verify_trajectory_file(cfg: ExperimentConfig, path: str) -> dict:
    """Residual reports for a stored trajectory, against the config battery.

    Constant-in-time samples are verified through the steady route (the
    residuals agree analytically and the quadrature cost drops by the time
    node count).  Time-varying CSV input has no viscosity column, so only
    binary files can be re-evolved.
    """
    sampled = load_trajectory_binary(path) if path.endswith(".bin") else load_trajectory_csv(path)
    chi = make_cutoff(cfg.cutoff_inner, cfg.cutoff_outer)
    battery = _battery(cfg)
    constant = bool(np.all(sampled.u == sampled.u[0]) and np.all(sampled.omega == sampled.omega[0]))
    if constant:
        grid = RadialGrid(sampled.r)
        u = RadialField(grid, sampled.u[0], SWIRL)
        om = RadialField(grid, sampled.omega[0], VORTICITY)
    elif not math.isfinite(sampled.nu):
        raise DomainError(
            "trajectory CSV carries no viscosity; verify needs a binary file "
            "or constant-in-time samples"
        )
    else:
        m = min(256, max(64, sampled.r.size // 16))
        u = om = sampled.to_trajectory(m)
    reports = [verify_pair(u, om, chi, field, level=0) for field in battery]
    nu = sampled.nu if math.isfinite(sampled.nu) else None
    return {
        "trajectory": os.path.basename(path),
        "nu": nu,
        "steady": constant,
        "fields": [r.as_dict() for r in reports],
    }


# ---------------------------------------------------------------------------
# heat


def stage_heat(cfg: ExperimentConfig, out_dir: str, workers: int = 1) -> list:
    trajs = load_run_trajectories(cfg, out_dir, "heat")
    K = CompactSubdomain(cfg.heat_compact_radius)
    checks = _map_jobs(lambda t: bounds_table([t], cfg.heat_eps, K)[0], trajs, workers)
    write_bounds_csv(checks, os.path.join(out_dir, "heat_bounds.csv"))

    grid = PlaneGrid.cover(cfg.heat_radius, cfg.heat_points)
    times = cfg.heat_times()
    radial = RadialGrid.uniform(cfg.radial_points)

    def one_free(pair):
        n, nu = pair
        fam = build_sheet_family(n, radial, mass=cfg.mass)
        return free_part_report(fam, nu, grid, times, eps=cfg.heat_eps)

    free = _map_jobs(one_free, cfg.pairs(), workers)

    nus = [c.nu for c in checks]
    doc = {
        "config_hash": cfg.config_hash(),
        "eps": cfg.heat_eps,
        "observation_radius": cfg.heat_compact_radius,
        "bounds": [c.as_dict() for c in checks],
        "bound_slope_lap": _slope_or_none(nus, [c.bound_from_laplacian for c in checks]),
        "bound_slope_grad": _slope_or_none(nus, [c.bound_from_gradient for c in checks]),
        "measured_slope_lap": _slope_or_none(nus, [c.sup_from_laplacian for c in checks]),
        "measured_slope_grad": _slope_or_none(nus, [c.sup_from_gradient for c in checks]),
        "free": [r.as_dict() for r in free],
    }
    _write_json(os.path.join(out_dir, "heat.json"), doc)
    return ["heat_bounds.csv", "heat.json"]


# ---------------------------------------------------------------------------
# report


def _criterion(cid, name, passed, details):
    return {"id": cid, "name": name, "pass": bool(passed), "details": details}


def _build_criteria(cfg: ExperimentConfig, solver, assumptions, verify, heat) -> list:
    crits = []

    kid = verify["kernel_identities"]
    crits.append(_criterion(1, "kernel_identities", kid["pass"], kid))

    plat = verify["kernel_sup_plateau"]
    crits.append(_criterion(2, "kernel_sup_plateau", plat["pass"], plat))

    single = solver["single_mode"]["max_rel_error"]
    energy_ok = all(t["energy_nonincreasing"] for t in solver["trajectories"])
    noslip = max(t["noslip_sup"] for t in solver["trajectories"])
    crits.append(_criterion(
        3, "solver_exactness",
        single <= 1e-8 and energy_ok and noslip < 1e-10,
        {"single_mode_rel_error": single, "energy_nonincreasing": energy_ok,
         "noslip_sup": noslip},
    ))

    strong = assumptions["weak_star_convergence"]["strong_l2_sups"]
    decreasing = all(b < a for a, b in zip(strong[:-1], strong[1:]))
    shrunk = strong[-1] < 0.25 * strong[0]
    crits.append(_criterion(
        4, "sheet_limit_l2", decreasing and shrunk,
        {"strong_l2_sups": strong, "strictly_decreasing": decreasing,
         "final_over_initial": strong[-1] / strong[0]},
    ))

    l1 = assumptions["interior_l1_bound"]
    crits.append(_criterion(5, "interior_l1_bound", l1["pass"], l1))

    dec = assumptions["maximal_function_decay"]
    crits.append(_criterion(6, "maximal_function_decay", dec["pass"], dec))

    below = all(b["pass"] for b in heat["bounds"])
    slopes = (heat["bound_slope_lap"], heat["bound_slope_grad"])
    slopes_ok = all(s is not None and abs(s - 1.0) <= 0.1 for s in slopes)
    crits.append(_criterion(
        7, "collar_bounds", below and slopes_ok,
        {"all_below_bounds": below, "bound_slopes": list(slopes),
         "measured_slopes": [heat["measured_slope_lap"], heat["measured_slope_grad"]],
         "slope_source": "exact_bounds"},
    ))

    free_ok = all(f["pass"] for f in heat["free"])
    crits.append(_criterion(
        8, "free_part_signs", free_ok,
        {"min_values": [f["min_value"] for f in heat["free"]],
         "l1_nonincreasing": [f["l1_nonincreasing"] for f in heat["free"]]},
    ))

    vel = verify["limit_refinement"]
    vort = verify["vorticity_refinement"]
    crits.append(_criterion(
        9, "residual_refinement",
        vel["min_ratio"] >= 3.5 and vort["ratio"] >= 3.5,
        {"velocity_min_ratio": vel["min_ratio"], "vorticity_ratio": vort["ratio"]},
    ))

    sums = [abs(f["R_vel"] + f["R_vort"]) for f in verify["fields"]]
    tol = max(cfg.quadrature_target, vort["quadrature_gap"])
    crits.append(_criterion(
        10, "route_equivalence", max(sums) <= 2.0 * tol,
        {"max_abs_sum": max(sums), "tolerance": tol, "sums": sums},
    ))

    sweep = verify["cutoff_sweep"]
    tol11 = max(max(sweep["tolerances"]), cfg.quadrature_target)
    crits.append(_criterion(
        11, "cutoff_independence", sweep["spread"] <= 2.0 * tol11,
        {"spread": sweep["spread"], "tolerance": tol11, "r_vort": sweep["r_vort"]},
    ))
    return crits


def _render_figures(cfg: ExperimentConfig, out_dir: str, assumptions, verify, heat) -> list:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig_dir = os.path.join(out_dir, "figures")
    os.makedirs(fig_dir, exist_ok=True)
    written = []

    def save(fig, name):
        buf = io.BytesIO()
        fig.savefig(buf, format="png", dpi=120, metadata={"Software": None})
        plt.close(fig)
        rel = f"figures/{name}"
        atomic_write_bytes(os.path.join(out_dir, rel), buf.getvalue())
        written.append(rel)

    nus = [nu for _, nu in cfg.pairs()]

    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    strong = assumptions["weak_star_convergence"]["strong_l2_sups"]
    ax.loglog(nus, strong, "o-")
    ax.set_xlabel("viscosity")
    ax.set_ylabel("sup-in-time L2 distance to the limit swirl")
    ax.set_title("vanishing-viscosity approach to the sheet limit")
    fig.tight_layout()
    save(fig, "sheet_limit.png")

    rows = {}
    with open(os.path.join(out_dir, "diagnostics.csv"), newline="") as fh:
        for row in csv.DictReader(fh):
            rows.setdefault(int(row["n"]), []).append(
                (float(row["r"]), float(row["maximal_value"])))
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    for n, pts in sorted(rows.items()):
        pts = sorted(pts)
        ax.loglog([p[0] for p in pts], [max(p[1], 1e-300) for p in pts], "o-",
                  label=f"n={n}")
    ax.set_xlabel("ball radius")
    ax.set_ylabel("time-integrated maximal function")
    ax.legend(fontsize=7)
    fig.tight_layout()
    save(fig, "maximal_decay.png")

    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    b = heat["bounds"]
    ax.loglog([e["nu"] for e in b], [e["bound_A"] for e in b], "-", label="bound A")
    ax.loglog([e["nu"] for e in b], [e["bound_B"] for e in b], "-", label="bound B")
    ax.loglog([e["nu"] for e in b], [max(e["sup_A"], 1e-300) for e in b], "o", label="sup A")
    ax.loglog([e["nu"] for e in b], [max(e["sup_B"], 1e-300) for e in b], "s", label="sup B")
    ax.set_xlabel("viscosity")
    ax.set_ylabel("collar term size")
    ax.legend(fontsize=7)
    fig.tight_layout()
    save(fig, "collar_bounds.png")

    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    seeds = [f["field_seed"] for f in verify["fields"]]
    idx = np.arange(len(seeds))
    ax.semilogy(idx, [max(abs(f["R_vel"]), 1e-300) for f in verify["fields"]], "o",
                label="|velocity residual|")
    ax.semilogy(idx, [max(abs(f["R_vort"]), 1e-300) for f in verify["fields"]], "s",
                label="|vorticity residual|")
    ax.semilogy(idx, [max(abs(f["R_vel"] + f["R_vort"]), 1e-300) for f in verify["fields"]],
                "x", label="|sum|")
    ax.set_xticks(idx)
    ax.set_xticklabels([str(s) for s in seeds], fontsize=7)
    ax.set_xlabel("test-field seed")
    ax.legend(fontsize=7)
    fig.tight_layout()
    save(fig, "residuals.png")
    return written


def stage_report(cfg: ExperimentConfig, out_dir: str, workers: int = 1) -> list:
    solver = _read_json(_require("report", out_dir, "solver_checks.json"))
    assumptions = _read_json(_require("report", out_dir, "assumptions.json"))
    verify = _read_json(_require("report", out_dir, "verify.json"))
    heat = _read_json(_require("report", out_dir, "heat.json"))
    _require("report", out_dir, "diagnostics.csv")

    criteria = _build_criteria(cfg, solver, assumptions, verify, heat)
    summary = {
        "config_hash": cfg.config_hash(),
        "criteria": criteria,
        "all_pass": all(c["pass"] for c in criteria),
    }
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    figures = _render_figures(cfg, out_dir, assumptions, verify, heat)
    return ["summary.json"] + figures


# ---------------------------------------------------------------------------
# orchestration


_STAGE_FUNCS = {
    "simulate": stage_simulate,
    "diagnose": stage_diagnose,
    "verify": stage_verify,
    "heat": stage_heat,
    "report": stage_report,
}


def _manifest_path(out_dir: str) -> str:
    return os.path.join(out_dir, MANIFEST_NAME)


def _load_or_init_manifest(cfg: ExperimentConfig, out_dir: str, stage: str) -> dict:
    path = _manifest_path(out_dir)
    if os.path.exists(path):
        manifest = _read_json(path)
        if manifest.get("config_hash") != cfg.config_hash():
            raise StageError(
                f"{stage}: output directory {out_dir} holds artifacts for a different "
                f"configuration (manifest hash {manifest.get('config_hash', '?')[:12]}, "
                f"current {cfg.config_hash()[:12]}); use a fresh directory"
            )
        return manifest
    return {
        "config_hash": cfg.config_hash(),
        "artifact_version": ARTIFACT_VERSION,
        "stages": {},
        "files": {},
    }


def run(cfg: ExperimentConfig, out_dir: str, *, workers: int = 1, stages=None) -> dict:
    """Execute the requested stages (all five by default) and write the manifest.

    Every stage failure is re-raised as a stage-tagged error after the
    partial manifest has been written, so completed work stays inventoried.
    """
    names = STAGES if stages is None else tuple(stages)
    for name in names:
        if name not in _STAGE_FUNCS:
            raise StageError(
                f"run: unknown stage {name!r} (choose from {', '.join(STAGES)})"
            )
    os.makedirs(out_dir, exist_ok=True)
    manifest = _load_or_init_manifest(cfg, out_dir, names[0])
    _write_json(os.path.join(out_dir, "config.json"), cfg.as_dict())
    manifest["files"]["config.json"] = _sha256_file(os.path.join(out_dir, "config.json"))

    for name in names:
        start = time.perf_counter()
        try:
            files = _STAGE_FUNCS[name](cfg, out_dir, workers)
        except StageError:
            manifest["failed_stage"] = name
            _write_json(_manifest_path(out_dir), manifest)
            raise
        except Exception as exc:
            manifest["failed_stage"] = name
            _write_json(_manifest_path(out_dir), manifest)
            raise StageError(f"{name}: {exc}") from exc
        manifest.pop("failed_stage", None)
        manifest["stages"][name] = {
            "seconds": round(time.perf_counter() - start, 3),
            "files": files,
        }
        for rel in files:
            manifest["files"][rel] = _sha256_file(os.path.join(out_dir, rel))
        _write_json(_manifest_path(out_dir), manifest)
    return manifest


# ---------------------------------------------------------------------------
# kernel table utility (the pass-through subcommand)

KERNEL_CSV_HEADER = "x1,x2,y1,y2,G,K1,K2,H"


def write_kernel_csv(pairs_path: str, out_path: str) -> int:
    """Evaluate G, the Biot-Savart kernel, and H on a CSV pair list.

    Input columns x1,x2,y1,y2 (header required).  H uses the fixed reference
    bump of the kernel checks, evaluated at its mid-time where the time
    factor is 1 by construction.  Returns the number of rows written.
    """
    from .kernels import biot_savart_kernel, symmetrized_advection_kernel

    tf = _reference_bump()
    if not os.path.exists(pairs_path):
        raise DomainError(f"pair list {pairs_path} does not exist")
    with open(pairs_path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"x1", "x2", "y1", "y2"}
        if reader.fieldnames is None or not need.issubset(reader.fieldnames):
            raise DomainError(
                f"pair list {pairs_path} must have columns x1,x2,y1,y2 "
                f"(found {reader.fieldnames})"
            )
        rows = [(float(r["x1"]), float(r["x2"]), float(r["y1"]), float(r["y2"]))
                for r in reader]
    if not rows:
        raise DomainError(f"pair list {pairs_path} has no rows")
    arr = np.asarray(rows, dtype=float)
    x, y = arr[:, :2], arr[:, 2:]
    g = green_function(x, y)
    k = biot_savart_kernel(x, y)
    h = symmetrized_advection_kernel(tf, 0.5 * (tf.t0 + tf.t1), x, y)
    lines = [KERNEL_CSV_HEADER]
    for i in range(arr.shape[0]):
        lines.append("%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g" % (
            arr[i, 0], arr[i, 1], arr[i, 2], arr[i, 3],
            g[i], k[i, 0], k[i, 1], h[i],
        ))
    atomic_write_bytes(out_path, ("\n".join(lines) + "\n").encode("ascii"))
    return arr.shape[0]
