"""Family diagnostics: uniform vorticity control and convergence metrics.

Three properties of a viscous family decide whether its limit is a genuine
weak Euler solution: velocities stay bounded in L-infinity-in-time L^2 and
converge weak-*, interior vorticity stays bounded in L^1 uniformly, and the
vorticity maximal function sup_x int_{B(x,r)} |omega| decays as r -> 0
uniformly along the family.  This module measures all three on sampled
trajectories and aggregates them into a report with delimited output.

Everything here is read-only over trajectories.  Radial symmetry does real
work: the sup over ball centers x in a centered disk K only depends on |x|,
so center sweeps are one-dimensional, and the ball integral of a radial
density reduces to a 1D integral against the arc-overlap angle.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFitError, DomainError, ResolutionError
from .quadrature import gauss_panels, gauss_window, polar_grid
from .radial import VORTICITY, RadialField, Trajectory
from .trajio import atomic_write_bytes


@dataclass(frozen=True)
class CompactSubdomain:
    """Centered closed disk K = {|x| <= radius} strictly inside the domain."""

    radius: float

    def __post_init__(self):
        if not 0.0 < self.radius < 1.0:
            raise DomainError("compact subdomain needs 0 < radius < 1")

    @property
    def boundary_distance(self) -> float:
        return 1.0 - self.radius


def _abs_profile(source):
    """Normalize a vorticity source to (r -> |omega(r)|, seam radii)."""
    if isinstance(source, RadialField):
        if source.kind != VORTICITY:
            raise DomainError("expected a vorticity field")
        ev = source.evaluator
        if ev is None:
            grid, vals = source.grid.r, source.values
            return (lambda r: np.abs(np.interp(r, grid, vals))), tuple(source.seam_radii)
        return (lambda r: np.abs(np.asarray(ev(r), dtype=float))), tuple(source.seam_radii)
    if callable(source):
        return (lambda r: np.abs(np.asarray(source(r), dtype=float))), ()
    raise DomainError("vorticity source must be a RadialField or callable")


def ball_integral_abs(source, center_distance: float, r: float, *, seams=()) -> float:
    """int_{B(x;r) cap Omega} |omega(|y|)| dy for a radial omega, |x| = center_distance.

    The angular integral is the overlap angle between the circle of radius
    rho and the ball, so only a 1D quadrature in rho remains.  The angle
    varies like a square root at the two tangency radii |d - r| and d + r; a
    cosine substitution mapped onto exactly that interval turns both ends
    smooth, and the full-overlap plateau (rho < r - d) is a separate piece.
    `seams` (plus any the source itself declares) become panel edges.
    """
    d = float(center_distance)
    if d < 0.0 or r <= 0.0:
        raise DomainError("need center_distance >= 0 and r > 0")
    prof, own_seams = _abs_profile(source)
    seams = tuple(seams) + own_seams
    if d - r >= 1.0:
        return 0.0
    if d == 0.0:
        rho, w = gauss_panels(0.0, min(1.0, r), 12, order=8, splits=seams)
        return float(2.0 * np.pi * np.dot(w, prof(rho) * rho))
    total = 0.0
    lo_t = abs(d - r)
    if d < r and lo_t > 0.0:
        rho, w = gauss_panels(0.0, min(1.0, lo_t), 12, order=8, splits=seams)
        total += float(2.0 * np.pi * np.dot(w, prof(rho) * rho))
        if lo_t >= 1.0:
            return total
    c1 = 0.5 * (lo_t + d + r)
    c2 = 0.5 * (d + r - lo_t)
    s_hi = 1.0 if d + r <= 1.0 else float(np.arccos((c1 - 1.0) / c2) / np.pi)
    s_seams = tuple(
        float(np.arccos((c1 - q) / c2) / np.pi)
        for q in seams
        if lo_t < q < min(1.0, d + r)
    )
    s, ws = gauss_panels(0.0, s_hi, 12, order=8, splits=s_seams)
    rho = c1 - c2 * np.cos(np.pi * s)
    jac = c2 * np.pi * np.sin(np.pi * s)
    cosarg = (rho**2 + d**2 - r**2) / (2.0 * rho * d)
    angle = 2.0 * np.arccos(np.clip(cosarg, -1.0, 1.0))
    total += float(np.dot(ws, prof(rho) * angle * rho * jac))
    return total


def sup_ball_integral(source, K: CompactSubdomain, r: float, *, centers: int = 129,
                      seams=()) -> float:
    """Largest ball integral over a deterministic lattice of centers in K.

    For radial |omega| the sup over centers at fixed |x| is attained at any
    angle, so the lattice is a 1D sweep over |x| in [0, K.radius].
    """
    lattice = np.linspace(0.0, K.radius, centers)
    return max(ball_integral_abs(source, d, r, seams=seams) for d in lattice)


def covering_count(a: float, r: float) -> int:
    """Number of radius-r balls on a square lattice that cover the disk |x| <= a."""
    pitch = r / np.sqrt(2.0)
    span = int(np.ceil((a + pitch) / pitch))
    ii = np.arange(-span, span + 1)
    xx, yy = np.meshgrid(ii * pitch, ii * pitch)
    # keep lattice balls whose cell can touch K
    return int(np.count_nonzero(np.hypot(xx, yy) <= a + pitch))


# ---------------------------------------------------------------------------
# per-trajectory scalars


def l1_on_compact(source, K: CompactSubdomain) -> float:
    """sup over sampled times of int_K |omega| dx (single fields: one integral)."""
    if isinstance(source, Trajectory):
        vals = []
        for t in source.times:
            om = source.modes_at(t).eval_omega
            rho, w = gauss_panels(0.0, K.radius, 48, order=8)
            vals.append(2.0 * np.pi * float(np.dot(w, np.abs(om(rho)) * rho)))
        return max(vals)
    prof, seams = _abs_profile(source)
    rho, w = gauss_panels(0.0, K.radius, 48, order=8, splits=seams)
    return 2.0 * np.pi * float(np.dot(w, prof(rho) * rho))


@dataclass(frozen=True)
class MaximalFunctionCurve:
    """Time-integrated vorticity maximal function per family member and its sup.

    values[i, q] pairs family member i with radius radii[q]; radii decrease.
    `time_sup` records whether the time variable was integrated (the default)
    or supped (the stricter variant).
    """

    radii: np.ndarray
    family_indices: tuple
    values: np.ndarray
    time_sup: bool = False

    @property
    def sup_values(self) -> np.ndarray:
        return self.values.max(axis=0)

    def decay_ratio(self) -> float:
        """Sup-curve value at the smallest radius over the largest-radius value."""
        sup = self.sup_values
        big = sup[0]
        return float(sup[-1] / big) if big > 0.0 else 0.0


def maximal_function_curve(trajs, K: CompactSubdomain, radii, *, centers: int = 65,
                           fine_nodes: int = 2049, time_sup: bool = False) -> MaximalFunctionCurve:
    """Vorticity maximal-function curves over a trajectory family.

    Per member and radius: sweep ball centers over K, take the sup of the
    ball integral of |omega(t, .)|, then integrate over time by trapezoid on
    the trajectory's own samples (or take the time sup in the stricter mode).
    """
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or radii.size < 2 or not np.all(np.diff(radii) < 0):
        raise DomainError("radii must strictly decrease")
    rows = []
    indices = []
    fine = np.linspace(0.0, 1.0, fine_nodes)
    h = fine[1] - fine[0]
    if radii[-1] < 2.0 * h:
        raise ResolutionError(
            f"smallest radius {radii[-1]} is under two table spacings {2 * h}"
        )
    for traj in trajs:
        if radii[-1] < 2.0 * traj.grid.max_spacing:
            raise ResolutionError("smallest radius is under two grid spacings")
        per_time = np.empty((traj.times.size, radii.size))
        for j, t in enumerate(traj.times):
            table = np.abs(traj.modes_at(t).eval_omega(fine))
            prof = lambda r: np.interp(r, fine, table)
            for q, rad in enumerate(radii):
                per_time[j, q] = sup_ball_integral(prof, K, rad, centers=centers)
        if time_sup:
            rows.append(per_time.max(axis=0))
        else:
            rows.append(np.trapezoid(per_time, traj.times, axis=0))
        indices.append(traj.family_index)
    return MaximalFunctionCurve(
        radii=radii, family_indices=tuple(indices), values=np.array(rows),
        time_sup=time_sup,
    )


# ---------------------------------------------------------------------------
# weak-* and strong velocity metrics


@dataclass(frozen=True)
class WeakStarReport:
    pairing_residuals: np.ndarray
    strong_sup: float

    @property
    def pairing_max(self) -> float:
        return float(np.max(self.pairing_residuals)) if self.pairing_residuals.size else 0.0


def weak_star_l2_distance(traj: Trajectory, reference, battery, *,
                          ref_seams=(), time_order: int = 12) -> WeakStarReport:
    """Weak-* pairing residuals against a battery, plus the strong L^2 metric.

    Pairing residual for one battery field Psi: |int_0^T int (u - ref) . Psi|,
    with Psi(t,x) = tau(t) perp-grad b(x) from a space-time test function.
    The strong metric is the sup over sampled times of ||u(t) - ref||_{L^2}.
    """
    if not battery:
        raise DomainError("battery must be nonempty")
    # one polar grid serves every battery member; panel edges on ref seams
    pts, w2, rho, _ = polar_grid(0.0, 1.0, 24, 192, order=6, splits=tuple(ref_seams))
    uniq, inv = np.unique(rho, return_inverse=True)
    ref_u = np.asarray(reference(uniq), dtype=float)
    tang = np.empty_like(pts)
    rr = np.maximum(np.hypot(pts[:, 0], pts[:, 1]), 1e-300)
    tang[:, 0] = -pts[:, 1] / rr
    tang[:, 1] = pts[:, 0] / rr
    residuals = []
    for tf in battery:
        ts, tw = gauss_window(tf.t0, tf.t1, time_order)
        acc = 0.0
        for t, wt in zip(ts, tw):
            diff = traj.modes_at(t).eval_u(uniq) - ref_u
            psi = tf.perp_grad(t, pts)
            acc += wt * float(np.dot(w2 * diff[inv], np.einsum("ij,ij->i", tang, psi)))
        residuals.append(abs(acc))

    rho1, w1 = gauss_panels(0.0, 1.0, 48, order=8, splits=tuple(ref_seams))
    ref1 = np.asarray(reference(rho1), dtype=float)
    sup = 0.0
    for t in traj.times:
        diff = traj.modes_at(t).eval_u(rho1) - ref1
        sup = max(sup, float(2.0 * np.pi * np.dot(w1, diff**2 * rho1)))
    return WeakStarReport(pairing_residuals=np.array(residuals), strong_sup=np.sqrt(sup))


# ---------------------------------------------------------------------------
# log-decay fit for slightly spread measures


@dataclass(frozen=True)
class LogDecayFit:
    """Ball-integral data against the curve C |log r|^{-1/2}.

    `constant` is the least-squares C, `dominating_constant` the smallest C
    whose curve sits above every data point.  `dominates` asks the scale-free
    question: does the data decay across the radius span at least as fast as
    the log curve does?  A measure that keeps its mass in arbitrarily small
    balls fails that, which is what `concentration` flags.
    """

    constant: float
    dominating_constant: float
    residual: float
    dominates: bool
    concentration: bool
    values: np.ndarray
    radii: np.ndarray


def log_decay_check(measure, radii, K: CompactSubdomain, *, centers: int = 65,
                    slack: float = 1.05) -> LogDecayFit:
    """Fit sup-center ball integrals of |measure| against C |log r|^{-1/2}.

    Exactly zero data fits C = 0; tiny nonzero data (everything below 1e-14)
    cannot support a fit and raises instead.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.max() / radii.min() < 100.0:
        raise DomainError("radii must span at least two decades")
    order = np.argsort(-radii)
    radii = radii[order]
    vals = np.array([sup_ball_integral(measure, K, r, centers=centers) for r in radii])
    if np.all(vals == 0.0):
        return LogDecayFit(0.0, 0.0, 0.0, True, False, vals, radii)
    if np.all(vals < 1e-14):
        raise DegenerateFitError("ball integrals below 1e-14: nothing to fit")
    w = np.abs(np.log(radii)) ** -0.5
    c = float(np.dot(vals, w) / np.dot(w, w))
    c_dom = float(np.max(vals / w))
    residual = float(np.sqrt(np.sum((vals - c * w) ** 2) / np.sum(vals**2)))
    dominates = bool(vals[-1] / vals[0] <= (w[-1] / w[0]) * slack)
    return LogDecayFit(c, c_dom, residual, dominates, not dominates, vals, radii)


# ---------------------------------------------------------------------------
# report assembly and emission


@dataclass(frozen=True)
class FamilyDiagnostics:
    family_index: int
    nu: float
    l1_sup: float
    strong_sup: float
    pairing_residual: float
    maximal_values: np.ndarray


@dataclass(frozen=True)
class ConvergenceReport:
    radii: np.ndarray
    entries: tuple
    time_sup: bool = False

    def sup_maximal(self) -> np.ndarray:
        return np.max([e.maximal_values for e in self.entries], axis=0)


def build_convergence_report(trajs, K: CompactSubdomain, radii, reference, battery, *,
                             ref_seams=(), centers: int = 65,
                             time_sup: bool = False) -> ConvergenceReport:
    curve = maximal_function_curve(trajs, K, radii, centers=centers, time_sup=time_sup)
    entries = []
    for i, traj in enumerate(trajs):
        ws = weak_star_l2_distance(traj, reference, battery, ref_seams=ref_seams)
        entries.append(
            FamilyDiagnostics(
                family_index=traj.family_index,
                nu=traj.nu,
                l1_sup=l1_on_compact(traj, K),
                strong_sup=ws.strong_sup,
                pairing_residual=ws.pairing_max,
                maximal_values=curve.values[i],
            )
        )
    return ConvergenceReport(radii=np.asarray(radii, dtype=float), entries=tuple(entries),
                             time_sup=time_sup)


def write_diagnostics_csv(report: ConvergenceReport, path: str) -> None:
    lines = ["n,nu,r,maximal_value,l1_sup,l2_dist,pairing_residual"]
    for e in report.entries:
        for r, v in zip(report.radii, e.maximal_values):
            lines.append(
                "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g"
                % (e.family_index, e.nu, r, v, e.l1_sup, e.strong_sup, e.pairing_residual)
            )
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("ascii"))


def summarize_assumptions(report: ConvergenceReport, *, mass: float,
                          l1_factor: float = 4.0, l1_slack: float = 1.05,
                          decay_ratio: float = 0.2) -> dict:
    """Pass/fail per hypothesis, with the measured scalars alongside."""
    sup = report.sup_maximal()
    ratio = float(sup[-1] / sup[0]) if sup[0] > 0 else 0.0
    l1_worst = max(e.l1_sup for e in report.entries)
    pairings = [e.pairing_residual for e in report.entries]
    strong = [e.strong_sup for e in report.entries]
    return {
        "weak_star_convergence": {
            "pairing_residuals": pairings,
            "strong_l2_sups": strong,
            "pass": bool(strong[-1] < strong[0]) if len(strong) > 1 else True,
        },
        "interior_l1_bound": {
            "worst_l1": l1_worst,
            "allowed": l1_factor * mass * l1_slack,
            "pass": bool(l1_worst <= l1_factor * mass * l1_slack),
        },
        "maximal_function_decay": {
            "sup_curve": sup.tolist(),
            "radii": report.radii.tolist(),
            "small_over_large": ratio,
            "pass": bool(ratio <= decay_ratio),
        },
    }


def write_summary_json(summary: dict, path: str) -> None:
    atomic_write_bytes(path, (json.dumps(summary, indent=2, sort_keys=True) + "\n").encode("ascii"))
