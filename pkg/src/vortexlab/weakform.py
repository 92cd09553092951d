"""Weak-form residuals for the velocity and interior vorticity formulations.

Two residuals are evaluated against compactly supported divergence-free test
fields Phi = perp-grad(phi):

  R_vel  = int int dt(Phi) . u  +  int int grad(Phi) : u (x) u
  R_vort = int int dt(phi) w    +  pair term against the symmetrized bounded
           kernel H(x,y) = [K(x,y).grad phi(x) + K(y,x).grad phi(y)] / 2
           restricted by an interior cutoff chi, plus the far-field term
           int int K(x,y).grad phi(x) chi(x) w(x) (1-chi(y)) w(y)

For any swirl/vorticity pair related by the disk Biot-Savart law these sum to
zero identically (integration by parts, no dynamics involved), which is the
cross-check the battery runs.  The pair term is computed with the near-diagonal
split rho_delta = rho(|x-y|/delta): the far part for a schedule of deltas, then
Richardson extrapolation to delta -> 0 on the observed order; the near part
comes back as a byproduct and feeds the concentration bound check.

Quadrature is composite midpoint in radius (order-1 Gauss panels) times
uniform midpoint in angle, so spatial refinement is honestly O(h^2) and a grid
halving should shrink residuals by about 4.  Radial symmetry of the sources is
exploited only where declared: the inner integral of the pair term collapses
to the circulation formula, everything else stays a full tensor product capped
by a kernel-evaluation budget.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bumps import (
    BoundaryCutoff,
    Cutoff,
    TestFunction,
    make_mollifier,
    make_test_function,
    smooth_step,
)
from .diagnostics import CompactSubdomain, sup_ball_integral
from .errors import DomainError, QuadratureError, SeparationError, SupportError
from .kernels import biot_savart_kernel
from .quadrature import gauss_panels, gauss_window, polar_grid
from .radial import SWIRL, VORTICITY, RadialField, RadialGrid, Trajectory

__all__ = [
    "DEFAULT_DELTAS",
    "KERNEL_EVAL_BUDGET",
    "DivFreeTestField",
    "generate_test_field",
    "generate_battery",
    "velocity_weak_residual",
    "DeltaSplit",
    "VorticityResidualDetails",
    "vorticity_interior_residual",
    "symmetrized_bump_kernel",
    "sampled_kernel_sup",
    "near_diagonal_bound_report",
    "decompose_interior_boundary",
    "boundary_cross_pairings",
    "radial_pairing",
    "WeakResidualReport",
    "verify_pair",
    "verify_battery",
]

DEFAULT_DELTAS = (0.2, 0.1, 0.05, 0.025)

# hard cap on kernel-like evaluations per residual; quadratures that would
# exceed it raise instead of silently coarsening
KERNEL_EVAL_BUDGET = 10**8

_FINE_R = np.linspace(0.0, 1.0, 8193)


# ---------------------------------------------------------------------------
# test fields


@dataclass(frozen=True)
class DivFreeTestField:
    """Phi = perp-grad(phi) for a separable space-time bump phi.

    Divergence-free holds analytically: the trace of grad(Phi) assembles to
    H12 - H21 of the (symmetric) spatial Hessian, which cancels bitwise.
    """

    phi: TestFunction
    seed: int | None = None

    def Phi(self, t, x):
        return self.phi.perp_grad(t, x)

    def dt_Phi(self, t, x):
        return np.asarray(self.phi.dtau(t))[..., None] * self.phi.perp_grad_b(x)

    def grad_Phi(self, t, x):
        return self.phi.grad_perp_grad(t, x)

    @property
    def support_radius(self) -> float:
        return self.phi.support_radius


def generate_test_field(
    seed: int,
    *,
    support_center=(0.0, 0.0),
    support_radius: float = 0.6,
    window=(0.02, 0.08),
    horizon: float = 0.1,
    probe_radius: float | None = None,
) -> DivFreeTestField:
    """Draw a random bump test field inside the given space-time support.

    The spatial bump center and width are randomized so that its closed
    support ball stays inside the support disk; the time bump occupies a
    randomized sub-interval of the window.

    `probe_radius` constrains the placement so the bump ball straddles the
    circle of that radius about the origin (with a 20%-of-width margin).
    Refinement studies use it to avoid drawing fields that never meet the
    flow, whose residuals are identically zero at every resolution.  Only
    makes sense with `support_center` at the origin.
    """
    cx, cy = float(support_center[0]), float(support_center[1])
    if math.hypot(cx, cy) + support_radius >= 1.0:
        raise SupportError(
            f"support disk B(({cx}, {cy}), {support_radius}) must be strictly inside the unit disk"
        )
    t_lo, t_hi = float(window[0]), float(window[1])
    if not (0.0 < t_lo < t_hi < horizon):
        raise SupportError(f"time window ({t_lo}, {t_hi}) must sit strictly inside (0, {horizon})")
    rng = np.random.default_rng(seed)
    width = support_radius * rng.uniform(0.35, 0.6)
    free = support_radius - width
    if probe_radius is None:
        # area-uniform placement of the bump center within the shrunken disk
        dist = free * math.sqrt(rng.uniform(0.0, 1.0))
    else:
        lo = max(0.0, probe_radius - 0.8 * width)
        hi = min(free, probe_radius + 0.8 * width)
        if hi < lo:
            raise SupportError(
                f"no placement inside B(0, {support_radius}) lets a width-{width:.3f} bump "
                f"straddle r = {probe_radius}"
            )
        dist = rng.uniform(lo, hi)
    ang = rng.uniform(0.0, 2.0 * math.pi)
    center = (cx + dist * math.cos(ang), cy + dist * math.sin(ang))
    gap = t_hi - t_lo
    t0 = t_lo + gap * rng.uniform(0.0, 0.2)
    t1 = t_hi - gap * rng.uniform(0.0, 0.2)
    phi = make_test_function(center, width, t0, t1, horizon)
    return DivFreeTestField(phi=phi, seed=int(seed))


def generate_battery(size: int, seed: int, **kwargs) -> list:
    """Battery of `size` fields with logged per-field seeds seed, seed+1, ..."""
    if size < 1:
        raise DomainError(f"battery size must be positive, got {size}")
    return [generate_test_field(seed + i, **kwargs) for i in range(size)]


# ---------------------------------------------------------------------------
# source normalization: anything radial becomes t -> profile(r)

class _SteadySource:
    steady = True

    def __init__(self, prof, seams, support):
        self._prof = prof
        self.seams = tuple(seams)
        self.support = support

    def profile(self, t):
        return self._prof


class _TrajectorySource:
    """Per-time interpolation tables over a fine shared radial grid.

    Mode evaluation costs a Bessel call per mode per point; building one table
    per quadrature time node and interpolating keeps the per-node cost flat
    no matter how many 2D nodes the tensor quadratures throw at it.
    """

    steady = False

    def __init__(self, traj: Trajectory, which: str):
        self._traj = traj
        self._which = which
        self.seams = ()
        self.support = (0.0, 1.0)
        self._cache = {}

    def profile(self, t):
        key = float(t)
        if key not in self._cache:
            if self._which == SWIRL:
                table = self._traj.eval_u(key, _FINE_R)
            else:
                table = self._traj.eval_omega(key, _FINE_R)
            self._cache[key] = lambda r, tab=table: np.interp(r, _FINE_R, tab)
        return self._cache[key]


def _support_of(field: RadialField):
    vals = np.abs(np.asarray(field(_FINE_R), dtype=float))
    nz = np.flatnonzero(vals > 0.0)
    if nz.size == 0:
        return (0.0, 0.0)
    lo = _FINE_R[max(nz[0] - 1, 0)]
    hi = _FINE_R[min(nz[-1] + 1, _FINE_R.size - 1)]
    return (float(lo), float(hi))


def _swirl_source(u, seams):
    if isinstance(u, Trajectory):
        return _TrajectorySource(u, SWIRL)
    if isinstance(u, RadialField):
        if u.kind != SWIRL:
            raise DomainError("velocity residual expects a swirl field, got vorticity")
        return _SteadySource(u, u.seam_radii if seams is None else seams, (0.0, 1.0))
    if callable(u):
        return _SteadySource(u, () if seams is None else seams, (0.0, 1.0))
    raise DomainError(f"unsupported velocity source {type(u).__name__}")


def _omega_source(omega, seams=None):
    if isinstance(omega, Trajectory):
        return _TrajectorySource(omega, VORTICITY)
    if isinstance(omega, RadialField):
        if omega.kind != VORTICITY:
            raise DomainError("vorticity residual expects a vorticity field, got swirl")
        return _SteadySource(omega, omega.seam_radii if seams is None else seams, _support_of(omega))
    if callable(omega):
        return _SteadySource(omega, () if seams is None else seams, (0.0, 1.0))
    raise DomainError(f"unsupported vorticity source {type(omega).__name__}")


# ---------------------------------------------------------------------------
# velocity-form residual


def _unit_tangent(pts):
    r = np.hypot(pts[..., 0], pts[..., 1])
    safe = np.where(r > 1e-14, r, 1.0)
    e = np.empty_like(pts)
    e[..., 0] = -pts[..., 1] / safe
    e[..., 1] = pts[..., 0] / safe
    e[r <= 1e-14] = 0.0
    return e, r


def _space_tensors(tf: TestFunction, pts):
    """Time-free pieces of the test field at the nodes: perp-grad b and d_j(perp grad b)_i."""
    pgb = tf.perp_grad_b(pts)
    H = tf.hess_b(pts)
    G = np.empty_like(H)
    G[..., 0, 0] = -H[..., 1, 0]
    G[..., 0, 1] = -H[..., 1, 1]
    G[..., 1, 0] = H[..., 0, 0]
    G[..., 1, 1] = H[..., 0, 1]
    return pgb, G


def velocity_weak_residual(
    u,
    field,
    *,
    seams=None,
    level: int = 0,
    tol: float | None = None,
    max_level: int = 5,
    time_nodes: int = 16,
) -> float:
    """Residual of the velocity weak form against one test field.

    With `tol` unset, evaluates once at the requested refinement level (64 *
    2^level radial midpoint panels, 96 * 2^level angles).  With `tol` set,
    refines by halving until two successive levels agree within `tol`.

    The time term is integrated even for steady input: the antiderivative of
    the time bump's derivative over its full support is zero analytically, and
    the quadrature is made to say so rather than being short-circuited.
    """
    tf = field.phi if isinstance(field, DivFreeTestField) else field
    src = _swirl_source(u, seams)

    def one(lv: int) -> float:
        pts, w, rho, _ = polar_grid(0.0, 1.0, 64 << lv, 96 << lv, order=1, splits=src.seams)
        d2 = (pts[:, 0] - tf.center[0]) ** 2 + (pts[:, 1] - tf.center[1]) ** 2
        keep = d2 < tf.width**2  # integrand is exactly zero outside the bump ball
        pts_k, w_k, rho_k = pts[keep], w[keep], rho[keep]
        pgb, G = _space_tensors(tf, pts_k)
        e, _ = _unit_tangent(pts_k)
        lin = w_k * np.einsum("ni,ni->n", pgb, e)
        quad = w_k * np.einsum("ni,nij,nj->n", e, G, e)
        tn, tw = gauss_window(tf.t0, tf.t1, time_nodes)
        tau = tf.tau(tn)
        dtau = tf.dtau(tn)
        if src.steady:
            U = np.asarray(src.profile(None)(rho_k), dtype=float)
            return float(np.dot(tw, dtau) * np.dot(lin, U) + np.dot(tw, tau) * np.dot(quad, U**2))
        total = 0.0
        for i in range(tn.size):
            U = np.asarray(src.profile(tn[i])(rho_k), dtype=float)
            total += tw[i] * (dtau[i] * np.dot(lin, U) + tau[i] * np.dot(quad, U**2))
        return float(total)

    if tol is None:
        return one(level)
    value = one(level)
    for lv in range(level + 1, max_level + 1):
        finer = one(lv)
        if abs(finer - value) < tol:
            return finer
        value = finer
    raise QuadratureError(
        f"velocity residual did not converge to {tol} within {max_level} refinement levels"
    )


# ---------------------------------------------------------------------------
# interior vorticity residual


def _rho_profile(q):
    """Near-diagonal weight rho: 1 on [0, 1/2], 0 from 1 on, smooth between."""
    return 1.0 - smooth_step(2.0 * np.asarray(q, dtype=float) - 1.0)


def _cumulative_mass(prof, seams, targets):
    """targets -> int_0^target prof(s) s ds, one order-12 Gauss panel per gap."""
    targets = np.asarray(targets, dtype=float)
    rs = np.unique(targets[targets > 0.0])
    if rs.size == 0:
        return lambda q: np.zeros_like(np.asarray(q, dtype=float))
    edges = np.unique(np.concatenate([[0.0], rs, [s for s in seams if 0.0 < s < rs[-1]]]))
    xg, wg = np.polynomial.legendre.leggauss(12)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (hi - lo) * xg[None, :] + 0.5 * (hi + lo)
    wts = 0.5 * (hi - lo) * wg[None, :]
    gaps = np.sum(wts * nodes * np.asarray(prof(nodes), dtype=float), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(gaps)])

    def lookup(q):
        q = np.asarray(q, dtype=float)
        idx = np.searchsorted(edges, q)
        return cum[np.clip(idx, 0, cum.size - 1)]

    return lookup


def _swirl_of_profile(prof, seams, radii):
    """Circulation-formula velocity of a radial source, evaluated at |x| = radii."""
    cum = _cumulative_mass(prof, seams, radii)(radii)
    out = np.zeros_like(radii)
    m = radii > 1e-14
    out[m] = cum[m] / radii[m]
    return out


def _near_patch(pts, weight_prof, delta, n_s_panels, n_alpha, chunk=1024):
    """L(x, delta) = int rho_delta(|x-y|) K(x, y) m(y) dy over the patch B(x, delta).

    Local polar coordinates cancel the free-kernel singularity analytically
    (K_free(x, x+s a) s = -perp(a)/2pi); the image part is regular and kept
    whole.  Returns an (N, 2) array of patch velocities.
    """
    s, sw = gauss_panels(0.0, delta, n_s_panels, order=4, splits=(0.5 * delta,))
    alpha = (np.arange(n_alpha) + 0.5) * (2.0 * np.pi / n_alpha)
    aw = 2.0 * np.pi / n_alpha
    ahat = np.stack([np.cos(alpha), np.sin(alpha)], axis=-1)
    perp_ahat = np.stack([-ahat[:, 1], ahat[:, 0]], axis=-1)
    srho = sw * _rho_profile(s / delta)
    out = np.empty((pts.shape[0], 2))
    for i0 in range(0, pts.shape[0], chunk):
        x = pts[i0 : i0 + chunk]
        y = x[:, None, None, :] + s[None, :, None, None] * ahat[None, None, :, :]
        ry2 = y[..., 0] ** 2 + y[..., 1] ** 2
        if np.any(ry2 >= 1.0):
            raise DomainError("near-diagonal patch leaves the disk; shrink delta or the cutoff")
        m = np.asarray(weight_prof(np.sqrt(ry2)), dtype=float)
        rx2 = x[:, None, None, 0] ** 2 + x[:, None, None, 1] ** 2
        xdoty = x[:, None, None, 0] * y[..., 0] + x[:, None, None, 1] * y[..., 1]
        s2 = rx2 * ry2 - 2.0 * xdoty + 1.0  # squared distance |x| |y - x/|x|^2|
        img = x[:, None, None, :] * ry2[..., None] - y
        perp_img = np.empty_like(img)
        perp_img[..., 0] = -img[..., 1]
        perp_img[..., 1] = img[..., 0]
        # K(x, x + s a) * s: the free part loses its 1/s against the patch radius
        kernel_s = -perp_ahat[None, None, :, :] / (2.0 * np.pi) - (
            s[None, :, None, None] * perp_img
        ) / (2.0 * np.pi * s2[..., None])
        contrib = (srho[None, :, None] * aw * m)[..., None] * kernel_s
        out[i0 : i0 + chunk] = contrib.sum(axis=(1, 2))
    return out


@dataclass(frozen=True)
class DeltaSplit:
    """Near-diagonal split bookkeeping: far-part values per delta and the limit."""

    deltas: tuple
    far_values: tuple
    near_values: tuple
    observed_order: float
    extrapolated: float


@dataclass(frozen=True)
class VorticityResidualDetails:
    time_term: float
    pair_term: float
    far_field_term: float
    split: DeltaSplit
    eta: float
    kernel_evals: int
    level: int


def _extrapolate_far(deltas, far, magnitude):
    """Limit of the far-part schedule as delta -> 0.

    `magnitude` is the triangle-inequality scale of the far integrand (no
    cancellation).  Far values more than four digits below it are already
    converged within quadrature accuracy; their differences carry no order
    (for circularly symmetric sources the pair term cancels analytically and
    the schedule is pure grid noise), so the last value stands as the limit.
    A schedule that moves at a real fraction of the scale but shows no clean
    geometric order is a genuine failure and raises.
    """
    far = np.asarray(far, dtype=float)
    scale = max(float(np.max(np.abs(far))), 1e-300)
    d = np.diff(far)
    if abs(d[-1]) <= 1e-12 * scale:
        return float(far[-1]), float("nan")
    ratio = d[-2] / d[-1]
    if not (1.15 <= ratio <= 64.0):
        if scale <= 1e-4 * magnitude:
            return float(far[-1]), float("nan")
        raise QuadratureError(
            f"near-diagonal split shows no clean convergence order (step ratio {ratio:.3g}); "
            "refine the grid or extend the delta schedule"
        )
    order = math.log2(ratio)
    return float(far[-1] + d[-1] / (ratio - 1.0)), float(order)


def vorticity_interior_residual(
    omega,
    phi,
    chi: Cutoff,
    *,
    seams=None,
    level: int = 0,
    deltas=DEFAULT_DELTAS,
    time_nodes: int = 15,
    return_details: bool = False,
):
    """Residual of the interior weak vorticity form against one scalar test bump.

    Three terms: the time term against dt(phi); the symmetrized pair term,
    evaluated for each delta in the schedule as (circulation velocity of the
    cutoff source minus the near-diagonal patch) . grad phi and then
    extrapolated to delta -> 0; and the far-field term pairing the interior
    piece against the source beyond the cutoff through the full 2D x 2D
    tensor quadrature.
    """
    tf = phi.phi if isinstance(phi, DivFreeTestField) else phi
    src = _omega_source(omega, seams)
    eta = chi.plateau - tf.support_radius
    if eta <= 0.0:
        raise SeparationError(
            f"cutoff plateau {chi.plateau} does not cover the test support radius "
            f"{tf.support_radius}; separation eta = {eta:.3g}"
        )
    deltas = tuple(sorted(deltas, reverse=True))
    if len(deltas) < 3:
        raise DomainError("need at least three deltas to extrapolate the near-diagonal split")

    # x grid over the bump ball, around the bump center
    pts, wx, _, _ = polar_grid(0.0, tf.width, 24 << level, 48 << level, order=1, center=tf.center)
    rx = np.hypot(pts[:, 0], pts[:, 1])
    gb = tf.grad_b(pts)
    bvals = tf.b(pts)
    ex, _ = _unit_tangent(pts)
    tang = np.einsum("ni,ni->n", gb, ex)
    chix = chi.value_r(rx)

    # y grid for the far-field term: the part of the source the cutoff drops
    y_lo = max(chi.plateau, src.support[0])
    y_hi = min(1.0, src.support[1])
    far_splits = tuple(src.seams) + (chi.a_out,)
    if y_hi > y_lo:
        ypts, wy, ry, _ = polar_grid(y_lo, y_hi, 24 << level, 128 << level, order=1, splits=far_splits)
        one_minus_chi = 1.0 - chi.value_r(ry)
    else:
        ypts = np.empty((0, 2))
        wy = ry = one_minus_chi = np.empty(0)

    n_s_panels, n_alpha = 4 << level, 32 << level
    s_nodes = (n_s_panels + 1) * 4  # +1 panel from the split at delta/2
    time_mult = 1 if src.steady else time_nodes
    patch_evals = pts.shape[0] * s_nodes * n_alpha * len(deltas)
    far_evals = pts.shape[0] * ypts.shape[0]
    budget = (patch_evals + far_evals) * time_mult
    if budget > KERNEL_EVAL_BUDGET:
        raise QuadratureError(
            f"residual would need about {budget:.2e} kernel evaluations "
            f"(budget {KERNEL_EVAL_BUDGET:.0e}); lower the level or the time node count"
        )

    def space_terms(prof):
        chi_om = lambda r: chi.value_r(r) * np.asarray(prof(r), dtype=float)
        om_x = np.asarray(prof(rx), dtype=float)
        weight_x = wx * chix * om_x
        s_time = float(np.dot(wx, bvals * om_x))
        u_chi = _swirl_of_profile(chi_om, tuple(src.seams) + (chi.plateau, chi.a_out), rx)
        base = u_chi * tang
        s_mag = float(np.dot(np.abs(weight_x), np.abs(base)))
        fars, nears = [], []
        for d in deltas:
            patch = _near_patch(pts, chi_om, d, n_s_panels, n_alpha)
            near_d = float(np.dot(weight_x, np.einsum("ni,ni->n", gb, patch)))
            fars.append(float(np.dot(weight_x, base)) - near_d)
            nears.append(near_d)
        if ypts.shape[0]:
            strength = wy * one_minus_chi * np.asarray(prof(ry), dtype=float)
            vfar = np.empty_like(pts)
            for i0 in range(0, pts.shape[0], 256):
                K = biot_savart_kernel(pts[i0 : i0 + 256, None, :], ypts[None, :, :])
                vfar[i0 : i0 + 256] = np.einsum("xyi,y->xi", K, strength)
            s_far = float(np.dot(weight_x, np.einsum("ni,ni->n", gb, vfar)))
        else:
            s_far = 0.0
        return s_time, np.array(fars), np.array(nears), s_far, s_mag

    tn, tw = gauss_window(tf.t0, tf.t1, time_nodes)
    tau, dtau = tf.tau(tn), tf.dtau(tn)
    if src.steady:
        s_time, fars, nears, s_far, s_mag = space_terms(src.profile(None))
        time_term = float(np.dot(tw, dtau)) * s_time
        far_values = float(np.dot(tw, tau)) * fars
        near_values = float(np.dot(tw, tau)) * nears
        far_field = float(np.dot(tw, tau)) * s_far
        magnitude = float(np.dot(tw, np.abs(tau))) * s_mag
    else:
        time_term = far_field = magnitude = 0.0
        far_values = np.zeros(len(deltas))
        near_values = np.zeros(len(deltas))
        for i in range(tn.size):
            s_time, fars, nears, s_far, s_mag = space_terms(src.profile(tn[i]))
            time_term += tw[i] * dtau[i] * s_time
            far_values += tw[i] * tau[i] * fars
            near_values += tw[i] * tau[i] * nears
            far_field += tw[i] * tau[i] * s_far
            magnitude += tw[i] * abs(tau[i]) * s_mag

    pair_term, order = _extrapolate_far(deltas, far_values, magnitude)
    value = float(time_term + pair_term + far_field)
    if not return_details:
        return value
    details = VorticityResidualDetails(
        time_term=float(time_term),
        pair_term=float(pair_term),
        far_field_term=float(far_field),
        split=DeltaSplit(
            deltas=deltas,
            far_values=tuple(float(v) for v in far_values),
            near_values=tuple(float(v) for v in near_values),
            observed_order=order,
            extrapolated=float(pair_term),
        ),
        eta=float(eta),
        kernel_evals=int(budget),
        level=int(level),
    )
    return value, details


# ---------------------------------------------------------------------------
# bound check for the near-diagonal remainder


def symmetrized_bump_kernel(tf: TestFunction, x, y):
    """Time-free symmetrized kernel 0.5 [K(x,y).grad b(x) + K(y,x).grad b(y)]."""
    kxy = biot_savart_kernel(x, y)
    kyx = biot_savart_kernel(y, x)
    return 0.5 * (
        np.sum(kxy * tf.grad_b(x), axis=-1) + np.sum(kyx * tf.grad_b(y), axis=-1)
    )


def sampled_kernel_sup(tf: TestFunction, chi: Cutoff, *, seed: int = 0, samples: int = 4000) -> float:
    """Sampled sup of |H| over supp(chi) x supp(chi), biased toward the diagonal.

    Half the pairs are independent draws, half put y within a shrinking ring
    around x (down to 1e-6), where the symmetrized cancellation is the only
    thing keeping the kernel bounded.
    """
    rng = np.random.default_rng(seed)
    n = samples // 2
    a = chi.a_out

    def draw(num):
        r = a * np.sqrt(rng.uniform(0.0, 1.0, num))
        th = rng.uniform(0.0, 2.0 * np.pi, num)
        return np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)

    x1, y1 = draw(n), draw(n)
    x2 = draw(n)
    gaps = 10.0 ** rng.uniform(-6.0, -0.7, n)
    ang = rng.uniform(0.0, 2.0 * np.pi, n)
    y2 = x2 + gaps[:, None] * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    inside = np.hypot(y2[:, 0], y2[:, 1]) < 1.0
    vals1 = symmetrized_bump_kernel(tf, x1, y1)
    vals2 = symmetrized_bump_kernel(tf, x2[inside], y2[inside])
    return float(max(np.max(np.abs(vals1)), np.max(np.abs(vals2))))


def near_diagonal_bound_report(omega, phi, chi: Cutoff, *, level: int = 0, seed: int = 0, slack: float = 1.05):
    """Check |near part(delta)| <= M * sup-L1 * (time-integrated ball sup at delta).

    M is the sampled sup of the symmetrized kernel (spatial factor), so the
    right-hand side carries a small sampling slack.  Returns one record per
    delta in the schedule.
    """
    tf = phi.phi if isinstance(phi, DivFreeTestField) else phi
    src = _omega_source(omega)
    _, details = vorticity_interior_residual(omega, tf, chi, level=level, return_details=True)
    M = sampled_kernel_sup(tf, chi, seed=seed)
    tn, tw = gauss_window(tf.t0, tf.t1, 16)
    c0 = float(np.dot(tw, np.abs(tf.tau(tn))))
    region = CompactSubdomain(chi.a_out)

    if src.steady:
        prof = src.profile(None)
        chi_abs = lambda r: chi.value_r(r) * np.abs(np.asarray(prof(r), dtype=float))
        seams = tuple(src.seams) + (chi.plateau, chi.a_out)
        nodes, w = gauss_panels(0.0, 1.0, 64, order=8, splits=seams)
        sup_l1 = 2.0 * np.pi * float(np.dot(w, nodes * chi_abs(nodes)))
        ball = {d: sup_ball_integral(chi_abs, region, d, seams=seams) for d in details.split.deltas}
    else:
        traj = omega
        sup_l1 = 0.0
        ball = {d: 0.0 for d in details.split.deltas}
        seams = (chi.plateau, chi.a_out)
        for t in traj.times:
            prof = src.profile(t)
            chi_abs = lambda r, p=prof: chi.value_r(r) * np.abs(np.asarray(p(r), dtype=float))
            nodes, w = gauss_panels(0.0, 1.0, 64, order=8, splits=seams)
            sup_l1 = max(sup_l1, 2.0 * np.pi * float(np.dot(w, nodes * chi_abs(nodes))))
            for d in ball:
                ball[d] = max(ball[d], sup_ball_integral(chi_abs, region, d, seams=seams))

    report = []
    for d, near in zip(details.split.deltas, details.split.near_values):
        bound = slack * M * sup_l1 * c0 * ball[d]
        report.append(
            {"delta": float(d), "near_value": float(near), "bound": float(bound), "ok": bool(abs(near) <= bound)}
        )
    return report


# ---------------------------------------------------------------------------
# interior/boundary decomposition by collar cutoff and mollification


def _radial_convolve(prof, support, moll, out_r):
    """(prof * zeta_k)(r) for a radial profile, evaluated on out_r.

    2D convolution of radial functions is radial; in polar coordinates about
    the evaluation point it is a 1D integral in the offset radius against the
    angular average of the profile.  Targets farther than the mollifier radius
    from the support come out exactly 0.0, which downstream vanishing-pairing
    identities rely on.
    """
    R = moll.radius
    lo, hi = support
    out = np.zeros_like(out_r)
    if hi <= lo:
        return out
    active = (out_r > lo - R) & (out_r < hi + R)
    if not np.any(active):
        return out
    s, sw = gauss_panels(0.0, R, 8, order=6)
    theta = (np.arange(64) + 0.5) * (2.0 * np.pi / 64)
    zw = sw * moll.value_r(s) * s * (2.0 * np.pi / 64)  # offset-radius weight, per angle node
    cos_t = np.cos(theta)
    targets = out_r[active]
    vals = np.zeros(targets.size)
    for i0 in range(0, targets.size, 512):
        r = targets[i0 : i0 + 512, None, None]
        dist = np.sqrt(
            np.maximum(r**2 + s[None, :, None] ** 2 - 2.0 * r * s[None, :, None] * cos_t[None, None, :], 0.0)
        )
        pv = np.asarray(prof(dist), dtype=float)
        vals[i0 : i0 + 512] = np.einsum("nst,s->n", pv, zw)
    out[active] = vals
    return out


def decompose_interior_boundary(omega, chi: Cutoff, k: int):
    """Split a radial vorticity into mollified interior and boundary parts.

    interior = (rho_k chi omega) * zeta_k, boundary = (rho_k (1-chi) omega) * zeta_k,
    where rho_k clears a 1/k collar at the wall and zeta_k is the radial
    mollifier at scale 1/(2k).  Their sum is (rho_k omega) * zeta_k by
    construction.  Both come back sampled on a grid fine enough to resolve the
    mollification scale.
    """
    if isinstance(omega, Trajectory):
        raise DomainError("decompose a single-time field; pick a time from the trajectory first")
    if int(k) != k or k < 2:
        raise DomainError(f"mollification index must be an integer >= 2, got {k}")
    k = int(k)
    src = _omega_source(omega)
    prof = src.profile(None)
    rho_k = BoundaryCutoff(k=k)
    moll = make_mollifier(k)
    m = max(2049, 8 * k + 1)
    grid = RadialGrid.uniform(m)
    lo, hi = src.support
    collar_hi = 1.0 - 1.0 / k
    sup_i = (max(lo, 0.0), min(hi, chi.a_out, collar_hi))
    sup_b = (max(lo, chi.plateau), min(hi, collar_hi))

    prof_i = lambda r: rho_k.value_r(r) * chi.value_r(r) * np.asarray(prof(r), dtype=float)
    prof_b = lambda r: rho_k.value_r(r) * (1.0 - chi.value_r(r)) * np.asarray(prof(r), dtype=float)
    vals_i = _radial_convolve(prof_i, sup_i, moll, grid.r)
    vals_b = _radial_convolve(prof_b, sup_b, moll, grid.r)
    return (
        RadialField(grid, vals_i, VORTICITY),
        RadialField(grid, vals_b, VORTICITY),
    )


def boundary_cross_pairings(phi, omega_interior: RadialField, omega_boundary: RadialField):
    """The two cross integrals that must die once the mollification scale beats eta.

    Returns (int u_I . grad phi w_B, int u_B . grad phi w_B) over the bump
    ball.  When the boundary part's support misses the bump support, every
    sampled w_B value is exactly zero and both sums are exactly 0.0.
    """
    tf = phi.phi if isinstance(phi, DivFreeTestField) else phi
    pts, w, _, _ = polar_grid(0.0, tf.width, 24, 64, order=2, center=tf.center)
    rx = np.hypot(pts[:, 0], pts[:, 1])
    gb = tf.grad_b(pts)
    ex, _ = _unit_tangent(pts)
    wb = np.asarray(omega_boundary(rx), dtype=float)
    u_i = _swirl_of_profile(omega_interior, (), rx)
    u_b = _swirl_of_profile(omega_boundary, (), rx)
    tang = np.einsum("ni,ni->n", gb, ex)
    first = float(np.dot(w, u_i * tang * wb))
    second = float(np.dot(w, u_b * tang * wb))
    return first, second


def radial_pairing(field, g, *, support=(0.0, 1.0), seams=()) -> float:
    """2D pairing 2 pi int f(r) g(r) r dr of radial factors."""
    nodes, w = gauss_panels(support[0], support[1], 64, order=8, splits=seams)
    fv = np.asarray(field(nodes), dtype=float)
    gv = np.asarray(g(nodes), dtype=float)
    return float(2.0 * np.pi * np.dot(w, nodes * fv * gv))


def _l1_of(field: RadialField) -> float:
    r = field.grid.r
    return float(2.0 * np.pi * np.trapezoid(np.abs(field.values) * r, r))


# ---------------------------------------------------------------------------
# battery reports


@dataclass(frozen=True)
class WeakResidualReport:
    """Everything the verify stage logs for one test field."""

    field_seed: int | None
    r_vel: float
    r_vort: float
    eta: float
    mollification_index: int
    interior_l1: float
    boundary_l1: float
    deltas: tuple
    delta_far_values: tuple
    observed_order: float
    delta_extrapolated: float

    def all_finite(self) -> bool:
        nums = [self.r_vel, self.r_vort, self.eta, self.interior_l1, self.boundary_l1,
                self.delta_extrapolated, *self.delta_far_values]
        return all(math.isfinite(v) for v in nums)

    def as_dict(self) -> dict:
        return {
            "field_seed": self.field_seed,
            "R_vel": self.r_vel,
            "R_vort": self.r_vort,
            "eta": self.eta,
            "k": self.mollification_index,
            "interior_l1": self.interior_l1,
            "boundary_l1": self.boundary_l1,
            "delta_extrapolation": {
                "deltas": list(self.deltas),
                "far_values": list(self.delta_far_values),
                "observed_order": self.observed_order,
                "extrapolated": self.delta_extrapolated,
            },
        }


def verify_pair(u, omega, chi: Cutoff, field: DivFreeTestField, *,
                level: int = 0, mollification_index: int = 8, time_nodes: int = 15) -> WeakResidualReport:
    """Both residuals plus the decomposition bookkeeping for one test field.

    The velocity residual runs two levels finer than requested: it has no
    pair-kernel cost, and mode-truncated trajectories carry short-wavelength
    ripples that alias on the vorticity-side grid spacing.
    """
    r_vel = velocity_weak_residual(u, field, level=level + 2, time_nodes=max(time_nodes, 16))
    r_vort, det = vorticity_interior_residual(
        omega, field.phi, chi, level=level, time_nodes=time_nodes, return_details=True
    )
    if isinstance(omega, RadialField):
        snapshot = omega
    else:
        grid = RadialGrid.uniform(2049)
        if isinstance(omega, Trajectory):
            t_mid = 0.5 * (field.phi.t0 + field.phi.t1)
            snapshot = RadialField(grid, omega.eval_omega(t_mid, grid.r), VORTICITY)
        else:
            snapshot = RadialField(grid, np.asarray(omega(grid.r), dtype=float), VORTICITY)
    part_i, part_b = decompose_interior_boundary(snapshot, chi, mollification_index)
    return WeakResidualReport(
        field_seed=field.seed,
        r_vel=float(r_vel),
        r_vort=float(r_vort),
        eta=det.eta,
        mollification_index=int(mollification_index),
        interior_l1=_l1_of(part_i),
        boundary_l1=_l1_of(part_b),
        deltas=det.split.deltas,
        delta_far_values=det.split.far_values,
        observed_order=det.split.observed_order,
        delta_extrapolated=det.split.extrapolated,
    )


def verify_battery(u, omega, chi: Cutoff, battery, *,
                   level: int = 0, mollification_index: int = 8, time_nodes: int = 15) -> list:
    if not battery:
        raise DomainError("empty test-field battery")
    return [
        verify_pair(u, omega, chi, field, level=level,
                    mollification_index=mollification_index, time_nodes=time_nodes)
        for field in battery
    ]
