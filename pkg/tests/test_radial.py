"""Radial solver: sheet family, Bessel projection, exact mode decay."""

import numpy as np
import pytest

from vortexlab.bessel import j1_zeros
from vortexlab.errors import DomainError, ProjectionConditioningWarning, ResolutionError
from vortexlab.kernels import velocity_from_vorticity
from vortexlab.quadrature import gauss_panels
from vortexlab.radial import (
    SHEET_L2_SQ,
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
    velocity_from_vorticity_radial,
    vorticity_from_velocity,
)

# mpmath tanh-sinh oracle, 30 digits, run before the build:
# I1 = int_{-1}^{1} exp(-1/(1-s^2)) ds
BUMP_INTEGRAL = 0.443993816168079437823
# amplitudes 4n/I1 for total mass 2*pi
AMPLITUDES = {4: 36.036537936697296168, 16: 144.146151746789184672, 64: 576.5846069871567386879}
TWO_PI_LN2 = 4.355172180607204261001
# exp(-0.01 * lambda_1^2 * 0.1) with lambda_1 = besseljzero(1,1)
SINGLE_MODE_DECAY = 0.9854252839443594964736
# squared L2 distance of the family swirl to the limiting sheet profile
SHEET_DISTANCES_SQ = {2: 0.338216326874, 4: 0.166819599503, 8: 0.0831253942897}


def test_grid_constructors():
    g = RadialGrid.uniform(257)
    assert g.r[0] == 0.0 and g.r[-1] == 1.0 and g.m == 257
    c = RadialGrid.boundary_clustered(257)
    assert c.r[0] == 0.0 and c.r[-1] == 1.0
    assert np.all(np.diff(c.r) > 0)
    # clustering: last gap much smaller than first
    assert np.diff(c.r)[-1] < 0.05 * np.diff(c.r)[0]
    with pytest.raises(DomainError):
        RadialGrid(np.array([0.0, 0.5, 0.9]))
    with pytest.raises(DomainError):
        RadialGrid(np.array([0.0, 0.6, 0.4, 1.0]))


def test_swirl_field_must_vanish_on_axis():
    g = RadialGrid.uniform(17)
    with pytest.raises(DomainError):
        RadialField(g, np.ones(17), SWIRL)


# ---------------------------------------------------------------------------
# sheet family


def test_family_amplitude_matches_oracle():
    for n, a_ref in AMPLITUDES.items():
        fam = build_sheet_family(n)
        assert abs(fam.amplitude - a_ref) < 1e-10 * a_ref


def test_family_mass_by_independent_trapezoid():
    # the bump is flat to all orders at its support edges, so the trapezoid
    # rule over the support is spectrally accurate: an independent route
    for n in (4, 16, 64):
        fam = build_sheet_family(n)
        lo, hi = fam.support
        r = np.linspace(lo, hi, 20001)
        mass = 2.0 * np.pi * np.trapezoid(fam.omega0(r) * r, r)
        assert abs(mass - 2.0 * np.pi) < 1e-8


def test_family_vorticity_nonnegative_and_supported():
    fam = build_sheet_family(8)
    r = np.linspace(0.0, 1.0, 4001)
    om = fam.omega0(r)
    assert np.all(om >= 0.0)
    lo, hi = fam.support
    assert np.all(om[(r < lo) | (r > hi)] == 0.0)


def test_family_swirl_inside_and_outside_bump():
    fam = build_sheet_family(8)
    lo, hi = fam.support
    r_in = np.array([0.1, lo - 0.01])
    assert np.all(fam.u0(r_in) == 0.0)
    r_out = np.array([hi + 0.01, 0.9, 1.0])
    assert np.allclose(fam.u0(r_out), fam.mass / (2 * np.pi * r_out), rtol=1e-13)


def test_limit_profile_l2_norm_analytic():
    x, w = gauss_panels(0.0, 1.0, 32, order=8, splits=(SHEET_RADIUS,))
    val = 2 * np.pi * np.dot(w * x, sheet_limit_swirl(x) ** 2)
    assert abs(val - TWO_PI_LN2) < 1e-12
    assert abs(SHEET_L2_SQ - TWO_PI_LN2) < 1e-14


def _l2_dist_sq_to_sheet(fam):
    lo, hi = fam.support
    x, w = gauss_panels(0.0, 1.0, 48, order=10, splits=(lo, SHEET_RADIUS, hi))
    diff = fam.u0(x) - sheet_limit_swirl(x)
    return 2 * np.pi * np.dot(w * x, diff**2)


def test_family_converges_to_sheet_in_l2():
    for n, ref in SHEET_DISTANCES_SQ.items():
        assert abs(_l2_dist_sq_to_sheet(build_sheet_family(n)) - ref) < 1e-9
    dists = [_l2_dist_sq_to_sheet(build_sheet_family(n)) for n in (2, 4, 8, 16, 32)]
    assert np.all(np.diff(dists) < 0.0)


def test_family_resolution_and_index_guards():
    with pytest.raises(ResolutionError):
        build_sheet_family(16, RadialGrid.uniform(65))
    with pytest.raises(DomainError):
        build_sheet_family(1)


# ---------------------------------------------------------------------------
# mode projection


def _eigenfield(coeff_map, grid=None):
    lam = j1_zeros(max(coeff_map) + 1)
    from vortexlab.bessel import j1 as besj1

    def ev(r):
        out = np.zeros_like(np.asarray(r, dtype=float))
        for k, c in coeff_map.items():
            out = out + c * besj1(lam[k] * r)
        return out

    g = grid or RadialGrid.uniform(513)
    return RadialField(g, ev(g.r), SWIRL, evaluator=ev)


def test_projection_recovers_single_mode():
    field = _eigenfield({1: 1.0})  # second mode
    ex = project_modes(field, 6)
    assert abs(ex.coeffs[1] - 1.0) < 1e-12
    others = np.delete(ex.coeffs, 1)
    assert np.max(np.abs(others)) < 1e-12
    assert ex.recon_error < 1e-12


def test_projection_of_zero_field_is_zero():
    g = RadialGrid.uniform(65)
    ex = project_modes(RadialField(g, np.zeros(65), SWIRL), 4)
    assert np.all(ex.coeffs == 0.0)


def test_gridded_projection_matches_evaluator_route():
    field = _eigenfield({0: 0.7, 2: 0.2}, RadialGrid.uniform(4097))
    ex_eval = project_modes(field, 8)
    gridded = RadialField(field.grid, field.values, SWIRL)  # samples only
    ex_grid = project_modes(gridded, 8)
    assert np.max(np.abs(ex_eval.coeffs - ex_grid.coeffs)) < 1e-6


def test_projection_flags_circulation_loss():
    # family swirl is 1 at the wall; the Dirichlet basis drops that part
    fam = build_sheet_family(8)
    with pytest.warns(ProjectionConditioningWarning):
        ex = project_modes(fam.swirl_field(), default_mode_count(8))
    assert 1e-3 < ex.recon_error < 0.2
    with pytest.warns(ProjectionConditioningWarning):
        ex_more = project_modes(fam.swirl_field(), 2 * default_mode_count(8))
    assert ex_more.recon_error < ex.recon_error


def test_projection_rejects_vorticity_kind():
    g = RadialGrid.uniform(65)
    with pytest.raises(DomainError):
        project_modes(RadialField(g, np.zeros(65), VORTICITY), 4)


# ---------------------------------------------------------------------------
# curl and circulation maps


def test_constant_vorticity_gives_rigid_rotation():
    g = RadialGrid.uniform(101)
    om = RadialField(g, np.full(101, 2.0), VORTICITY)
    u = velocity_from_vorticity_radial(om)
    assert np.max(np.abs(u.values - g.r)) < 1e-14


def test_rigid_rotation_gives_constant_vorticity():
    g = RadialGrid.uniform(101)
    u = RadialField(g, g.r.copy(), SWIRL)
    om = vorticity_from_velocity(u)
    assert np.max(np.abs(om.values - 2.0)) < 1e-12  # exact for quadratics, axis included


def test_roundtrip_second_order_in_grid_spacing():
    def l1_err(m):
        g = RadialGrid.uniform(m)
        om = RadialField(g, np.cos(3.0 * g.r), VORTICITY)
        back = vorticity_from_velocity(velocity_from_vorticity_radial(om))
        w = np.gradient(g.r)
        return np.sum(np.abs(back.values - om.values) * w)

    ratio = l1_err(129) / l1_err(257)
    assert 3.3 < ratio < 4.7


def test_mode_curl_matches_finite_difference_curl():
    lam = j1_zeros(3)
    ex = ModeExpansion(lam, np.array([0.5, -0.2, 0.1]))
    g = RadialGrid.uniform(2049)
    u = RadialField(g, ex.eval_u(g.r), SWIRL)
    om_fd = vorticity_from_velocity(u).values
    om_modes = ex.eval_omega(g.r)
    assert np.max(np.abs(om_fd - om_modes)) < 1e-5


def test_radial_circulation_route_matches_disk_quadrature_route():
    # same swirl through two unrelated routes: 1D circulation integral vs
    # the full 2D Biot-Savart quadrature of the kernel module
    fam = build_sheet_family(4)
    lo, hi = fam.support
    pts = np.array([[0.55, 0.0], [0.0, 0.72], [-0.62, 0.31], [0.2, 0.1]])
    vel, _ = velocity_from_vorticity(fam.omega0, pts, support=(lo, hi), tol=1e-7)
    rr = np.hypot(pts[:, 0], pts[:, 1])
    u_rad = fam.u0(rr)
    tang = np.column_stack([-pts[:, 1], pts[:, 0]]) / rr[:, None]
    assert np.max(np.abs(vel - u_rad[:, None] * tang)) < 1e-6


# ---------------------------------------------------------------------------
# evolution


def test_single_mode_decay_factor():
    lam = j1_zeros(1)
    ex = ModeExpansion(lam, np.array([1.0]))
    traj = evolve(ex, 0.01, np.array([0.0, 0.1]), RadialGrid.uniform(513))
    sup0 = np.max(np.abs(traj.u[0]))
    sup1 = np.max(np.abs(traj.u[1]))
    assert abs(sup1 / sup0 - SINGLE_MODE_DECAY) < 1e-8
    assert abs(traj.l2_norm_sq(0.1) / traj.l2_norm_sq(0.0) - SINGLE_MODE_DECAY**2) < 1e-12


def test_evolve_time_zero_returns_initial():
    lam = j1_zeros(4)
    ex = ModeExpansion(lam, np.array([0.3, -0.4, 0.05, 0.2]))
    g = RadialGrid.uniform(257)
    traj = evolve(ex, 0.02, np.array([0.0, 0.05]), g)
    assert np.max(np.abs(traj.u[0] - ex.eval_u(g.r))) < 1e-14


def test_no_slip_and_energy_monotone():
    fam = build_sheet_family(4)
    with pytest.warns(ProjectionConditioningWarning):
        ex = project_modes(fam.swirl_field(), default_mode_count(4))
    ts = time_samples(0.1, count=7)
    traj = evolve(ex, 0.01, ts, RadialGrid.uniform(1025), family_index=4, mass=fam.mass)
    assert np.max(np.abs(traj.u[1:, -1])) < 1e-10
    energies = [traj.l2_norm_sq(t) for t in ts]
    assert np.all(np.diff(energies) < 0.0)
    # grid-quadrature energies agree and are monotone too
    w = np.gradient(traj.grid.r)
    grid_e = 2 * np.pi * (traj.u**2 * traj.grid.r * w).sum(axis=1)
    assert np.all(np.diff(grid_e) < 0.0)
    assert np.allclose(grid_e, energies, rtol=1e-4)


def test_evolution_composes_through_reprojection():
    fam = build_sheet_family(2)
    with pytest.warns(ProjectionConditioningWarning):
        ex = project_modes(fam.swirl_field(), 64)
    nu, t1, t2 = 0.01, 0.03, 0.05
    mid = ex.decayed(nu, t1)
    g = RadialGrid.uniform(513)
    mid_field = RadialField(g, mid.eval_u(g.r), SWIRL, evaluator=mid.eval_u)
    re = project_modes(mid_field, 64)
    end_a = re.decayed(nu, t2).coeffs
    end_b = ex.decayed(nu, t1 + t2).coeffs
    assert np.max(np.abs(end_a - end_b)) < 1e-10


def test_energy_identity_exact_in_mode_space():
    fam = build_sheet_family(4)
    with pytest.warns(ProjectionConditioningWarning):
        ex = project_modes(fam.swirl_field(), 64)
    traj = evolve(ex, 0.01, np.array([0.0, 0.05, 0.1]), RadialGrid.uniform(513))
    e0 = ex.l2_norm_sq()
    for t in (0.05, 0.1):
        assert abs(traj.energy_identity_residual(t)) < 1e-12 * e0


def test_dissipation_cross_checked_by_finite_differences():
    fam = build_sheet_family(4)
    with pytest.warns(ProjectionConditioningWarning):
        ex = project_modes(fam.swirl_field(), 64)
    nu, t = 0.01, 0.05
    dec = ex.decayed(nu, t)
    g = RadialGrid.uniform(8193)
    u = dec.eval_u(g.r)
    du = np.gradient(u, g.r, edge_order=2)
    u_over_r = np.empty_like(u)
    u_over_r[1:] = u[1:] / g.r[1:]
    u_over_r[0] = du[0]
    d_fd = 2 * np.pi * np.trapezoid((du**2 + u_over_r**2) * g.r, g.r)
    assert abs(d_fd - dec.dissipation()) < 1e-4 * dec.dissipation()


def test_departure_from_initial_shrinks_with_viscosity():
    fam = build_sheet_family(8)
    with pytest.warns(ProjectionConditioningWarning):
        ex = project_modes(fam.swirl_field(), default_mode_count(8))
    lam, c = ex.zeros, ex.coeffs
    from vortexlab.bessel import j1_squared_norm

    def sup_departure_sq(nu, horizon=0.1):
        # || u(t) - u(0) ||^2 grows in t, so the sup over [0, T] sits at T
        fac = 1.0 - np.exp(-nu * lam**2 * horizon)
        return 2 * np.pi * np.sum(c**2 * fac**2 * j1_squared_norm(lam))

    vals = [sup_departure_sq(nu) for nu in (1e-2, 5e-3, 2.5e-3)]
    assert np.all(np.diff(vals) < 0.0)


def test_time_samples_shape():
    ts = time_samples(0.1, count=9)
    assert ts[0] == 0.0 and ts[-1] == pytest.approx(0.1)
    assert np.all(np.diff(ts) > 0)
    with pytest.raises(DomainError):
        time_samples(-1.0)
