"""Circularly symmetric viscous flow in the unit disk, solved in a Bessel basis.

Under circular symmetry the velocity field is a pure swirl u = u_theta(r,t)
e_theta, the nonlinear advection term drops out identically, and no-slip
Navier-Stokes reduces to the linear diffusion equation

    d_t u_theta = nu * (d_rr + (1/r) d_r - 1/r^2) u_theta,   u_theta(1,t) = 0.

The operator on the right has eigenfunctions J_1(lambda_k r) with lambda_k
the positive zeros of J_1, so evolution is exact mode decay: no time
stepping, no spatial discretization error beyond projection onto a finite
number of modes.  Vorticity follows from the swirl by the curl in polar
coordinates, omega = (1/r) d_r (r u_theta), and the swirl from vorticity by
the circulation integral u_theta(r) = (1/r) int_0^r omega(s) s ds.

Initial data of interest is the annular-bump family concentrating on the
circle r = 1/2: smooth, nonnegative, circularly symmetric vorticity of
fixed total mass whose induced swirl converges in L^2 to the discontinuous
profile (0 inside, 1/r outside) as the bump narrows.  Note the swirl of any
member is 1 at the wall, so projection onto the Dirichlet basis loses the
net circulation; the lost part concentrates at r = 1 as the mode count
grows, which is the expected boundary sheet, not a quadrature bug.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial.legendre import leggauss

from .bessel import j0, j1, j1_squared_norm, j1_zeros
from .bumps import bump_value
from .errors import DomainError, ProjectionConditioningWarning, ResolutionError
from .quadrature import gauss_panels

VORTICITY = "vorticity"
SWIRL = "swirl-velocity"

SHEET_RADIUS = 0.5
# squared L^2(disk) norm of the limiting swirl profile: 2 pi int_{1/2}^1 dr/r
SHEET_L2_SQ = 2.0 * np.pi * np.log(2.0)


@dataclass(frozen=True)
class RadialGrid:
    """Strictly increasing radii spanning [0, 1] with exact endpoints."""

    r: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        if r.ndim != 1 or r.size < 3:
            raise DomainError("radial grid needs at least 3 nodes")
        if r[0] != 0.0 or r[-1] != 1.0:
            raise DomainError("radial grid must span [0, 1] with exact endpoints")
        if not np.all(np.diff(r) > 0.0):
            raise DomainError("radial grid nodes must be strictly increasing")
        object.__setattr__(self, "r", r)

    @classmethod
    def uniform(cls, m: int = 4097) -> "RadialGrid":
        return cls(np.linspace(0.0, 1.0, m))

    @classmethod
    def boundary_clustered(cls, m: int = 4097) -> "RadialGrid":
        # sine map clusters nodes near r = 1 where no-slip layers live
        x = np.linspace(0.0, 1.0, m)
        r = np.sin(0.5 * np.pi * x)
        r[0], r[-1] = 0.0, 1.0
        return cls(r)

    @property
    def m(self) -> int:
        return self.r.size

    @property
    def max_spacing(self) -> float:
        return float(np.max(np.diff(self.r)))


@dataclass(frozen=True)
class RadialField:
    """Samples of a circularly symmetric scalar profile on a radial grid.

    `evaluator`, when present, is the exact callable the samples came from;
    quadratures prefer it over interpolation.  `seam_radii` lists radii where
    the profile (or a derivative) is known to kink, so panel-based rules can
    align panel edges there.
    """

    grid: RadialGrid
    values: np.ndarray
    kind: str
    evaluator: object = None
    seam_radii: tuple = ()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.r.shape:
            raise DomainError("field values must match the grid shape")
        if self.kind not in (VORTICITY, SWIRL):
            raise DomainError(f"unknown field kind {self.kind!r}")
        if self.kind == SWIRL and abs(v[0]) > 1e-12:
            raise DomainError("swirl must vanish on the axis")
        object.__setattr__(self, "values", v)

    def __call__(self, r):
        if self.evaluator is not None:
            return self.evaluator(np.asarray(r, dtype=float))
        return np.interp(r, self.grid.r, self.values)


def velocity_from_vorticity_radial(omega: RadialField) -> RadialField:
    """Swirl induced by a symmetric vorticity: u(r) = (1/r) int_0^r omega s ds."""
    if omega.kind != VORTICITY:
        raise DomainError("expected a vorticity field")
    r = omega.grid.r
    f = omega.values * r
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(r))])
    u = np.empty_like(cum)
    u[1:] = cum[1:] / r[1:]
    u[0] = 0.0
    return RadialField(omega.grid, u, SWIRL, seam_radii=omega.seam_radii)


def vorticity_from_velocity(u: RadialField) -> RadialField:
    """Curl of a swirl profile: omega = (1/r) d_r(r u), with omega(0) = 2 u'(0)."""
    if u.kind != SWIRL:
        raise DomainError("expected a swirl field")
    r = u.grid.r
    g = np.gradient(r * u.values, r, edge_order=2)
    om = np.empty_like(g)
    om[1:] = g[1:] / r[1:]
    om[0] = 2.0 * np.gradient(u.values, r, edge_order=2)[0]
    return RadialField(u.grid, om, VORTICITY, seam_radii=u.seam_radii)


# ---------------------------------------------------------------------------
# annular bump family concentrating on the circle r = 1/2


def sheet_limit_swirl(r):
    """Limiting swirl profile: 0 inside the sheet circle, 1/r outside."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    far = r > SHEET_RADIUS
    out[far] = 1.0 / r[far]
    return out


@dataclass(frozen=True)
class SheetFamily:
    """Smooth annular vorticity bump of width 1/n centered on r = 1/2.

    omega0(r) = amplitude * exp(-1/(1 - q^2)) with q = 2n(r - 1/2), supported
    on |q| < 1; the amplitude fixes the total mass int omega0 dA.  The induced
    swirl u0 comes from the circulation integral, so outside the bump it is
    mass/(2 pi r) and inside it is identically zero.
    """

    index: int
    mass: float
    amplitude: float
    grid: RadialGrid

    @property
    def width(self) -> float:
        return 1.0 / self.index

    @property
    def support(self) -> tuple:
        h = 0.5 / self.index
        return (SHEET_RADIUS - h, SHEET_RADIUS + h)

    def omega0(self, r):
        q = 2.0 * self.index * (np.asarray(r, dtype=float) - SHEET_RADIUS)
        return self.amplitude * bump_value(q * q)

    def enclosed_mass(self, r):
        """Vorticity mass in the disk of radius r, smooth monotone in r."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        lo, hi = self.support
        qr = np.clip(2.0 * self.index * (r - SHEET_RADIUS), -1.0, 1.0)
        # map a fixed Gauss rule onto [-1, q(r)] for every target at once
        xs, ws = leggauss(64)
        half = 0.5 * (qr + 1.0)
        # nodes_{ij} = -1 + half_i * (xs_j + 1) covers [-1, q(r_i)]
        nodes = -1.0 + half[:, None] * (xs[None, :] + 1.0)
        rho = SHEET_RADIUS + nodes / (2.0 * self.index)
        vals = self.amplitude * bump_value(nodes * nodes) * rho
        integ = (vals * ws[None, :]).sum(axis=1) * half / (2.0 * self.index)
        out = 2.0 * np.pi * integ
        out[r <= lo] = 0.0
        out[r >= hi] = self.mass
        return out

    def u0(self, r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.zeros_like(r)
        pos = r > 0.0
        out[pos] = self.enclosed_mass(r[pos]) / (2.0 * np.pi * r[pos])
        return out

    def omega_field(self) -> RadialField:
        return RadialField(
            self.grid, self.omega0(self.grid.r), VORTICITY,
            evaluator=self.omega0, seam_radii=self.support,
        )

    def swirl_field(self) -> RadialField:
        return RadialField(
            self.grid, self.u0(self.grid.r), SWIRL,
            evaluator=self.u0, seam_radii=self.support,
        )


def build_sheet_family(n: int, grid: RadialGrid = None, *, mass: float = 2.0 * np.pi) -> SheetFamily:
    if n < 2:
        raise DomainError("sheet family index must be at least 2")
    if grid is None:
        grid = RadialGrid.uniform()
    lo, hi = SHEET_RADIUS - 0.5 / n, SHEET_RADIUS + 0.5 / n
    inside = np.count_nonzero((grid.r >= lo) & (grid.r <= hi))
    if inside < 8:
        raise ResolutionError(
            f"grid has {inside} nodes across the width-1/{n} bump; need at least 8"
        )
    # mass = 2 pi * A/(2n) * int_{-1}^{1} g(q^2) (1/2 + q/(2n)) dq; the odd part
    # integrates to zero, leaving mass = (pi A / 2n) * int g.  Evaluate the bump
    # integral by Gauss quadrature (the integrand is smooth and flat at +-1).
    xs, ws = leggauss(96)
    bump_integral = float(np.dot(ws, bump_value(xs * xs)))
    amplitude = mass * 2.0 * n / (np.pi * bump_integral)
    return SheetFamily(index=n, mass=mass, amplitude=amplitude, grid=grid)


def default_mode_count(n: int) -> int:
    """Modes for sheet-family index n: resolve the width-1/n bump comfortably."""
    return max(64, 6 * n)


# ---------------------------------------------------------------------------
# Dirichlet Bessel basis


@dataclass(frozen=True)
class ModeExpansion:
    """Coefficients on the basis J_1(lambda_k r), lambda_k the J_1 zeros.

    `recon_error` is the relative L^2(r dr) distance between the projected
    field and its reconstruction, NaN when unknown (e.g. synthetic data).
    """

    zeros: np.ndarray
    coeffs: np.ndarray
    recon_error: float = float("nan")

    def __post_init__(self):
        lam = np.asarray(self.zeros, dtype=float)
        c = np.asarray(self.coeffs, dtype=float)
        if lam.shape != c.shape or lam.ndim != 1:
            raise DomainError("zeros and coefficients must be equal-length vectors")
        if not np.all(np.diff(lam) > 0.0):
            raise DomainError("Bessel zeros must increase strictly")
        if not 3.8 < lam[0] < 3.9:
            raise DomainError("first zero must be the first positive J1 zero")
        object.__setattr__(self, "zeros", lam)
        object.__setattr__(self, "coeffs", c)

    @property
    def m(self) -> int:
        return self.zeros.size

    def eval_u(self, r):
        r = np.asarray(r, dtype=float)
        return j1(np.multiply.outer(r, self.zeros)) @ self.coeffs

    def eval_omega(self, r):
        # curl of the swirl: (1/r) d_r (r J_1(lam r)) = lam J_0(lam r)
        r = np.asarray(r, dtype=float)
        return j0(np.multiply.outer(r, self.zeros)) @ (self.zeros * self.coeffs)

    def decayed(self, nu: float, t: float) -> "ModeExpansion":
        return replace(self, coeffs=self.coeffs * np.exp(-nu * self.zeros**2 * t))

    def l2_norm_sq(self) -> float:
        """Squared L^2 norm of the velocity over the disk."""
        return float(2.0 * np.pi * np.sum(self.coeffs**2 * j1_squared_norm(self.zeros)))

    def dissipation(self) -> float:
        """int |grad u|^2 over the disk (equals enstrophy for no-slip swirl)."""
        return float(
            2.0 * np.pi
            * np.sum(self.zeros**2 * self.coeffs**2 * j1_squared_norm(self.zeros))
        )


def project_modes(u: RadialField, m: int, *, tol: float = 1e-6, order: int = 10) -> ModeExpansion:
    """L^2(r dr) projection of a swirl profile onto the Dirichlet Bessel basis.

    Evaluator-backed fields use panel Gauss quadrature with panels fine
    enough for the most oscillatory mode; gridded fields integrate the
    piecewise-linear interpolant cell by cell with a Gauss rule, which stays
    at machine accuracy while lambda_m * h <= 2 and warns beyond that (the
    samples cannot represent such modes anyway).  Also warns when the
    reconstruction error exceeds `tol`: either increase m, or the data
    carries net circulation the Dirichlet basis cannot hold.
    """
    if u.kind != SWIRL:
        raise DomainError("mode projection expects a swirl field")
    if m < 1:
        raise DomainError("need at least one mode")
    lam = j1_zeros(m)
    norms = j1_squared_norm(lam)

    if u.evaluator is not None:
        n_panels = max(48, int(np.ceil(1.5 * lam[-1] / np.pi)))
        x, w = gauss_panels(0.0, 1.0, n_panels, order=order, splits=u.seam_radii)
        uv = np.asarray(u.evaluator(x), dtype=float)
        basis = j1(np.multiply.outer(lam, x))
        coeffs = basis @ (w * x * uv) / norms
        recon = basis.T @ coeffs
        num = float(np.dot(w * x, (recon - uv) ** 2))
        den = float(np.dot(w * x, uv**2))
    else:
        phase = lam[-1] * u.grid.max_spacing
        if phase > 2.0:
            warnings.warn(
                f"top mode advances {phase:.2f} radians per grid cell; sampled data "
                "cannot resolve it, coefficients beyond the grid scale are unreliable",
                ProjectionConditioningWarning,
                stacklevel=2,
            )
        coeffs = _project_gridded(u.grid.r, u.values, lam) / norms
        rg = u.grid.r
        wtrap = np.zeros_like(rg)
        dr = np.diff(rg)
        wtrap[:-1] += 0.5 * dr
        wtrap[1:] += 0.5 * dr
        recon = j1(np.multiply.outer(rg, lam)) @ coeffs
        num = float(np.dot(wtrap * rg, (recon - u.values) ** 2))
        den = float(np.dot(wtrap * rg, u.values**2))

    err = np.sqrt(num / den) if den > 0.0 else np.sqrt(num)
    if err > tol:
        warnings.warn(
            f"mode reconstruction error {err:.3e} exceeds {tol:.1e}; increase the "
            "mode count, or the profile holds circulation the basis cannot",
            ProjectionConditioningWarning,
            stacklevel=2,
        )
    return ModeExpansion(zeros=lam, coeffs=coeffs, recon_error=float(err))


def _project_gridded(r, vals, lam, block: int = 64):
    """Integrals int u(r) J1(lam r) r dr for the piecewise-linear interpolant.

    Per-cell Gauss rule; with 6 nodes the error per unit length scales like
    (lam h)^12, negligible for every mode the grid can represent.  (An exact
    antiderivative route through int_0^x J0 exists but the available special
    function for it loses all accuracy past x ~ 20.)
    """
    h = np.diff(r)
    slope = np.diff(vals) / h
    alpha = vals[:-1] - slope * r[:-1]  # u = alpha + slope * r on each cell
    xs, ws = leggauss(6)
    mid = 0.5 * (r[:-1] + r[1:])
    nodes = mid[:, None] + 0.5 * h[:, None] * xs[None, :]
    wts = 0.5 * h[:, None] * ws[None, :]
    f = ((alpha[:, None] + slope[:, None] * nodes) * nodes * wts).ravel()
    nodes = nodes.ravel()
    out = np.empty(lam.size)
    for s in range(0, lam.size, block):
        lb = lam[s:s + block]
        out[s:s + block] = j1(np.multiply.outer(lb, nodes)) @ f
    return out


# ---------------------------------------------------------------------------
# exact-in-time evolution


def time_samples(horizon: float, count: int = 9, first_fraction: float = 1e-3) -> np.ndarray:
    """t = 0 followed by a geometric ladder up to the horizon.

    Geometric spacing spends samples near t = 0 where the no-slip layer
    forms and the fields move fastest.
    """
    if horizon <= 0.0 or count < 2:
        raise DomainError("need a positive horizon and at least two samples")
    return np.concatenate([[0.0], np.geomspace(first_fraction * horizon, horizon, count - 1)])


@dataclass(frozen=True)
class Trajectory:
    """Sampled no-slip evolution of one initial swirl at one viscosity.

    `u` and `omega` are (times, radii) arrays; `initial_modes` regenerates
    either field exactly at any time via mode decay, so downstream
    quadratures are not tied to the sample grid.
    """

    nu: float
    times: np.ndarray
    grid: RadialGrid
    u: np.ndarray
    omega: np.ndarray
    initial_modes: ModeExpansion
    family_index: int = -1
    mass: float = float("nan")

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t[0] != 0.0 or not np.all(np.diff(t) > 0.0):
            raise DomainError("times must increase strictly from 0")
        if self.nu <= 0.0:
            raise DomainError("viscosity must be positive")
        if self.u.shape != (t.size, self.grid.m) or self.omega.shape != self.u.shape:
            raise DomainError("field arrays must be (times, radii)")
        object.__setattr__(self, "times", t)

    def modes_at(self, t: float) -> ModeExpansion:
        return self.initial_modes.decayed(self.nu, t)

    def eval_u(self, t: float, r):
        return self.modes_at(t).eval_u(r)

    def eval_omega(self, t: float, r):
        return self.modes_at(t).eval_omega(r)

    def l2_norm_sq(self, t: float) -> float:
        return self.modes_at(t).l2_norm_sq()

    def dissipation_time_integral(self, t: float) -> float:
        """int_0^t int |grad u|^2 dx ds, exact in mode space."""
        lam, c = self.initial_modes.zeros, self.initial_modes.coeffs
        w = j1_squared_norm(lam)
        return float(
            np.pi / self.nu
            * np.sum(c**2 * w * (1.0 - np.exp(-2.0 * self.nu * lam**2 * t)))
        )

    def energy_identity_residual(self, t: float) -> float:
        """|u(t)|^2 + 2 nu int_0^t |grad u|^2 - |u(0)|^2 (zero for exact decay)."""
        return (
            self.l2_norm_sq(t)
            + 2.0 * self.nu * self.dissipation_time_integral(t)
            - self.initial_modes.l2_norm_sq()
        )


def evolve(initial: ModeExpansion, nu: float, times, grid: RadialGrid = None,
           *, family_index: int = -1, mass: float = float("nan")) -> Trajectory:
    """Decay each mode exactly: u(r,t) = sum c_k exp(-nu lambda_k^2 t) J1(lambda_k r).

    The sampled vorticity rows come from the finite-difference curl of the
    sampled swirl (the mode-space curl is available through the trajectory's
    `eval_omega` and serves as the independent cross-check).
    """
    if grid is None:
        grid = RadialGrid.uniform()
    t = np.asarray(times, dtype=float)
    decay = np.exp(-nu * np.square(initial.zeros)[None, :] * t[:, None])
    basis = j1(np.multiply.outer(grid.r, initial.zeros))
    u = (decay * initial.coeffs[None, :]) @ basis.T
    u[:, 0] = 0.0
    omega = np.empty_like(u)
    for j in range(t.size):
        omega[j] = vorticity_from_velocity(RadialField(grid, u[j], SWIRL)).values
    return Trajectory(
        nu=nu, times=t, grid=grid, u=u, omega=omega,
        initial_modes=initial, family_index=family_index, mass=mass,
    )
