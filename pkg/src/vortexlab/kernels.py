"""Dirichlet kernels of the unit disk and Biot-Savart velocity recovery.

The Green's function of the Laplacian with homogeneous Dirichlet data is
computed by the reflection construction

    G(x, y) = (1/2pi) * ln( |x - y| / sqrt(|x|^2 |y|^2 - 2 x.y + 1) ),

where the denominator equals |y| * |x - y/|y|^2| for y != 0 and extends
smoothly to 1 at y = 0.  The Biot-Savart kernel is the exact perp gradient

    K(x, y) = (1/2pi) * [ perp(x-y)/|x-y|^2 - perp(x|y|^2 - y)/(|x|^2|y|^2 - 2 x.y + 1) ],

perp(v) = (-v2, v1).  Written this way the two terms cancel exactly (in
floating point, not just analytically) when |y| = 1, so the kernel vanishes
identically for boundary sources.
"""
from __future__ import annotations

import numpy as np

from .bumps import TestFunction, smooth_step
from .errors import CoincidentPointsError, DomainError, QuadratureError
from .quadrature import polar_grid

__all__ = [
    "validate_points",
    "green_function",
    "biot_savart_kernel",
    "symmetrized_advection_kernel",
    "velocity_from_vorticity",
]

_DISK_SLACK = 1e-12
_COINCIDENT = 1e-14


def validate_points(x) -> np.ndarray:
    """Return points as an (..., 2) float array, rejecting any outside the closed disk."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2:
        raise DomainError(f"points must have trailing dimension 2, got shape {x.shape}")
    r2 = x[..., 0] ** 2 + x[..., 1] ** 2
    if np.any(r2 > 1.0 + _DISK_SLACK):
        worst = float(np.sqrt(r2.max()))
        raise DomainError(f"point outside the closed unit disk, |x| = {worst}")
    return x


def _pair_arrays(x, y):
    x = validate_points(x)
    y = validate_points(y)
    x, y = np.broadcast_arrays(x, y)
    return np.atleast_2d(x), np.atleast_2d(y)


def _image_denominator_sq(x, y):
    # |x|^2 |y|^2 - 2 x.y + 1  ==  (|y| |x - y/|y|^2|)^2, smooth through y = 0
    x2 = x[..., 0] ** 2 + x[..., 1] ** 2
    y2 = y[..., 0] ** 2 + y[..., 1] ** 2
    dot = x[..., 0] * y[..., 0] + x[..., 1] * y[..., 1]
    return x2 * y2 - 2.0 * dot + 1.0


def green_function(x, y):
    """Dirichlet Green's function of the Laplacian on the unit disk, vectorized over pairs."""
    x, y = _pair_arrays(x, y)
    d = np.hypot(x[..., 0] - y[..., 0], x[..., 1] - y[..., 1])
    if np.any(d < _COINCIDENT):
        raise CoincidentPointsError(f"pair distance below {_COINCIDENT}")
    s2 = _image_denominator_sq(x, y)
    return np.log(d / np.sqrt(s2)) / (2.0 * np.pi)


def _perp(v):
    out = np.empty_like(v)
    out[..., 0] = -v[..., 1]
    out[..., 1] = v[..., 0]
    return out


def biot_savart_kernel(x, y):
    """K(x, y) = perp grad_x G(x, y); shape (..., 2).

    Exactly the zero vector when the source y sits on the boundary circle
    (within rounding of |y|^2): the free and image contributions cancel
    analytically there, and we zero the rounding residue so that boundary
    sources genuinely induce no flow.
    """
    x, y = _pair_arrays(x, y)
    diff = x - y
    d2 = diff[..., 0] ** 2 + diff[..., 1] ** 2
    if np.any(d2 < _COINCIDENT**2):
        raise CoincidentPointsError(f"pair distance below {_COINCIDENT}")
    s2 = _image_denominator_sq(x, y)
    y2 = (y[..., 0] ** 2 + y[..., 1] ** 2)[..., None]
    image = x * y2 - y
    out = (_perp(diff) / d2[..., None] - _perp(image) / s2[..., None]) / (2.0 * np.pi)
    out[np.broadcast_to(y2 >= 1.0 - 4e-16, out.shape)] = 0.0
    return out


def symmetrized_advection_kernel(tf: TestFunction, t, x, y):
    """Symmetrized advection pairing 0.5*[K(x,y).grad phi(t,x) + K(y,x).grad phi(t,y)].

    Bounded up to (but not on) the diagonal: the singular parts of the two
    kernel evaluations cancel against the gradient difference.
    """
    x, y = _pair_arrays(x, y)
    kxy = biot_savart_kernel(x, y)
    kyx = biot_savart_kernel(y, x)
    gx = tf.grad(t, x)
    gy = tf.grad(t, y)
    return 0.5 * (np.sum(kxy * gx, axis=-1) + np.sum(kyx * gy, axis=-1))


class _RadialProfile:
    """Normalize the accepted omega inputs to eval(r) plus a support interval."""

    def __init__(self, omega, support):
        if callable(omega):
            self.eval = omega
            self.support = (0.0, 1.0) if support is None else tuple(support)
        else:
            self.eval = omega.eval
            self.support = tuple(omega.support) if support is None else tuple(support)
        lo, hi = self.support
        if not (0.0 <= lo < hi <= 1.0):
            raise DomainError(f"support must be inside [0, 1], got {self.support}")


def velocity_from_vorticity(
    omega,
    points,
    *,
    support=None,
    tol: float = 1e-6,
    base_radial_panels: int = 24,
    base_theta: int = 192,
    max_refine: int = 4,
):
    """Velocity u(x) = int K(x, y) omega(|y|) dy by adaptive polar quadrature.

    omega is either a callable radial profile or an object with .eval and
    .support.  The near-singular part is handled with a smooth partition of
    unity: a bump supported in a ball of radius three radial spacings around
    each target is integrated in local polar coordinates (where K's singular
    factor cancels against the Jacobian), the remainder over the global grid.

    Returns (velocities (N,2), error_estimate).  Raises QuadratureError if
    doubling the resolution max_refine times never brings the successive
    change below tol.
    """
    prof = _RadialProfile(omega, support)
    pts = np.atleast_2d(validate_points(points))
    r_lo, r_hi = prof.support
    # the partition ball is fixed at three base-grid spacings and kept fixed
    # across refinements, so successive levels approximate the same split
    h_rad = (r_hi - r_lo) / (base_radial_panels * 6)
    h_arc = 2.0 * np.pi * r_hi / base_theta
    ball = 3.0 * max(h_rad, h_arc)
    prev = None
    n_rad, n_th = base_radial_panels, base_theta
    for level in range(max_refine + 1):
        cur = _velocity_once(prof, pts, n_rad, n_th, ball, level)
        if prev is not None:
            err = float(np.max(np.hypot(cur[:, 0] - prev[:, 0], cur[:, 1] - prev[:, 1])))
            if err < tol:
                return cur, err
        prev = cur
        n_rad *= 2
        n_th *= 2
    raise QuadratureError(
        f"velocity quadrature did not converge to {tol} within {max_refine} refinements"
    )


def _velocity_once(prof, pts, n_radial_panels, n_theta, ball, level):
    r_lo, r_hi = prof.support
    y, w, rho, _ = polar_grid(r_lo, r_hi, n_radial_panels, n_theta)
    om = prof.eval(rho)
    live = om != 0.0
    y, w, om = y[live], w[live], om[live]

    out = np.empty((pts.shape[0], 2))
    for i, x in enumerate(pts):
        d = np.hypot(y[:, 0] - x[0], y[:, 1] - x[1])
        # smooth partition: weight 1 outside the ball, 0 inside half of it
        far = 1.0 - smooth_step((ball - d) / (0.5 * ball))
        mask = (d > _COINCIDENT) & (far > 0.0)
        k = biot_savart_kernel(np.broadcast_to(x, (int(mask.sum()), 2)), y[mask])
        contrib = (w[mask] * om[mask] * far[mask])[:, None] * k
        # both local resolutions refine with the level so the successive-level
        # difference tracks whichever piece converges slowest
        out[i] = contrib.sum(axis=0) + _local_ball_part(
            prof, x, ball, n_s=12 * 2**level, n_alpha=64 * 2**level
        )
    return out


def _local_ball_part(prof, x, ball, n_s: int = 12, n_alpha: int = 64):
    """Ball integral of the partition bump times K omega, in local polar coordinates.

    The free-space factor of K times the Jacobian s ds dalpha is bounded, so a
    plain tensor rule converges fast.  The image part is smooth outright.
    """
    r_lo, r_hi = prof.support
    r = float(np.hypot(*x))
    if max(r_lo - r, r - r_hi) > ball:
        return np.zeros(2)
    xg, wg = np.polynomial.legendre.leggauss(n_s)
    s = 0.5 * ball * (xg + 1.0)
    ws = 0.5 * ball * wg
    alpha = (np.arange(n_alpha) + 0.5) * (2.0 * np.pi / n_alpha)
    wa = 2.0 * np.pi / n_alpha
    S, A = np.meshgrid(s, alpha, indexing="ij")
    Y = np.empty(S.shape + (2,))
    Y[..., 0] = x[0] + S * np.cos(A)
    Y[..., 1] = x[1] + S * np.sin(A)
    ry = np.hypot(Y[..., 0], Y[..., 1])
    om = np.where(ry <= 1.0, prof.eval(np.minimum(ry, 1.0)), 0.0)
    bump = smooth_step((ball - S) / (0.5 * ball))
    # free-space part: K_free * s = -perp(shat)/(2 pi)
    shat_perp = np.empty_like(Y)
    shat_perp[..., 0] = -np.sin(A)
    shat_perp[..., 1] = np.cos(A)
    integrand = -shat_perp / (2.0 * np.pi) * (om * bump)[..., None]
    # image part is smooth through the ball; include the s Jacobian explicitly
    y2 = ry**2
    s2 = (x[0] ** 2 + x[1] ** 2) * y2 - 2.0 * (x[0] * Y[..., 0] + x[1] * Y[..., 1]) + 1.0
    image = np.empty_like(Y)
    image[..., 0] = x[0] * y2 - Y[..., 0]
    image[..., 1] = x[1] * y2 - Y[..., 1]
    integrand = integrand - _perp(image) / (2.0 * np.pi * s2[..., None]) * (S * om * bump)[..., None]
    return np.einsum("sa...,s->...", integrand.reshape(n_s, n_alpha, 2), ws) * wa
