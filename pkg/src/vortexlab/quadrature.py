"""Shared quadrature rules.

Polar tensor grids (composite Gauss-Legendre in radius, midpoint in angle,
which is the trapezoid rule for periodic integrands) are the workhorse for
every 2D integral over the disk.  Panels can be split at known radii so that
piecewise-smooth integrands keep clean O(h^2)-or-better convergence.
"""
from __future__ import annotations

import numpy as np

__all__ = ["gauss_panels", "polar_grid", "gauss_window"]


def gauss_panels(a: float, b: float, n_panels: int, order: int = 6, splits=()):
    """Composite Gauss-Legendre nodes/weights on [a, b].

    `splits` lists interior radii where the integrand may lose smoothness;
    panel edges are forced to land on them.
    """
    edges = np.linspace(a, b, n_panels + 1)
    interior = [s for s in splits if a < s < b]
    if interior:
        edges = np.unique(np.concatenate([edges, np.asarray(interior, dtype=float)]))
    xg, wg = np.polynomial.legendre.leggauss(order)
    lo = edges[:-1][:, None]
    hi = edges[1:][:, None]
    nodes = 0.5 * (hi - lo) * xg[None, :] + 0.5 * (hi + lo)
    weights = 0.5 * (hi - lo) * wg[None, :]
    return nodes.ravel(), weights.ravel()


def polar_grid(
    r_lo: float,
    r_hi: float,
    n_radial_panels: int,
    n_theta: int,
    *,
    order: int = 6,
    splits=(),
    center=(0.0, 0.0),
):
    """Tensor polar quadrature for int f(x) dx over an annulus about `center`.

    Returns (points (N,2), weights (N,), rho (N,), theta (N,)); the weights
    already contain the rho drho dtheta Jacobian.
    """
    rho, wr = gauss_panels(r_lo, r_hi, n_radial_panels, order=order, splits=splits)
    theta = (np.arange(n_theta) + 0.5) * (2.0 * np.pi / n_theta)
    wt = 2.0 * np.pi / n_theta
    R, T = np.meshgrid(rho, theta, indexing="ij")
    W = (wr[:, None] * wt * rho[:, None]) * np.ones((1, n_theta))
    pts = np.empty(R.shape + (2,))
    pts[..., 0] = center[0] + R * np.cos(T)
    pts[..., 1] = center[1] + R * np.sin(T)
    return pts.reshape(-1, 2), W.ravel(), R.ravel(), T.ravel()


def gauss_window(t0: float, t1: float, n: int):
    """Gauss-Legendre nodes/weights on the time window [t0, t1]."""
    xg, wg = np.polynomial.legendre.leggauss(n)
    return 0.5 * (t1 - t0) * xg + 0.5 * (t1 + t0), 0.5 * (t1 - t0) * wg
