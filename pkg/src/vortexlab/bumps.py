"""Smooth compactly supported building blocks.

Everything here is assembled from the standard bump profile

    g(q) = exp(-1/(1-q))   for q < 1,   g(q) = 0 otherwise,

evaluated on squared, rescaled distances, so all functions are C-infinity
with exact plateaus (values 0 and 1 are attained exactly, not asymptotically).
That exactness is load-bearing: downstream identities (vanishing of
boundary-mollified cross terms, cutoff independence) rely on supports being
genuinely compact, not just numerically small.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import DomainError, SupportError

__all__ = [
    "bump_value",
    "bump_derivatives",
    "smooth_step",
    "Cutoff",
    "make_cutoff",
    "BoundaryCutoff",
    "make_boundary_cutoff",
    "Mollifier",
    "make_mollifier",
    "TestFunction",
    "make_test_function",
]

# beyond this q the profile underflows to exactly 0.0 in float64 anyway;
# masking there keeps the derivative formulas free of 0/0
_QCAP = 1.0 - 1e-8


def bump_value(q):
    """g(q) = exp(-1/(1-q)) extended by zero for q >= 1, vectorized."""
    q = np.asarray(q, dtype=float)
    out = np.zeros_like(q)
    m = q < _QCAP
    out[m] = np.exp(-1.0 / (1.0 - q[m]))
    return out


def bump_derivatives(q):
    """Return (g, g', g'') of the bump profile, elementwise.

    g'  = -g / (1-q)^2
    g'' =  g / (1-q)^4 - 2 g / (1-q)^3
    """
    q = np.asarray(q, dtype=float)
    g = np.zeros_like(q)
    g1 = np.zeros_like(q)
    g2 = np.zeros_like(q)
    m = q < _QCAP
    om = 1.0 - q[m]
    gm = np.exp(-1.0 / om)
    g[m] = gm
    g1[m] = -gm / om**2
    g2[m] = gm / om**4 - 2.0 * gm / om**3
    return g, g1, g2


def _stepvals(s):
    """Smooth step S with S=0 for s<=0, S=1 for s>=1, plus S' and S''.

    S(s) = u(s) / (u(s) + u(1-s)) with u(s) = exp(-1/s).  The maximum slope
    is S'(1/2) = 2, which fixes the Lipschitz constant of every cutoff here.
    """
    s = np.asarray(s, dtype=float)
    S = np.zeros_like(s)
    S1 = np.zeros_like(s)
    S2 = np.zeros_like(s)
    S[s >= 1.0 - 1e-12] = 1.0
    m = (s > 1e-12) & (s < 1.0 - 1e-12)
    if np.any(m):
        sm = s[m]
        u = np.exp(-1.0 / sm)
        v = np.exp(-1.0 / (1.0 - sm))
        up = u / sm**2
        vp = -v / (1.0 - sm) ** 2
        upp = u * (1.0 - 2.0 * sm) / sm**4
        vpp = v * (2.0 * sm - 1.0) / (1.0 - sm) ** 4
        D = u + v
        Dp = up + vp
        S[m] = u / D
        num = up * v - u * vp
        S1[m] = num / D**2
        S2[m] = ((upp * v - u * vpp) * D - 2.0 * Dp * num) / D**3
    return S, S1, S2


def smooth_step(s):
    """Value-only smooth step, for partition-of-unity weights in quadratures."""
    return _stepvals(s)[0]


def _as_radii(x):
    """Accept either radii or points of shape (..., 2); return radii."""
    x = np.asarray(x, dtype=float)
    if x.ndim >= 1 and x.shape[-1] == 2:
        return np.hypot(x[..., 0], x[..., 1])
    return x


@dataclass(frozen=True)
class Cutoff:
    """Radial interior cutoff chi: identically 1 on {r <= plateau}, 0 on {r >= a_out}.

    The plateau extends beyond a_in by a quarter of the transition width so
    that dist(supp(1-chi), {r <= a_in}) = eta is strictly positive.
    """

    a_in: float
    a_out: float
    plateau: float

    @property
    def eta(self) -> float:
        return self.plateau - self.a_in

    def _s(self, r):
        return (self.a_out - np.asarray(r, dtype=float)) / (self.a_out - self.plateau)

    def value_r(self, r):
        return _stepvals(self._s(r))[0]

    def d1_r(self, r):
        S1 = _stepvals(self._s(r))[1]
        return -S1 / (self.a_out - self.plateau)

    def d2_r(self, r):
        S2 = _stepvals(self._s(r))[2]
        return S2 / (self.a_out - self.plateau) ** 2

    def value(self, x):
        return self.value_r(_as_radii(x))

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        r = np.hypot(x[..., 0], x[..., 1])
        d1 = self.d1_r(r)
        with np.errstate(invalid="ignore", divide="ignore"):
            scale = np.where(r > 0, d1 / np.where(r > 0, r, 1.0), 0.0)
        return scale[..., None] * x

    def laplacian(self, x):
        r = _as_radii(x)
        d1 = self.d1_r(r)
        d2 = self.d2_r(r)
        out = np.zeros_like(r)
        m = r > 0
        out[m] = d2[m] + d1[m] / r[m]
        # at r = 0 the radial limit is 2 chi''(0); the plateau makes it 0 anyway
        out[~m] = 2.0 * d2[~m]
        return out

    def grad_norm_max(self) -> float:
        # max |S'| = 2 at midstep
        return 2.0 / (self.a_out - self.plateau)


def make_cutoff(a_in: float, a_out: float) -> Cutoff:
    """Build the interior cutoff with plateau {r <= a_in + (a_out-a_in)/4}."""
    if not (0.0 < a_in < a_out < 1.0):
        raise DomainError(f"need 0 < a_in < a_out < 1, got a_in={a_in}, a_out={a_out}")
    return Cutoff(a_in=a_in, a_out=a_out, plateau=a_in + 0.25 * (a_out - a_in))


@dataclass(frozen=True)
class BoundaryCutoff:
    """rho_k: 1 away from the boundary collar, 0 inside it.

    rho_k = 1 on {r <= 1 - 2/k}, rho_k = 0 on {r >= 1 - 1/k}, transition width
    1/k, so the gradient bound is max|grad rho_k| = 2k exactly.
    """

    k: int

    def _s(self, r):
        return ((1.0 - 1.0 / self.k) - np.asarray(r, dtype=float)) * self.k

    def value_r(self, r):
        return _stepvals(self._s(r))[0]

    def d1_r(self, r):
        return -self.k * _stepvals(self._s(r))[1]

    def value(self, x):
        return self.value_r(_as_radii(x))

    def grad_norm_max(self) -> float:
        return 2.0 * self.k


def make_boundary_cutoff(k: int) -> BoundaryCutoff:
    if int(k) != k or k < 3:
        raise DomainError(f"boundary cutoff index must be an integer >= 3, got {k}")
    return BoundaryCutoff(k=int(k))


def _base_mollifier_constant() -> float:
    # normalize c0 * int_{R^2} g(4|x|^2) dx = 1; the radial integral reduces to
    # (pi/4) * int_0^1 g(q) dq, and substituting u = 1-q gives int_0^1 e^{-1/u} du,
    # which is the exponential integral E_2(1)
    return 4.0 / (np.pi * special.expn(2, 1.0))


_C0 = None


def _c0() -> float:
    global _C0
    if _C0 is None:
        _C0 = _base_mollifier_constant()
    return _C0


@dataclass(frozen=True)
class Mollifier:
    """zeta_k(x) = k^2 zeta(kx): even, nonnegative, unit mass, support B(0, 1/(2k))."""

    k: int
    c0: float = field(repr=False, default=0.0)

    @property
    def radius(self) -> float:
        return 0.5 / self.k

    def value_r(self, s):
        s = np.asarray(s, dtype=float)
        return self.k**2 * self.c0 * bump_value(4.0 * (self.k * s) ** 2)

    def value(self, x):
        return self.value_r(_as_radii(x))


def make_mollifier(k: int) -> Mollifier:
    if int(k) != k or k < 1:
        raise DomainError(f"mollifier index must be an integer >= 1, got {k}")
    return Mollifier(k=int(k), c0=_c0())


@dataclass(frozen=True)
class TestFunction:
    """Separable space-time bump phi(t, x) = tau(t) * b(x).

    b(x) = g(|x - center|^2 / width^2), tau is the same profile mapped onto
    (t0, t1).  All derivatives are analytic, no finite differencing anywhere.
    The support closure is strictly inside (0, horizon) x (open unit disk).
    """

    center: np.ndarray
    width: float
    t0: float
    t1: float
    horizon: float
    seed: int | None = None

    # -- time factor -------------------------------------------------------
    def tau(self, t):
        s = (2.0 * np.asarray(t, dtype=float) - (self.t0 + self.t1)) / (self.t1 - self.t0)
        return bump_value(s**2)

    def dtau(self, t):
        t = np.asarray(t, dtype=float)
        s = (2.0 * t - (self.t0 + self.t1)) / (self.t1 - self.t0)
        g, g1, _ = bump_derivatives(s**2)
        return g1 * 2.0 * s * (2.0 / (self.t1 - self.t0))

    # -- space factor ------------------------------------------------------
    def _q(self, x):
        x = np.asarray(x, dtype=float)
        d = x - self.center
        return (d[..., 0] ** 2 + d[..., 1] ** 2) / self.width**2, d

    def b(self, x):
        q, _ = self._q(x)
        return bump_value(q)

    def grad_b(self, x):
        q, d = self._q(x)
        _, g1, _ = bump_derivatives(q)
        return (g1 * 2.0 / self.width**2)[..., None] * d

    def perp_grad_b(self, x):
        gb = self.grad_b(x)
        out = np.empty_like(gb)
        out[..., 0] = -gb[..., 1]
        out[..., 1] = gb[..., 0]
        return out

    def hess_b(self, x):
        """Second derivatives of b, shape (..., 2, 2)."""
        q, d = self._q(x)
        _, g1, g2 = bump_derivatives(q)
        w2 = self.width**2
        out = np.empty(d.shape[:-1] + (2, 2))
        dd = d[..., :, None] * d[..., None, :]
        out[...] = g2[..., None, None] * (4.0 / w2**2) * dd
        out[..., 0, 0] += g1 * 2.0 / w2
        out[..., 1, 1] += g1 * 2.0 / w2
        return out

    def laplacian_b(self, x):
        q, _ = self._q(x)
        _, g1, g2 = bump_derivatives(q)
        return (4.0 * q * g2 + 4.0 * g1) / self.width**2

    # -- combined fields ---------------------------------------------------
    def value(self, t, x):
        return self.tau(t) * self.b(x)

    def dt(self, t, x):
        return self.dtau(t) * self.b(x)

    def grad(self, t, x):
        return np.asarray(self.tau(t))[..., None] * self.grad_b(x)

    def perp_grad(self, t, x):
        return np.asarray(self.tau(t))[..., None] * self.perp_grad_b(x)

    def grad_perp_grad(self, t, x):
        """Tensor G_ij = d_j (perp grad phi)_i, shape (..., 2, 2)."""
        H = self.hess_b(x)
        G = np.empty_like(H)
        G[..., 0, 0] = -H[..., 1, 0]
        G[..., 0, 1] = -H[..., 1, 1]
        G[..., 1, 0] = H[..., 0, 0]
        G[..., 1, 1] = H[..., 0, 1]
        return np.asarray(self.tau(t))[..., None, None] * G

    @property
    def support_radius(self) -> float:
        return float(np.hypot(*self.center) + self.width)


def make_test_function(center, width, t0, t1, horizon) -> TestFunction:
    center = np.asarray(center, dtype=float).reshape(2)
    if width <= 0:
        raise SupportError(f"width must be positive, got {width}")
    if not (0.0 < t0 < t1 < horizon):
        raise SupportError(
            f"time window must satisfy 0 < t0 < t1 < horizon, got ({t0}, {t1}) in (0, {horizon})"
        )
    if np.hypot(*center) + width >= 1.0:
        raise SupportError(
            f"spatial support B({tuple(center)}, {width}) is not strictly inside the unit disk"
        )
    return TestFunction(center=center, width=float(width), t0=float(t0), t1=float(t1), horizon=float(horizon))
