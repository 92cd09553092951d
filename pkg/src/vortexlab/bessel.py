"""First-order Bessel machinery for the Dirichlet swirl eigenbasis.

J1 itself comes from scipy.special (mature, exhaustively tested).  The zeros
are located here by sign-scan bracketing plus Brent refinement; the first few
are pinned in the tests against an independent power-series bisection run.
The weighted norms use the closed form int_0^1 J1(lam r)^2 r dr = J0(lam)^2/2,
valid exactly at zeros of J1.
"""
from __future__ import annotations

import numpy as np
from scipy import special
from scipy.optimize import brentq

from .errors import DomainError

__all__ = ["j0", "j1", "j1_zeros", "j1_squared_norm"]


def j1(x):
    """Bessel function of the first kind, order 1 (vectorized)."""
    return special.j1(np.asarray(x, dtype=float))


def j0(x):
    """Bessel function of the first kind, order 0 (vectorized)."""
    return special.j0(np.asarray(x, dtype=float))


_zero_cache: list[float] = []


def j1_zeros(m: int) -> np.ndarray:
    """First m positive zeros of J1, each to ~1e-14 absolute accuracy.

    Zeros are bracketed by a sign scan with step 0.2 (safe, the asymptotic
    spacing is pi) and polished with brentq.  Results are cached; asking for
    more zeros only extends the scan.
    """
    if int(m) != m or m < 1:
        raise DomainError(f"zero count must be a positive integer, got {m}")
    m = int(m)
    if len(_zero_cache) >= m:
        return np.array(_zero_cache[:m])

    x = _zero_cache[-1] + 1.0 if _zero_cache else 2.0
    step = 0.2
    f_prev = j1(x)
    while len(_zero_cache) < m:
        x_next = x + step
        f_next = j1(x_next)
        if f_prev == 0.0:  # pragma: no cover - scan points are irrational in practice
            _zero_cache.append(float(x))
        elif f_prev * f_next < 0.0:
            root = brentq(special.j1, x, x_next, xtol=1e-14, rtol=8.9e-16)
            _zero_cache.append(float(root))
        x, f_prev = x_next, f_next
    return np.array(_zero_cache[:m])


def j1_squared_norm(lam) -> np.ndarray:
    """Weighted norm int_0^1 J1(lam r)^2 r dr for lam a zero of J1."""
    return 0.5 * j0(lam) ** 2
