import numpy as np
import pytest
from scipy import special

from vortexlab.bessel import j0, j1, j1_squared_norm, j1_zeros
from vortexlab.errors import DomainError

# first zeros of J1 located by bisection on the power series
# sum_k (-1)^k/(k!(k+1)!) (x/2)^(2k+1), run independently of scipy
SERIES_BISECTION_ZEROS = np.array(
    [
        3.831705970207512,
        7.015586669815621,
        10.173468135062812,
        13.323691936316127,
        16.47063005086462,
    ]
)


def test_first_zeros_match_series_bisection():
    # the float64 series loses ~2 digits per zero to alternating-sum
    # cancellation, so the oracle itself is only good to ~1e-11 by the fifth
    z = j1_zeros(5)
    assert np.max(np.abs(z[:3] - SERIES_BISECTION_ZEROS[:3])) < 1e-12
    assert np.max(np.abs(z - SERIES_BISECTION_ZEROS)) < 2e-11


def test_first_zero_matches_quoted_value():
    assert j1_zeros(1)[0] == pytest.approx(3.8317059702, abs=1e-9)


def test_zero_spacing_approaches_pi():
    z = j1_zeros(200)
    gaps = np.diff(z)
    assert abs(gaps[-1] - np.pi) < 1e-4
    # spacing settles monotonically from above
    assert np.all(gaps > np.pi - 1e-12)
    assert np.all(np.diff(gaps) < 1e-12)


def test_zeros_cross_check_scipy_root_finder():
    m = 120
    assert np.max(np.abs(j1_zeros(m) - special.jn_zeros(1, m))) < 1e-11


def test_small_argument_series():
    x = np.array([1e-4, 1e-3, 1e-2])
    series = x / 2 - x**3 / 16
    assert np.allclose(j1(x), series, rtol=1e-8)
    assert j1(0.0) == 0.0


def test_weighted_norm_closed_form_matches_quadrature():
    lam = j1_zeros(6)
    r = np.linspace(0.0, 1.0, 200001)
    for lk in lam[[0, 2, 5]]:
        num = np.trapezoid(j1(lk * r) ** 2 * r, r)
        assert num == pytest.approx(j1_squared_norm(lk), rel=1e-8)


def test_values_at_zeros_are_tiny():
    z = j1_zeros(400)
    assert np.max(np.abs(j1(z))) < 5e-15


def test_zero_count_validation():
    with pytest.raises(DomainError):
        j1_zeros(0)
    with pytest.raises(DomainError):
        j1_zeros(-3)


def test_j0_j1_recurrence():
    # J1'(x) = J0(x) - J1(x)/x, checked by finite differences
    x = np.array([0.7, 2.3, 5.1, 9.9])
    h = 1e-6
    fd = (j1(x + h) - j1(x - h)) / (2 * h)
    assert np.allclose(fd, j0(x) - j1(x) / x, atol=1e-9)
