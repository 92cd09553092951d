import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vortexlab.bumps import (
    bump_derivatives,
    bump_value,
    make_boundary_cutoff,
    make_cutoff,
    make_mollifier,
    make_test_function,
    smooth_step,
)
from vortexlab.errors import DomainError, SupportError


def central_diff(f, x, h=1e-6):
    return (f(x + h) - f(x - h)) / (2.0 * h)


@given(st.floats(min_value=-2.0, max_value=3.0, allow_nan=False))
@settings(max_examples=200, deadline=None)
def test_smooth_step_range_and_plateaus(s):
    v = smooth_step(s)
    assert 0.0 <= v <= 1.0
    if s <= 0.0:
        assert v == 0.0
    if s >= 1.0:
        assert v == 1.0


def test_bump_profile_derivatives_match_finite_differences():
    q = np.array([0.05, 0.3, 0.6, 0.85])
    g, g1, g2 = bump_derivatives(q)
    fd1 = central_diff(bump_value, q)
    assert np.allclose(g1, fd1, rtol=1e-7, atol=1e-10)
    fd2 = central_diff(lambda t: bump_derivatives(t)[1], q)
    assert np.allclose(g2, fd2, rtol=1e-6, atol=1e-8)
    assert np.all(g[q < 1] > 0)
    assert bump_value(1.0) == 0.0
    assert bump_value(2.0) == 0.0


def test_cutoff_plateaus_are_exact():
    chi = make_cutoff(0.6, 0.8)
    r = np.array([0.0, 0.3, 0.6, chi.plateau])
    assert np.all(chi.value_r(r) == 1.0)
    assert np.all(chi.value_r(np.array([0.8, 0.9, 1.0])) == 0.0)
    mid = chi.value_r(np.array([0.7, 0.75]))
    assert np.all((mid > 0.0) & (mid < 1.0))
    assert chi.eta == pytest.approx(0.05)


def test_cutoff_derivatives_match_finite_differences():
    chi = make_cutoff(0.5, 0.9)
    r = np.linspace(0.55, 0.89, 23)
    assert np.allclose(chi.d1_r(r), central_diff(chi.value_r, r), rtol=1e-6, atol=1e-9)
    assert np.allclose(chi.d2_r(r), central_diff(chi.d1_r, r), rtol=1e-6, atol=1e-7)


def test_cutoff_gradient_and_laplacian_agree_with_radial_forms():
    chi = make_cutoff(0.5, 0.9)
    x = np.array([[0.3, 0.6], [0.0, 0.75], [-0.5, 0.5]])
    r = np.hypot(x[:, 0], x[:, 1])
    g = chi.gradient(x)
    assert np.allclose(np.hypot(g[:, 0], g[:, 1]), np.abs(chi.d1_r(r)))
    lap = chi.laplacian(x)
    assert np.allclose(lap, chi.d2_r(r) + chi.d1_r(r) / r)


def test_cutoff_rejects_bad_radii():
    for a_in, a_out in [(0.0, 0.5), (0.5, 0.5), (0.6, 1.0), (-0.1, 0.4), (0.7, 0.3)]:
        with pytest.raises(DomainError):
            make_cutoff(a_in, a_out)


def test_boundary_cutoff_plateau_and_gradient_scale():
    consts = []
    for k in (4, 8, 16, 32):
        rho = make_boundary_cutoff(k)
        r = np.linspace(0.0, 1.0 - 2.0 / k, 50)
        assert np.all(rho.value_r(r) == 1.0)
        assert np.all(rho.value_r(np.linspace(1.0 - 1.0 / k, 1.0, 20)) == 0.0)
        rr = np.linspace(1.0 - 2.0 / k, 1.0 - 1.0 / k, 4001)
        consts.append(np.max(np.abs(rho.d1_r(rr))) / k)
    # one constant covers every k (the exact sampled max is 2)
    assert max(consts) < 2.0 + 1e-6
    assert min(consts) > 1.9


def test_boundary_cutoff_rejects_small_index():
    with pytest.raises(DomainError):
        make_boundary_cutoff(2)


@pytest.mark.parametrize("k", [1, 4, 16])
def test_mollifier_mass_support_and_symmetry(k):
    z = make_mollifier(k)
    assert z.radius == pytest.approx(0.5 / k)

    def trapz_mass(n):
        s = np.linspace(0.0, z.radius, n)
        return 2.0 * np.pi * np.trapezoid(z.value_r(s) * s, s)

    # one Richardson step on the h^2 trapezoid error
    mass = (4.0 * trapz_mass(40001) - trapz_mass(20001)) / 3.0
    assert mass == pytest.approx(1.0, abs=1e-11)
    s = np.linspace(0.0, z.radius, 2001)
    assert np.all(z.value_r(s) >= 0.0)
    assert z.value_r(z.radius) == 0.0
    assert z.value(np.array([0.3 / k, 0.0])) == z.value(np.array([-0.3 / k, 0.0]))


def test_test_function_derivatives_match_finite_differences():
    tf = make_test_function((0.2, -0.1), 0.35, 0.02, 0.08, 0.1)
    t = 0.05
    x = np.array([[0.25, 0.0], [0.1, -0.2], [0.45, -0.15]])
    h = 1e-6
    fd_t = (tf.value(t + h, x) - tf.value(t - h, x)) / (2 * h)
    assert np.allclose(tf.dt(t, x), fd_t, rtol=1e-6, atol=1e-9)
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        fd = (tf.value(t, x + e) - tf.value(t, x - e)) / (2 * h)
        assert np.allclose(tf.grad(t, x)[:, j], fd, rtol=1e-6, atol=1e-9)
        fd_h = (tf.grad_b(x + e) - tf.grad_b(x - e)) / (2 * h)
        assert np.allclose(tf.hess_b(x)[:, :, j], fd_h, rtol=1e-5, atol=1e-7)
    lap = tf.hess_b(x)[:, 0, 0] + tf.hess_b(x)[:, 1, 1]
    assert np.allclose(tf.laplacian_b(x), lap, rtol=1e-12)


def test_test_function_field_is_divergence_free():
    tf = make_test_function((0.1, 0.3), 0.3, 0.01, 0.09, 0.1)
    x = np.array([[0.15, 0.35], [0.0, 0.2], [0.3, 0.4]])
    G = tf.grad_perp_grad(0.05, x)
    # div(perp grad phi) = trace of the tensor = 0 identically
    assert np.allclose(G[:, 0, 0] + G[:, 1, 1], 0.0, atol=1e-15)


def test_test_function_support_validation():
    with pytest.raises(SupportError):
        make_test_function((0.8, 0.0), 0.3, 0.02, 0.08, 0.1)  # pokes out of the disk
    with pytest.raises(SupportError):
        make_test_function((0.0, 0.0), 0.3, 0.0, 0.08, 0.1)  # window touches t = 0
    with pytest.raises(SupportError):
        make_test_function((0.0, 0.0), 0.3, 0.02, 0.1, 0.1)  # window touches horizon
    with pytest.raises(SupportError):
        make_test_function((0.0, 0.0), -0.1, 0.02, 0.08, 0.1)


def test_test_function_support_is_compact():
    tf = make_test_function((0.2, 0.0), 0.25, 0.02, 0.08, 0.1)
    assert tf.value(0.05, np.array([0.46, 0.0])) == 0.0
    assert tf.value(0.019, np.array([0.2, 0.0])) == 0.0
    assert tf.value(0.081, np.array([0.2, 0.0])) == 0.0
    assert tf.value(0.05, np.array([0.2, 0.0])) > 0.0
