import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from modsurf.autoforms import eisenstein_series
from modsurf.errors import DomainError
from modsurf.geometry import (VOLUME_FUNDAMENTAL_DOMAIN, Ball, Point, ball_quadrature, ball_volume,
                              fundamental_domain_rule, polar_rule)
from modsurf.kernels import (KernelProfile, asymptotic_h, automorphic_kernel, ball_kernel, h_R,
                             h_R_derivative_at_i_half, k_R, shc_pipeline)
from modsurf.specfun import bessel_J


def test_k_R_values():
    R = 0.5
    assert k_R(0.0, R) == pytest.approx(1 / (4 * math.pi * math.sinh(0.25) ** 2), rel=1e-15)
    assert k_R(math.sinh(R / 2) ** 2 + 1e-9, R) == 0.0


def test_k_R_integrates_to_one():
    R = 0.7
    nodes, weights = polar_rule(0.2 + 1.3j, R, 20, 8)
    # the polar rule covers the ball exactly, k_R is constant inside
    total = float(np.sum(weights * k_R(np.zeros(nodes.size), R)))
    assert total == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("t", [0.0, 1.0, 10.0, 50.0])
def test_pipeline_matches_closed_form(t):
    res = shc_pipeline(ball_kernel(0.3))
    assert abs(res.h(t) - h_R(t, 0.3)) < 1e-6


def test_pipeline_sup_over_grid():
    res = shc_pipeline(ball_kernel(0.3))
    ts = np.linspace(0, 100, 401)
    assert np.max(np.abs(res.h(ts) - h_R(ts, 0.3))) <= 1e-5


def test_pipeline_h0_is_integral_of_g():
    res = shc_pipeline(ball_kernel(0.4))
    x, w = np.polynomial.legendre.leggauss(200)
    r = res.radius * 0.5 * (x + 1)
    # g has a square-root edge at r_max, so compare loosely against plain Gauss-Legendre
    integral = 2 * float(np.sum(0.5 * res.radius * w * res.g(r)))
    assert res.h(0.0) == pytest.approx(integral, rel=1e-4)


def test_pipeline_with_breakpoint():
    # a two-step profile: its transform is the volume-weighted mix of two ball transforms
    R1, R2 = 0.2, 0.5
    b1, b2 = math.sinh(R1 / 2) ** 2, math.sinh(R2 / 2) ** 2
    v1, v2 = ball_volume(R1), ball_volume(R2)

    def k(u):
        u = np.asarray(u, dtype=float)
        return np.where(u <= b1, 0.5 / v1, 0.0) + np.where(u <= b2, 0.5 / v2, 0.0)

    res = shc_pipeline(KernelProfile(k, b2, (b1,), "two-step"))
    for t in (0.0, 3.0, 12.0):
        expected = 0.5 * h_R(t, R1) + 0.5 * h_R(t, R2)
        assert abs(res.h(t) - expected) < 1e-8


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 200), st.floats(1e-3, 2))
def test_h_real_and_even(t, R):
    a, b = h_R(t, R), h_R(-t, R)
    assert a == b
    assert isinstance(a, float)


def test_h_examples():
    assert abs(h_R(1.0, 1e-3) - 1) < 1e-6
    assert abs(h_R(1000.0, 1e-3) - 2 * bessel_J(1, 1.0)) < 1e-4
    for R in (0.01, 0.3, 1.0):
        assert abs(h_R(0.5j, R) - 1) < 1e-10
    with pytest.raises(DomainError):
        h_R(2j, 0.3)


def test_h_derivative():
    val = h_R_derivative_at_i_half(0.01)
    assert val == pytest.approx(1.25e-5, rel=0.02)
    # centred difference along the imaginary axis: i h'(i/2) = d/dy h(iy) at y = 1/2
    R, eps = 0.5, 1e-4
    fd = (h_R(1j * (0.5 + eps), R) - h_R(1j * (0.5 - eps), R)).real / (2 * eps)
    assert abs(h_R_derivative_at_i_half(R) - fd) < 1e-6
    for R in (1e-3, 1e-2, 0.1, 1.0):
        assert h_R_derivative_at_i_half(R) > 0


def test_asymptotic_regimes():
    assert asymptotic_h(1e-3, 10) == (1, 1.0)
    regime, value = asymptotic_h(1e-3, 1e4)
    assert regime == 2 and value == pytest.approx(0.0086945, abs=5e-8)
    regime, value = asymptotic_h(1e-3, 1e6)
    assert regime == 3 and abs(h_R(1e6, 1e-3) - value) <= 1e-4
    # adjacent regimes agree at the crossovers to 1e-3
    for x in (0.05, 30.0):
        lo = asymptotic_h(1.0, x * (1 - 1e-9))[1]
        hi = asymptotic_h(1.0, x * (1 + 1e-9))[1]
        assert abs(lo - hi) < 1e-3


def test_automorphic_kernel_generic_point():
    z = 0.13 + 1.21j
    R = 0.05
    assert automorphic_kernel(z, z, R) == pytest.approx(1 / ball_volume(R), rel=1e-15)


def test_automorphic_kernel_symmetry():
    rng = np.random.default_rng(2)
    for _ in range(50):
        z = complex(rng.uniform(-0.5, 0.5), rng.uniform(0.9, 2.0))
        w = complex(rng.uniform(-0.5, 0.5), rng.uniform(0.9, 2.0))
        R = rng.uniform(0.1, 1.5)
        assert automorphic_kernel(z, w, R) == automorphic_kernel(w, z, R)


def test_automorphic_kernel_unfolds_to_one():
    # int_F K_R(z, w) d mu(z) = int_H k_R d mu = 1; integrate over z on a fine rule
    w = 0.2 + 1.1j
    R = 0.6
    nodes, weights = fundamental_domain_rule(160)
    vals = np.array([automorphic_kernel(z, w, R) for z in nodes])
    total = float(np.sum(weights * vals))
    # discontinuous integrand: the product rule converges slowly, so allow a few percent
    assert total == pytest.approx(1.0, rel=3e-2)


def test_injectivity_against_word_search():
    # exhaustive search over words of length <= 10 finds only the identity within 0.05 of z
    from modsurf.geometry import hyperbolic_distance, matmul, mobius, orbit_points_near
    z = 0.13 + 1.21j
    gens = [(0, -1, 1, 0), (1, 1, 0, 1), (1, -1, 0, 1)]
    frontier, seen = {(1, 0, 0, 1)}, {(1, 0, 0, 1)}
    for _ in range(10):
        frontier = {matmul(g, m) for m in frontier for g in gens} - seen
        seen |= frontier
    close = {m if (m[2], m[3]) > (0, 0) or (m[2] == 0 and m[3] > 0) else tuple(-v for v in m)
             for m in seen if hyperbolic_distance(mobius(m, z), z) <= 0.05}
    assert close == {(1, 0, 0, 1)}
    assert [m for m, _ in orbit_points_near(z, z, 0.05)] == [(1, 0, 0, 1)]


def test_automorphic_kernel_radius_guard():
    with pytest.raises(DomainError):
        automorphic_kernel(1j, 1j, 3.0)


@pytest.mark.parametrize("t", [0.0, 4.2, 9.7])
@pytest.mark.parametrize("R", [0.05, 0.2, 0.5])
@pytest.mark.parametrize("w", [1j, 0.25 + 2j])
def test_mean_value_identity(t, R, w):
    E = eisenstein_series(0.5 + 1j * t)
    ball = Ball(Point.of(w), R)
    avg = ball_quadrature(E, ball, tol=1e-11).value / ball_volume(R)
    fw = E(w)
    assert abs(avg - h_R(t, R) * fw) <= 1e-4 * (1 + abs(fw))


def test_mean_value_fails_for_truncated_series_in_cusp():
    # a ball straddling the truncation height sees the jump of the constant term, so the
    # identity breaks; the integrand is discontinuous, hence a fixed dense rule
    t, R, T = 4.2, 0.5, 2.0
    E = eisenstein_series(0.5 + 1j * t)
    w = 0.1 + 2.2j
    nodes, weights = polar_rule(w, R, 200, 400)
    avg = np.sum(weights * E.truncated(nodes, T)) / ball_volume(R)
    assert abs(avg - h_R(t, R) * E.truncated(w, T)) > 1e-2
    # inside the band the truncated series is E itself and the identity holds
    w = 0.1 + 1.2j
    ball = Ball(Point.of(w), 0.2)
    avg = ball_quadrature(lambda z: E.truncated(z, T), ball, tol=1e-11).value / ball_volume(0.2)
    assert abs(avg - h_R(t, 0.2) * E.truncated(w, T)) <= 1e-4
