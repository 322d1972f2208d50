import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from modsurf import specfun as sf
from modsurf.errors import DomainError, PoleError
from modsurf.kbessel import KTable, bessel_K, bessel_K_scaled


def test_log_gamma_values():
    assert abs(sf.log_gamma(1.0)) < 1e-15
    assert abs(sf.log_gamma(0.5) - 0.5723649429247001) < 1e-13
    # t = u^4 removes the endpoint singularity of t^(-3/4) e^(-t)
    gamma_quarter = mpmath.quad(lambda u: 4 * mpmath.exp(-u**4), [0, 1, mpmath.inf])
    assert abs(sf.log_gamma(0.25) - math.log(gamma_quarter)) < 1e-12


def test_log_gamma_poles():
    for s in (0, -1, -3):
        with pytest.raises(PoleError):
            sf.log_gamma(s)


@pytest.mark.parametrize("s", [0.3 + 200j, -4.5 + 1j, 9.0 - 9000j])
def test_log_gamma_against_mpmath(s):
    ref = complex(mpmath.loggamma(s))
    assert abs(sf.log_gamma(s) - ref) < 1e-10 * max(1, abs(ref))


def test_zeta_values():
    assert abs(sf.zeta(2) - math.pi**2 / 6) < 1e-14
    assert abs(sf.zeta(-1) + 1 / 12) < 1e-14
    assert abs(sf.zeta(0.5 + 14.1347251417j)) < 1e-6
    with pytest.raises(PoleError):
        sf.zeta(1)


@pytest.mark.parametrize("s", [0.5 + 100j, 1 + 1000j, -1.5 + 30j, 2.7 - 5j, 0.25 + 9999j])
def test_zeta_against_mpmath(s):
    ref = complex(mpmath.zeta(s))
    assert abs(sf.zeta(s) - ref) < 1e-10 * max(1, abs(ref))


def test_zeta_log_derivative_against_mpmath():
    s = 1 + 10j
    ref = complex(mpmath.zeta(s, derivative=1) / mpmath.zeta(s))
    assert abs(sf.zeta_log_derivative(s) - ref) < 1e-11


def test_completed_zeta_values():
    assert abs(sf.completed_zeta(0.3) - sf.completed_zeta(0.7)) < 1e-13
    assert abs(sf.completed_zeta(2) - math.pi / 6) < 1e-14
    a, b = sf.completed_zeta(0.5 + 5j), sf.completed_zeta(0.5 - 5j)
    assert abs(a - b.conjugate()) < 1e-15
    with pytest.raises(PoleError):
        sf.completed_zeta(1)


def test_functional_equation_grid():
    rng = np.random.default_rng(5)
    for _ in range(100):
        s = complex(rng.uniform(0.1, 0.9), rng.uniform(-50, 50))
        a, b = sf.completed_zeta(s), sf.completed_zeta(1 - s)
        assert abs(a - b) <= 1e-10 * abs(a)


@pytest.mark.parametrize("t", [0.5, 1, 5, 7.3, 25, 100])
def test_phi_unimodular(t):
    assert abs(abs(sf.phi(0.5 + 1j * t)) - 1) < 1e-10


def test_phi_real_point_and_centre():
    assert abs(sf.phi(0.75) - sf.completed_zeta(0.5) / sf.completed_zeta(1.5)) < 1e-14
    assert abs(sf.phi(0.5) + 1) < 1e-14


@pytest.mark.parametrize("t", [2.0, 5.0, 10.0])
def test_phi_log_derivative_finite_difference(t):
    h = 1e-5
    # d/dt log phi(1/2+it) = i phi'/phi; phi is unimodular so take the phase
    fd = (np.angle(sf.phi(0.5 + 1j * (t + h)) / sf.phi(0.5 + 1j * (t - h)))) / (2 * h)
    expected = -4 * sf.completed_zeta_log_derivative(1 + 2j * t).real
    assert abs(fd - expected) < 1e-6 * max(1, abs(expected))
    assert abs(sf.phi_log_derivative(0.5 + 1j * t) - expected) < 1e-10 * max(1, abs(expected))


@pytest.mark.parametrize("t", [5, 10, 50, 500])
def test_digamma_stirling(t):
    lhs = 2 * sf.digamma(0.5 + 1j * t).real - math.log(0.25 + t * t)
    assert abs(lhs) <= 1 / t


def test_dirichlet_L_values():
    assert abs(sf.dirichlet_L(1, -4) - math.pi / 4) < 1e-13
    assert abs(sf.dirichlet_L(1, 5) - 2 * math.log((1 + math.sqrt(5)) / 2) / math.sqrt(5)) < 1e-13
    # direct character sum with alternating-block tail bound
    n = np.arange(1, 3_000_001)
    chi = np.array([0, 1, -1])[n % 3]
    direct = float(np.sum(chi / n.astype(float) ** 2))
    assert abs(sf.dirichlet_L(2, -3) - direct) < 1e-10
    with pytest.raises(DomainError):
        sf.dirichlet_L(2, 12 * 4)


@pytest.mark.parametrize("d,s", [(-23, 0.5 + 3j), (13, 2), (-84, 1.5 + 1j), (8, 0.7)])
def test_dirichlet_L_against_mpmath(d, s):
    q = abs(d)
    ref = complex(sum(sf.kronecker(d, a) * mpmath.zeta(s, mpmath.mpf(a) / q) for a in range(1, q)) * mpmath.mpf(q) ** (-s))
    assert abs(sf.dirichlet_L(s, d) - ref) < 1e-11


def test_kronecker_array_matches_scalar():
    n = np.arange(1, 400)
    for d in (-4, -23, 5, 12, -84, 60, 21):
        assert np.array_equal(sf.kronecker_array(d, n), [sf.kronecker(d, int(k)) for k in n])


def test_bessel_J_values():
    assert sf.bessel_J(0, 0.0) == 1.0
    assert abs(sf.bessel_J(1, 1.0) - 0.4400505857449335) < 1e-14
    def series(k, x):
        return sum((-1) ** m / (math.factorial(m) * math.factorial(m + k)) * (x / 2) ** (2 * m + k) for m in range(30))

    oracle = series(0, 1.0) ** 2 + series(1, 1.0) ** 2
    assert abs(oracle - 0.7791720) < 1e-7
    assert abs(sf.bessel_J(0, 1.0) ** 2 + sf.bessel_J(1, 1.0) ** 2 - oracle) < 1e-14


def test_bessel_K_closed_forms():
    assert abs(bessel_K(0.5, 1.0) - math.sqrt(math.pi / 2) / math.e) < 1e-14
    oracle = mpmath.quad(lambda u: mpmath.exp(-mpmath.cosh(u)), [0, 5, 40])
    assert abs(bessel_K(0, 1.0) - float(oracle)) < 1e-14
    assert abs(bessel_K(3.7j, 2.0).imag) < 1e-12
    with pytest.raises(DomainError):
        bessel_K(1j, 0.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 250), st.floats(0.05, 300))
def test_bessel_K_imaginary_order_against_mpmath(t, x):
    got = bessel_K_scaled(1j * t, x)
    ref = complex(mpmath.besselk(1j * t, x) * mpmath.exp(math.pi * t / 2))
    assert got.imag == pytest.approx(0, abs=1e-12 * max(1, abs(ref)))
    assert abs(got - ref) <= 1e-10 * max(abs(ref), 1e-300) + 1e-290


@given(st.floats(0, 100), st.floats(0.1, 60))
@settings(max_examples=30, deadline=None)
def test_bessel_K_conjugate_order(t, x):
    assert bessel_K(1j * t, x) == bessel_K(-1j * t, x)


def test_ktable_against_direct():
    nu = 0.5j * 37.2
    table = KTable(nu, 0.3)
    xs = np.linspace(0.3, 40, 57)
    got = table(xs)
    ref = np.array([bessel_K_scaled(nu, x).real for x in xs])
    assert np.max(np.abs(got - ref)) < 1e-11 * np.max(np.abs(ref))


def test_eta_values():
    eta_i = math.gamma(0.25) / (2 * math.pi**0.75)
    assert abs(sf.dedekind_eta(1j) - eta_i) < 1e-14
    w = 0.2 + 0.8j
    assert abs(sf.dedekind_eta(w + 1) - sf.dedekind_eta(w) * np.exp(2j * math.pi / 24)) < 1e-14
    a = abs(2 * sf.dedekind_eta(2j) ** 4)
    b = abs(0.5 * sf.dedekind_eta(-1 / 2j) ** 4)
    assert abs(a - b) < 1e-10
    assert abs(math.log(abs(4 * sf.dedekind_eta(1j) ** 4)) - 0.3316060801242191) < 1e-13


def test_gamma_factor_ratio():
    assert abs(sf.gamma_factor_ratio(40, 100) - 1) <= 0.15
    # the main term carries exp(-pi * Omega) with Omega = t_f - 2 t_g beyond the transition
    assert sf.gamma_factor_main_term(12, 5) == pytest.approx(
        8 * math.pi**2 * math.exp(-2 * math.pi) / (13 * math.sqrt(23) * math.sqrt(3)))
    assert sf.gamma_factor_main_term(1, 5) == pytest.approx(8 * math.pi**2 / (2 * math.sqrt(12) * math.sqrt(10)))
    with pytest.raises(DomainError):
        sf.gamma_factor_ratio(-1, 2)


def test_precision_policy_validation():
    with pytest.raises(DomainError):
        sf.PrecisionPolicy(target_abs_tol=0)
