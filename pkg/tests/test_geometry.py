import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from modsurf.autoforms import eisenstein_eval
from modsurf.errors import DomainError
from modsurf.geometry import (
    VOLUME_FUNDAMENTAL_DOMAIN, Ball, GroupWord, Point, ball_quadrature, ball_volume, coset_images,
    distance_log_form, fundamental_domain_rule, hyperbolic_distance, in_fundamental_domain, matmul,
    mobius, orbit_points_near, point_pair_invariant, reduce, reduce_array, sample_mu,
)

upper = st.builds(complex, st.floats(-3, 3), st.floats(0.05, 5))
GENERATORS = {"S": (0, -1, 1, 0), "T": (1, 1, 0, 1), "T^-1": (1, -1, 0, 1)}


def random_word(rng, length):
    mat = (1, 0, 0, 1)
    for _ in range(length):
        mat = matmul(GENERATORS[rng.choice(list(GENERATORS))], mat)
    return mat


def test_pair_invariant_values():
    assert point_pair_invariant(1j, 1j) == 0
    assert point_pair_invariant(1j, 2j) == pytest.approx(0.125, abs=1e-16)
    assert hyperbolic_distance(1j, 2j) == pytest.approx(math.log(2), abs=1e-15)
    assert distance_log_form(1j, 2j) == pytest.approx(math.log(2), abs=1e-15)


@given(upper, upper)
def test_pair_invariant_symmetric_and_consistent(z, w):
    u = point_pair_invariant(z, w)
    assert u == point_pair_invariant(w, z)
    rho = hyperbolic_distance(z, w)
    assert math.sinh(rho / 2) ** 2 == pytest.approx(u, rel=1e-12, abs=1e-15)


@given(upper, upper, upper)
def test_triangle_inequality(z, v, w):
    assert hyperbolic_distance(z, w) <= hyperbolic_distance(z, v) + hyperbolic_distance(v, w) + 1e-12


def test_invariance_under_random_words():
    rng = np.random.default_rng(11)
    for _ in range(50):
        g = random_word(rng, int(rng.integers(1, 11)))
        z = complex(rng.uniform(-1, 1), rng.uniform(0.3, 2))
        w = complex(rng.uniform(-1, 1), rng.uniform(0.3, 2))
        u0 = point_pair_invariant(z, w)
        u1 = point_pair_invariant(mobius(g, z), mobius(g, w))
        assert abs(u1 - u0) <= 1e-12 * max(1, u0)


def test_point_validation():
    with pytest.raises(DomainError):
        Point(0.0, 0.0)
    with pytest.raises(DomainError):
        Ball(Point(0, 1), 11.0)


def test_reduce_identity_on_i():
    p, word = reduce(1j)
    assert p == Point(0.0, 1.0)
    assert word.matrix == (1, 0, 0, 1) and word.letters == ()


def _best_height_by_search(z, depth=12):
    # breadth-first search over words; the point of F maximises Im over the orbit
    frontier = {(1, 0, 0, 1)}
    best = z.imag
    seen = set(frontier)
    for _ in range(depth):
        nxt = set()
        for m in frontier:
            for g in GENERATORS.values():
                mm = matmul(g, m)
                if mm in seen:
                    continue
                seen.add(mm)
                nxt.add(mm)
                best = max(best, mobius(mm, z).imag)
        frontier = nxt
    return best


def test_reduce_against_word_search():
    z = 0.7 + 0.1j
    p, word = reduce(z)
    assert in_fundamental_domain(p)
    assert p.y >= math.sin(math.pi / 3)
    assert abs(word.apply(z) - p.z) < 1e-12
    assert p.y == pytest.approx(_best_height_by_search(z), rel=1e-12)


@given(upper)
def test_reduce_idempotent_and_word_consistent(z):
    p, word = reduce(z)
    assert in_fundamental_domain(p)
    assert abs(word.apply(z) - p.z) <= 1e-9 * max(1, abs(p.z))
    a, b, c, d = word.matrix
    assert a * d - b * c == 1
    mat = (1, 0, 0, 1)
    for letter in word.letters:
        mat = matmul(mat, GENERATORS[letter])
    assert mat in (word.matrix, tuple(-v for v in word.matrix))
    q, again = reduce(p)
    assert q == p and again.matrix == (1, 0, 0, 1)
    assert abs(reduce_array(np.array([z]))[0] - p.z) <= 1e-12 * max(1, abs(p.z))


def test_group_word_inverse():
    _, word = reduce(0.31 + 0.07j)
    inv = word.inverse()
    assert abs(inv.apply(word.apply(0.31 + 0.07j)) - (0.31 + 0.07j)) < 1e-12


def test_reduce_preserves_eisenstein():
    z = 0.7 + 0.1j
    p, _ = reduce(z)
    assert abs(eisenstein_eval(z, 2) - eisenstein_eval(p.z, 2)) <= 1e-9 * abs(eisenstein_eval(p.z, 2))


def test_ball_volume():
    assert ball_volume(0) == 0
    oracle = float(4 * mpmath.pi * mpmath.sinh(mpmath.mpf(1) / 2) ** 2)
    assert ball_volume(1) == pytest.approx(oracle, rel=1e-15)
    assert abs(oracle - 3.412276) < 1e-6
    assert ball_volume(1e-3) == pytest.approx(math.pi * 1e-6, rel=1e-6)
    radii = np.linspace(0, 3, 20)
    assert np.all(np.diff([ball_volume(r) for r in radii]) > 0)


@pytest.mark.parametrize("R", [0.05, 0.5, 2.0])
def test_ball_quadrature_constants(R):
    ball = Ball(Point(0.3, 1.7), R)
    res = ball_quadrature(lambda z: np.ones(z.shape), ball)
    assert res.value == pytest.approx(ball_volume(R), rel=1e-10)
    res = ball_quadrature(lambda z: np.full(z.shape, 2.5), ball)
    assert res.value == pytest.approx(2.5 * ball_volume(R), rel=1e-10)


def test_ball_quadrature_error_estimates_honest():
    battery = [lambda z: np.imag(z) ** -1.0, lambda z: np.cos(3 * np.real(z)) * np.imag(z),
               lambda z: np.exp(-np.abs(z - 1j) ** 2)]
    ball = Ball(Point(0.1, 1.2), 0.8)
    for f in battery:
        coarse = ball_quadrature(f, ball, tol=1e-6)
        fine = ball_quadrature(f, ball, tol=5e-7)
        assert abs(fine.value - coarse.value) <= max(coarse.error, 1e-15)


def test_sample_mu_volume_and_determinism():
    pts = sample_mu(100_000, 42)
    assert np.all([in_fundamental_domain(p) for p in pts[:2000]])
    assert np.array_equal(pts, sample_mu(100_000, 42))
    # the strip integral oracle: vol(F) = int_{-1/2}^{1/2} dx / sqrt(1 - x^2) = pi/3
    xs, ws = np.polynomial.legendre.leggauss(40)
    strip = float(np.sum(0.5 * ws / np.sqrt(1 - (0.5 * xs) ** 2)))
    assert strip == pytest.approx(VOLUME_FUNDAMENTAL_DOMAIN, rel=1e-12)
    # hit-or-miss estimate of vol(F) inside the strip |x|<=1/2, y >= sqrt3/2 (total mass 2/sqrt3)
    rng = np.random.default_rng(3)
    x = rng.random(100_000) - 0.5
    y = (math.sqrt(3) / 2) / (1 - rng.random(100_000))
    hits = (x * x + y * y >= 1).astype(float)
    est = 2 / math.sqrt(3) * hits.mean()
    se = 2 / math.sqrt(3) * hits.std(ddof=1) / math.sqrt(hits.size)
    assert abs(est - math.pi / 3) <= 3 * se


def test_sample_mu_mean_of_inverse_height():
    pts = sample_mu(100_000, 7)
    vals = 1 / pts.imag
    mean, se = vals.mean(), vals.std(ddof=1) / math.sqrt(vals.size)
    nodes, weights = fundamental_domain_rule(60)
    oracle = float(np.sum(weights / nodes.imag)) / VOLUME_FUNDAMENTAL_DOMAIN
    assert abs(mean - oracle) <= 3 * se
    assert float(np.sum(weights)) == pytest.approx(VOLUME_FUNDAMENTAL_DOMAIN, rel=1e-10)


def test_sample_mu_rejects_empty():
    with pytest.raises(DomainError):
        sample_mu(0, 1)


def test_coset_images_and_orbit_points():
    z = 0.2 + 0.9j
    imgs = coset_images(z, 0.1)
    for mat, img in imgs:
        assert abs(mobius(mat, z) - img) < 1e-12
        assert img.imag >= 0.1 * (1 - 1e-12)
    w = 0.25 + 1.1j
    near = orbit_points_near(z, w, 1.5)
    assert near
    for mat, img in near:
        assert hyperbolic_distance(img, w) <= 1.5 + 1e-12
