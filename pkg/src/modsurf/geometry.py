"""Hyperbolic geometry of the upper half-plane and reduction modulo SL2(Z).

The invariant measure is dx dy / y^2.  The fundamental domain used
throughout is

    F = { -1/2 < x <= 1/2, |z| >= 1 },  with x >= 0 on the arc |z| = 1,

so every orbit has exactly one representative.  Group elements act on the
left by Moebius transformations and are identified up to sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, ResourceError, ToleranceNotMet

VOLUME_FUNDAMENTAL_DOMAIN = math.pi / 3
SQRT3_2 = math.sqrt(3) / 2
_TIE = 1e-13
MAX_REDUCTION_STEPS = 10_000
MAX_BALL_RADIUS = 10.0


@dataclass(frozen=True)
class Point:
    """A point x + iy of the upper half-plane."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DomainError("point coordinates must be finite")
        if not self.y > 0:
            raise DomainError(f"Im z must be positive, got {self.y}")

    @classmethod
    def of(cls, z) -> "Point":
        if isinstance(z, Point):
            return z
        z = complex(z)
        return cls(z.real, z.imag)

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)


@dataclass(frozen=True)
class GroupWord:
    """An element of PSL2(Z) as a word in S, T, T^-1 with its matrix.

    ``letters`` are applied right to left, matching matrix products.
    """

    matrix: tuple[int, int, int, int] = (1, 0, 0, 1)
    letters: tuple[str, ...] = ()

    def apply(self, z: complex) -> complex:
        a, b, c, d = self.matrix
        return (a * z + b) / (c * z + d)

    def inverse(self) -> "GroupWord":
        a, b, c, d = self.matrix
        inv = {"S": "S", "T": "T^-1", "T^-1": "T"}
        return GroupWord((d, -b, -c, a), tuple(inv[l] for l in reversed(self.letters)))


def mobius(matrix, z):
    a, b, c, d = matrix
    return (a * z + b) / (c * z + d)


def matmul(m1, m2):
    a, b, c, d = m1
    e, f, g, h = m2
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


def normalize_matrix(m):
    """Pick the sign representative with c > 0, or c = 0 and d > 0."""
    a, b, c, d = m
    if c < 0 or (c == 0 and d < 0):
        return (-a, -b, -c, -d)
    return m


# ---------------------------------------------------------------------------
# distances and balls

def point_pair_invariant(z, w) -> float:
    """u(z, w) = |z - w|^2 / (4 Im z Im w) = sinh^2(rho/2)."""
    z, w = Point.of(z), Point.of(w)
    return ((z.x - w.x) ** 2 + (z.y - w.y) ** 2) / (4 * z.y * w.y)


def hyperbolic_distance(z, w) -> float:
    """Geodesic distance, accurate for nearby and for far-apart points."""
    u = point_pair_invariant(z, w)
    return 2 * math.asinh(math.sqrt(u))


def distance_log_form(z, w) -> float:
    """The same distance via log((|z-wbar|+|z-w|)/(|z-wbar|-|z-w|))."""
    z, w = Point.of(z).z, Point.of(w).z
    far = abs(z - w.conjugate())
    near = abs(z - w)
    return math.log((far + near) / (far - near))


def ball_volume(R: float) -> float:
    if R < 0:
        raise DomainError("radius must be non-negative")
    return 4 * math.pi * math.sinh(R / 2) ** 2


@dataclass(frozen=True)
class Ball:
    center: Point
    radius: float

    def __post_init__(self):
        if not 0 < self.radius <= MAX_BALL_RADIUS:
            raise DomainError(f"ball radius must lie in (0, {MAX_BALL_RADIUS}]")

    @property
    def volume(self) -> float:
        return ball_volume(self.radius)


def polar_points(center, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Points at geodesic distance r and angle theta from ``center``.

    Uses the disc model: p = tanh(r/2) e^{i theta} maps to i(1+p)/(1-p), then
    the affine map z -> x_w + y_w z moves i to the centre.
    """
    c = Point.of(center)
    p = np.tanh(np.asarray(r) / 2) * np.exp(1j * np.asarray(theta))
    zeta = 1j * (1 + p) / (1 - p)
    return c.x + c.y * zeta


# ---------------------------------------------------------------------------
# reduction

def reduce(z) -> tuple[Point, GroupWord]:
    """Map z into F; returns the image and the word taking z to it."""
    p = Point.of(z)
    zz = p.z
    mat = (1, 0, 0, 1)
    letters: list[str] = []
    steps = 0
    while True:
        n = math.floor(zz.real + 0.5)
        if n:
            zz -= n
            mat = matmul((1, -n, 0, 1), mat)
            letters.extend(["T^-1"] * n if n > 0 else ["T"] * (-n))
        if abs(zz) ** 2 < 1 - _TIE:
            zz = -1 / zz
            mat = matmul((0, -1, 1, 0), mat)
            letters.append("S")
        else:
            break
        steps += 1
        if steps > MAX_REDUCTION_STEPS:
            raise ResourceError("reduction exceeded the step cap")
    # boundary conventions
    if zz.real <= -0.5 + _TIE:
        zz += 1
        mat = matmul((1, 1, 0, 1), mat)
        letters.append("T")
    if abs(abs(zz) ** 2 - 1) <= _TIE and zz.real < 0:
        zz = -1 / zz
        mat = matmul((0, -1, 1, 0), mat)
        letters.append("S")
    word = GroupWord(normalize_matrix(mat), tuple(reversed(letters)))
    return Point(zz.real, zz.imag), word


def reduce_array(z: np.ndarray) -> np.ndarray:
    """Vectorised reduction of complex points into F (no words)."""
    z = np.array(z, dtype=complex, copy=True)
    if np.any(z.imag <= 0):
        raise DomainError("points must lie in the upper half-plane")
    for _ in range(MAX_REDUCTION_STEPS):
        z -= np.floor(z.real + 0.5)
        inside = np.abs(z) ** 2 < 1 - _TIE
        if not inside.any():
            break
        z[inside] = -1 / z[inside]
    else:
        raise ResourceError("vectorised reduction exceeded the step cap")
    left = z.real <= -0.5 + _TIE
    z[left] += 1
    arc = (np.abs(np.abs(z) ** 2 - 1) <= _TIE) & (z.real < 0)
    z[arc] = -1 / z[arc]
    return z


def in_fundamental_domain(z) -> bool:
    p = Point.of(z)
    return -0.5 < p.x <= 0.5 + _TIE and p.x * p.x + p.y * p.y >= 1 - _TIE


# ---------------------------------------------------------------------------
# orbit enumeration

def coset_images(z, y_floor: float, max_images: int = 2_000_000) -> list[tuple[tuple[int, int, int, int], complex]]:
    """All Gamma_inf-coset images gamma z with Im(gamma z) >= y_floor.

    Each coset (c, d) with gcd 1 contributes one image, normalised to
    -1/2 < Re <= 1/2.  The list is finite because Im(gamma z) = y/|cz+d|^2.
    """
    p = Point.of(z)
    if not y_floor > 0:
        raise DomainError("y_floor must be positive")
    x, y = p.x, p.y
    out = []
    c_max = int(math.floor(1.0 / math.sqrt(y * y_floor)))
    for c in range(0, c_max + 1):
        if c == 0:
            ds = [1]
        else:
            span = y / y_floor - (c * y) ** 2
            if span < 0:
                continue
            r = math.sqrt(span)
            ds = range(math.ceil(-c * x - r), math.floor(-c * x + r) + 1)
        for d in ds:
            if math.gcd(c, d) != 1:
                continue
            g, a0, b0 = _egcd(d, -c)  # a d - b c = 1  ->  a*d + b*(-c) = 1
            a, b = a0, b0
            zz = complex(x, y)
            img = (a * zz + b) / (c * zz + d)
            if img.imag < y_floor * (1 - 1e-14):
                continue
            n = math.floor(img.real + 0.5)
            out.append(((a - n * c, b - n * d, c, d), img - n))
            if len(out) > max_images:
                raise ResourceError("too many coset images; point too close to the real axis")
    return out


def _egcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, s, t) with s a + t b = g = gcd(a, b) > 0."""
    s0, s1, t0, t1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    if a < 0:
        a, s0, t0 = -a, -s0, -t0
    return a, s0, t0


def orbit_points_near(z, w, R: float) -> list[tuple[tuple[int, int, int, int], complex]]:
    """Every gamma in PSL2(Z) with rho(gamma z, w) <= R, with the image point."""
    wp = Point.of(w)
    bound = math.sinh(R / 2) ** 2
    found = []
    for mat, img in coset_images(z, wp.y * math.exp(-R) * (1 - 1e-12)):
        yy = img.imag
        slack = 4 * yy * wp.y * bound - (yy - wp.y) ** 2
        if slack < 0:
            continue
        r = math.sqrt(slack)
        for n in range(math.ceil(wp.x - img.real - r), math.floor(wp.x - img.real + r) + 1):
            a, b, c, d = mat
            found.append(((a + n * c, b + n * d, c, d), img + n))
    return found


def orbit_distance_to_images(points: np.ndarray, images: np.ndarray) -> np.ndarray:
    """min over images and integer translates of the u-invariant.

    ``points`` (shape P) and ``images`` (shape M) are complex; returns the
    (P, M) array of u(point, image + n) minimised over n.
    """
    dx = points.real[:, None] - images.real[None, :]
    dx = dx - np.floor(dx + 0.5)
    dy = points.imag[:, None] - images.imag[None, :]
    return (dx * dx + dy * dy) / (4 * points.imag[:, None] * images.imag[None, :])


# ---------------------------------------------------------------------------
# quadrature

@dataclass
class QuadratureResult:
    value: complex | float
    error: float
    evaluations: int


def orbit_translate_counts(points: np.ndarray, images: np.ndarray, R: float) -> np.ndarray:
    """Number of integer translates image + n lying within distance R of each point.

    Returns a (P, M) integer array; summed over the coset images of z it
    gives #{gamma : rho(gamma z, point) <= R}, the multiplicity count behind
    the automorphic kernel.
    """
    bound = math.sinh(R / 2) ** 2
    py = points.imag[:, None]
    iy = images.imag[None, :]
    slack = 4 * py * iy * bound - (py - iy) ** 2
    r = np.sqrt(np.maximum(slack, 0.0))
    dx = points.real[:, None] - images.real[None, :]
    n = np.floor(dx + r) - np.ceil(dx - r) + 1
    return np.where(slack >= 0, np.maximum(n, 0), 0).astype(np.int64)


def ball_quadrature(f: Callable[[np.ndarray], np.ndarray], ball: Ball, *, tol: float = 1e-10,
                    start: tuple[int, int] = (12, 24), max_level: int = 6) -> QuadratureResult:
    """Integrate f d mu over a geodesic ball.

    Geodesic polar coordinates give d mu = sinh r dr d theta; Gauss-Legendre
    in r and the trapezoid rule in theta, refined by doubling both until two
    consecutive levels agree.
    """
    R = ball.radius
    n_r, n_t = start
    prev = None
    evals = 0
    for _ in range(max_level):
        value = _polar_rule(f, ball.center, R, n_r, n_t)
        evals += n_r * n_t
        if prev is not None:
            err = abs(value - prev)
            if err <= tol * max(1.0, abs(value)):
                return QuadratureResult(value, err, evals)
        prev = value
        n_r, n_t = 2 * n_r, 2 * n_t
    raise ToleranceNotMet("ball quadrature did not converge", best=prev, error=abs(value - prev))


def _polar_rule(f, center, R, n_r, n_t):
    xr, wr = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * R * (xr + 1)
    wr = 0.5 * R * wr * np.sinh(r)
    theta = 2 * np.pi * np.arange(n_t) / n_t
    pts = polar_points(center, r[:, None], theta[None, :])
    vals = np.asarray(f(pts.ravel())).reshape(pts.shape)
    res = (2 * np.pi / n_t) * np.sum(wr[:, None] * vals)
    return complex(res) if np.iscomplexobj(res) else float(res)


def polar_rule(center, R: float, n_r: int, n_t: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes (complex) and weights of the fixed polar rule on B_R(center)."""
    xr, wr = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * R * (xr + 1)
    wr = 0.5 * R * wr * np.sinh(r)
    theta = 2 * np.pi * np.arange(n_t) / n_t
    pts = polar_points(center, r[:, None], theta[None, :])
    wts = np.broadcast_to((2 * np.pi / n_t) * wr[:, None], pts.shape)
    return pts.ravel(), wts.ravel().copy()


def fundamental_domain_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic n x n Gauss-Legendre rule for d mu over F.

    With y = (sqrt3/2) / v the measure becomes (2/sqrt3) dx dv on
    { |x| <= 1/2, 0 < v <= (sqrt3/2)/sqrt(1-x^2) }.
    """
    g, gw = np.polynomial.legendre.leggauss(n)
    xs = 0.5 * g
    wx = 0.5 * gw
    pts, wts = [], []
    for xv, wxv in zip(xs, wx):
        v_top = SQRT3_2 / math.sqrt(1 - xv * xv)
        v = 0.5 * v_top * (g + 1)
        wv = 0.5 * v_top * gw
        pts.append(xv + 1j * SQRT3_2 / v)
        wts.append(wxv * wv / SQRT3_2)
    return np.concatenate(pts), np.concatenate(wts)


def sample_mu(n: int, seed: int) -> np.ndarray:
    """n points of F drawn from the normalised measure d mu / vol(F).

    y is drawn from the density proportional to y^-2 on [sqrt3/2, inf) by
    inversion, x uniformly, and points under the arc are rejected.  The
    generator is Philox (counter based) keyed by the seed, so a seed fully
    determines the sample.
    """
    if n < 1:
        raise DomainError("sample size must be positive")
    rng = np.random.Generator(np.random.Philox(key=seed))
    out = np.empty(0, dtype=complex)
    while out.size < n:
        m = int((n - out.size) * 1.15) + 16
        x = rng.random(m) - 0.5
        v = 1.0 - rng.random(m)  # in (0, 1]
        y = SQRT3_2 / v
        keep = x * x + y * y >= 1
        out = np.concatenate([out, (x + 1j * y)[keep]])
    return out[:n]
