"""Point-pair kernels on the upper half-plane and their spherical transforms.

A kernel is a function k(u) of the point-pair invariant u = sinh^2(rho/2).
Its transform h(t) is obtained in three steps,

    q(v) = int_v^inf k(u) (u - v)^{-1/2} du,
    g(r) = 2 q(sinh^2(r/2)),
    h(t) = int g(r) e^{irt} dr,

and the ball average of any Laplace eigenfunction with spectral parameter
t equals h(t) times its value at the centre.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import special

from .errors import DomainError, ToleranceNotMet
from .geometry import MAX_BALL_RADIUS, ball_volume, coset_images, Point


@dataclass(frozen=True)
class KernelProfile:
    """k(u) supported on [0, u_max]; ``breakpoints`` are jumps inside the support."""

    func: Callable[[np.ndarray], np.ndarray]
    u_max: float
    breakpoints: tuple[float, ...] = ()
    label: str = "custom"


def ball_kernel(R: float) -> KernelProfile:
    """Normalised indicator of the ball of radius R (unit integral)."""
    if not R > 0:
        raise DomainError("radius must be positive")
    bound = math.sinh(R / 2) ** 2
    height = 1.0 / ball_volume(R)

    def k(u):
        u = np.asarray(u, dtype=float)
        return np.where(u <= bound, height, 0.0)

    return KernelProfile(k, bound, (), f"ball(R={R})")


def k_R(u, R: float):
    return ball_kernel(R).func(u)


# ---------------------------------------------------------------------------
# closed form of the ball transform

@lru_cache(maxsize=64)
def _theta_rule(n: int):
    x, w = special.roots_legendre(n)
    theta = 0.25 * np.pi * (x + 1)  # [0, pi/2]
    return theta, 0.25 * np.pi * w


def _h_closed(t: np.ndarray, R: float, n: int) -> np.ndarray:
    # r = (2/R) asinh(sin(theta) sinh(R/2)) removes the square-root endpoints:
    # h(t) = (4/pi) int_0^{pi/2} cos^2(theta) cos(R t r) / sqrt(1 + sin^2 theta sinh^2(R/2)) d theta
    theta, w = _theta_rule(n)
    sh = math.sinh(R / 2)
    s = np.sin(theta)
    r = (2 / R) * np.arcsinh(s * sh)
    weight = w * np.cos(theta) ** 2 / np.sqrt(1 + (s * sh) ** 2)
    return (4 / np.pi) * np.cos(R * np.multiply.outer(t, r)) @ weight


def h_R(t, R: float, *, tol: float = 1e-14):
    """Transform of the ball kernel at spectral parameter t (real or complex).

    Equal to (R / (pi sinh(R/2))) int_{-1}^{1} sqrt(1 - (sinh(Rr/2)/sinh(R/2))^2) e^{iRrt} dr.
    """
    if not 0 < R <= MAX_BALL_RADIUS:
        raise DomainError(f"radius must lie in (0, {MAX_BALL_RADIUS}]")
    t_arr = np.asarray(t, dtype=complex)
    scalar = t_arr.ndim == 0
    t_arr = np.atleast_1d(t_arr)
    if np.any(np.abs(t_arr.imag) > 1.0 + 1e-12):
        raise DomainError("|Im t| must not exceed 1")
    n = 32 + int(np.max(np.abs(t_arr)) * R)
    prev = _h_closed(t_arr, R, n)
    for _ in range(8):
        n *= 2
        cur = _h_closed(t_arr, R, n)
        # cos(R t r) carries rounding proportional to its argument
        scale = max(1.0, float(np.max(np.abs(cur))), R * float(np.max(np.abs(t_arr))))
        if np.max(np.abs(cur - prev)) <= tol * scale:
            break
        prev = cur
    else:
        raise ToleranceNotMet("h_R quadrature did not converge", best=cur)
    if np.all(t_arr.imag == 0):
        cur = cur.real
    return cur[0] if scalar else cur


def h_R_derivative_at_i_half(R: float) -> float:
    """i h_R'(i/2), computed from the theta-substituted integral.

    Equals (R^2/pi) int_{-1}^{1} r sqrt(1-S^2) S dr with S = sinh(Rr/2)/sinh(R/2);
    it behaves like R^2/8 for small R.
    """
    if not R > 0:
        raise DomainError("radius must be positive")
    sh = math.sinh(R / 2)
    out = None
    for n in (64, 128, 256, 512):
        theta, w = _theta_rule(n)
        s = np.sin(theta)
        r = (2 / R) * np.arcsinh(s * sh)
        val = (4 / np.pi) * np.sum(w * np.cos(theta) ** 2 * R * r * np.sinh(R * r / 2) / np.sqrt(1 + (s * sh) ** 2))
        if out is not None and abs(val - out) <= 1e-15 * abs(val):
            return float(val)
        out = val
    return float(out)


# ---------------------------------------------------------------------------
# the generic three-step pipeline

@dataclass
class TransformResult:
    """Transform of a kernel; ``h`` is callable on arrays of real or complex t."""

    profile: KernelProfile
    h: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]
    q: Callable[[np.ndarray], np.ndarray]
    radius: float
    provenance: str = "pipeline"


class TransformError(ToleranceNotMet):
    """Raised with ``stage`` set to 'q', 'g' or 'h'."""


def shc_pipeline(profile: KernelProfile, *, nodes: int = 160, tol: float = 1e-10) -> TransformResult:
    """Run q -> g -> h by quadrature for a compactly supported profile."""
    u_max = profile.u_max
    if not u_max > 0:
        raise DomainError("kernel support must be positive")
    gx, gw = np.polynomial.legendre.leggauss(nodes)
    breaks = sorted(b for b in profile.breakpoints if 0 < b < u_max)

    def q(v):
        # substitute u = v + s^2, du / sqrt(u - v) = 2 ds, split at jumps of k
        v = np.atleast_1d(np.asarray(v, dtype=float))
        out = np.zeros(v.shape)
        for i, vv in enumerate(v):
            if vv >= u_max:
                continue
            edges = [0.0] + [math.sqrt(b - vv) for b in breaks if b > vv] + [math.sqrt(u_max - vv)]
            total = 0.0
            for lo, hi in zip(edges[:-1], edges[1:]):
                s = lo + 0.5 * (hi - lo) * (gx + 1)
                total += 0.5 * (hi - lo) * np.dot(gw, profile.func(vv + s * s))
            out[i] = 2 * total
        return out

    r_max = 2 * math.asinh(math.sqrt(u_max))

    def g(r):
        r = np.asarray(r, dtype=float)
        return 2 * q(np.sinh(r.ravel() / 2) ** 2).reshape(r.shape)

    # each jump of k leaves a square-root edge in g at the matching radius; on every
    # piece [lo, hi] the substitution r = lo + (hi - lo) sin(phi) absorbs it
    r_edges = [0.0] + [2 * math.asinh(math.sqrt(b)) for b in breaks] + [r_max]

    def r_rule(m):
        x, w = special.roots_legendre(m)
        phi = 0.25 * np.pi * (x + 1)
        rs, ws = [], []
        for lo, hi in zip(r_edges[:-1], r_edges[1:]):
            rs.append(lo + (hi - lo) * np.sin(phi))
            ws.append((hi - lo) * np.cos(phi) * 0.25 * np.pi * w)
        rn = np.concatenate(rs)
        return rn, g(rn) * np.concatenate(ws)

    def _h_at(t, rn, gv):
        return 2 * np.cos(np.multiply.outer(t, rn)) @ gv

    r_nodes, g_vals = r_rule(nodes)
    r2, g2 = r_rule(nodes // 2)
    probe = np.array([0.0, 0.5j, 1.0 / r_max, 5.0 / r_max])
    diff = np.max(np.abs(_h_at(probe, r_nodes, g_vals) - _h_at(probe, r2, g2)))
    if diff > tol * 100:
        raise TransformError(f"transform pipeline unresolved (discrepancy {diff:.2e})", stage="h", error=diff)

    def h(t):
        t_arr = np.asarray(t, dtype=complex)
        out = _h_at(np.atleast_1d(t_arr), r_nodes, g_vals)
        if np.all(t_arr.imag == 0):
            out = out.real
        return out[0] if t_arr.ndim == 0 else out

    return TransformResult(profile, h, g, q, r_max)


def shc(profile: KernelProfile, t):
    return shc_pipeline(profile).h(t)


# ---------------------------------------------------------------------------
# asymptotic regimes of h_R

SMALL_ARGUMENT = 0.05
LARGE_ARGUMENT = 30.0


def asymptotic_h(R: float, t: float) -> tuple[int, float]:
    """Leading behaviour of h_R(t) for small R: (regime, value).

    Regime 1 (Rt < 0.05): 1.  Regime 2 (Rt <= 30): 2 J_1(Rt)/(Rt).
    Regime 3: pi^{-1/2} (2/(Rt))^{3/2} sin(Rt - pi/4).
    """
    x = R * abs(t)
    if x < SMALL_ARGUMENT:
        return 1, 1.0
    if x <= LARGE_ARGUMENT:
        return 2, float(2 * special.j1(x) / x)
    return 3, float((2 / x) ** 1.5 * math.sin(x - math.pi / 4) / math.sqrt(math.pi))


# ---------------------------------------------------------------------------
# automorphic kernel

def automorphic_kernel(z, w, R: float) -> float:
    """K_R(z, w) = sum over gamma in PSL2(Z) of k_R(u(gamma z, w)).

    Cosets of the stabiliser of infinity are enumerated down to the height
    Im w e^{-R}, then the finitely many translates that can land in the
    ball are added; the sum is exact.
    """
    wp = Point.of(w)
    if not 0 < R <= 2:
        raise DomainError("automorphic kernel supports 0 < R <= 2")
    bound = math.sinh(R / 2) ** 2
    height = 1.0 / ball_volume(R)
    count = 0
    for _, img in coset_images(z, wp.y * math.exp(-R) * (1 - 1e-12)):
        yy = img.imag
        slack = 4 * yy * wp.y * bound - (yy - wp.y) ** 2
        if slack < 0:
            continue
        r = math.sqrt(slack)
        lo = math.ceil(wp.x - img.real - r)
        hi = math.floor(wp.x - img.real + r)
        if hi >= lo:
            count += hi - lo + 1
    return height * count
