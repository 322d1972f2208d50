"""Ball averages on the modular surface and their variance over the centre.

For a target g (an Eisenstein series on the critical line, a Maass form, a
constant, or the counting measure of Heegner points / closed geodesics)
the deviation at a centre w is

    dev(w) = (1 / vol B_R) int_{B_R(w)} |g|^2 d mu  -  centring(w),

and Var = int_F dev(w)^2 d mu(w).  It is estimated by Monte Carlo over
d mu on F, with a deterministic Gauss-Legendre rule on F as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np

from . import specfun
from .autoforms import eisenstein_series
from .errors import DomainError, ResourceError, ToleranceNotMet
from .geometry import (SQRT3_2, VOLUME_FUNDAMENTAL_DOMAIN as VOL, Ball, Point, ball_quadrature,
                       ball_volume, coset_images, fundamental_domain_rule, orbit_distance_to_images, orbit_translate_counts,
                       polar_rule, reduce as reduce_point, reduce_array, sample_mu)
from .kernels import h_R, h_R_derivative_at_i_half
from .quadinv import ClassGroup, closed_geodesics, heegner_points

MAX_GEODESIC_SAMPLES = 1_000_000


def _polar_resolution(t: float, R: float) -> tuple[int, int]:
    """Polar rule size resolving |g|^2 oscillating at frequency ~2t over a radius-R ball."""
    n_r = 10 + int(math.ceil(1.2 * t * R))
    n_t = 16 + 2 * int(math.ceil(2.5 * t * math.sinh(R)))
    return n_r, n_t


def ball_average(func: Callable[[np.ndarray], np.ndarray], w, R: float, *, tol: float = 1e-11):
    """(1 / vol B_R) int_{B_R(w)} func d mu by adaptive polar quadrature."""
    res = ball_quadrature(func, Ball(Point.of(w), R), tol=tol)
    return res.value / ball_volume(R)


def ball_averages(density: Callable[[np.ndarray], np.ndarray], centres: np.ndarray, R: float,
                  n_r: int, n_t: int, batch: int = 200_000) -> np.ndarray:
    """Fixed-rule ball averages of a real density at many centres."""
    centres = np.asarray(centres, dtype=complex)
    nodes, wts = polar_rule(1j, R, n_r, n_t)
    # nodes around i, moved to each centre by z -> x_w + y_w z
    out = np.empty(centres.size)
    per = max(1, batch // nodes.size)
    vol = ball_volume(R)
    for lo in range(0, centres.size, per):
        c = centres[lo:lo + per]
        pts = c.real[:, None] + c.imag[:, None] * nodes[None, :]
        vals = np.asarray(density(pts.ravel())).reshape(pts.shape)
        out[lo:lo + per] = (vals @ wts) / vol
    return out


# ---------------------------------------------------------------------------
# centring constants

def kronecker_limit_residual(w, eps: float) -> float:
    """vol E(w, 1 + 2 eps) - 1/(2 eps) - (2 gamma - log|4 Im w eta(w)^4| - 12 zeta'(2)/pi^2).

    The first-order Kronecker limit formula says this is O(eps).
    """
    w = Point.of(w)
    E = eisenstein_series(1 + 2 * eps)(w.z)
    const = 2 * specfun.EULER_GAMMA - _log_abs_4y_eta4(w) - 12 * specfun.zeta_derivative(2).real / math.pi**2
    return float(VOL * E.real - 1 / (2 * eps) - const)


def _log_abs_4y_eta4(w: Point) -> float:
    return math.log(4 * w.y) + 4 * specfun.log_abs_eta(w.z)


def _log_abs_4y_eta4_array(z: np.ndarray) -> np.ndarray:
    return np.array([math.log(4 * v.imag) + 4 * specfun.log_abs_eta(v) for v in z])


def centering_D(t_g: float, w) -> np.ndarray | float:
    """D(g; w) for g = E(., 1/2 + i t_g)."""
    z = np.atleast_1d(np.asarray(w if not isinstance(w, Point) else w.z, dtype=complex))
    const = (2 * specfun.completed_zeta_log_derivative(1 + 2j * t_g).real
             + 2 * specfun.EULER_GAMMA - 12 * specfun.zeta_derivative(2).real / math.pi**2)
    out = (2 / VOL) * (const - _log_abs_4y_eta4_array(reduce_array(z)))
    return float(out[0]) if np.ndim(w) == 0 else out


def centering_C(t_g: float, R: float, w) -> np.ndarray | float:
    """C(g; R; w) = D + 2 i h_R'(i/2) / vol + 2 Re(h_R(2 t_g + i/2) phi(1/2 + i t_g) E(w, 1 - 2 i t_g))."""
    z = np.atleast_1d(np.asarray(w if not isinstance(w, Point) else w.z, dtype=complex))
    base = np.atleast_1d(centering_D(t_g, z))
    corr = centering_correction(t_g, R, z)
    out = base + corr
    return float(out[0]) if np.ndim(w) == 0 else out


def centering_correction(t_g: float, R: float, w) -> np.ndarray:
    """C - D as an array over the centres w."""
    z = np.atleast_1d(np.asarray(w, dtype=complex))
    hp = h_R_derivative_at_i_half(R)
    hh = complex(h_R(2 * t_g + 0.5j, R))
    ratio = specfun.phi(0.5 + 1j * t_g)
    E = eisenstein_series(1 - 2j * t_g)(z)
    return 2 * hp / VOL + 2 * np.real(hh * ratio * E)


# ---------------------------------------------------------------------------
# targets

class Target(Protocol):
    label: str

    def deviation(self, centres: np.ndarray, R: float) -> np.ndarray: ...


@dataclass
class EisensteinTarget:
    """g = E(., 1/2 + i t), centred by C (default) or D."""

    t: float
    centering: str = "C"
    label: str = ""

    def __post_init__(self):
        if self.centering not in ("C", "D"):
            raise DomainError("centering must be 'C' or 'D'")
        self.label = self.label or f"eisenstein(t={self.t}, centering={self.centering})"
        self._E = eisenstein_series(0.5 + 1j * self.t)

    def density(self, z: np.ndarray) -> np.ndarray:
        return np.abs(self._E(z)) ** 2

    def centering_value(self, centres: np.ndarray, R: float) -> np.ndarray:
        if self.centering == "D":
            return np.atleast_1d(centering_D(self.t, centres))
        return np.atleast_1d(centering_D(self.t, centres)) + centering_correction(self.t, R, centres)

    def deviation(self, centres: np.ndarray, R: float) -> np.ndarray:
        n_r, n_t = _polar_resolution(self.t, R)
        avg = ball_averages(self.density, centres, R, n_r, n_t)
        return avg - self.centering_value(centres, R)


@dataclass
class DensityTarget:
    """Any density |g|^2 given as a vectorised callable, with a constant centring."""

    density: Callable[[np.ndarray], np.ndarray]
    centre_value: float
    resolution: tuple[int, int] = (12, 24)
    label: str = "density"

    def deviation(self, centres: np.ndarray, R: float) -> np.ndarray:
        avg = ball_averages(self.density, centres, R, *self.resolution)
        return avg - self.centre_value


def constant_target() -> DensityTarget:
    """g = 1/sqrt(vol F): unit L^2 norm, so every ball average equals the centring 1/vol."""
    return DensityTarget(lambda z: np.full(np.shape(z), 1 / VOL), 1 / VOL, label="constant")


@dataclass
class HeegnerTarget:
    """Normalised counting measure of the Heegner points of a genus."""

    D: int
    genus: object = "principal"
    label: str = ""

    def __post_init__(self):
        self.label = self.label or f"heegner(D={self.D}, genus={self.genus})"
        pts = heegner_points(self.D, self.genus)
        self.size = len(pts)
        self._owner, self._images = [], []
        self._R = None

    def _prepare(self, R: float):
        if self._R == R:
            return
        owner, imgs = [], []
        for k, hp in enumerate(heegner_points(self.D, self.genus)):
            for _, img in coset_images(hp.point.z, SQRT3_2 * math.exp(-R) * (1 - 1e-12)):
                owner.append(k)
                imgs.append(img)
        self._owner = np.array(owner)
        self._images = np.array(imgs)
        self._R = R

    def counts(self, centres: np.ndarray, R: float) -> np.ndarray:
        self._prepare(R)
        w = reduce_array(np.atleast_1d(np.asarray(centres, dtype=complex)))
        bound = math.sinh(R / 2) ** 2
        out = np.zeros(w.size, dtype=np.int64)
        per = max(1, 2_000_000 // max(1, self._images.size))
        for lo in range(0, w.size, per):
            u = orbit_distance_to_images(w[lo:lo + per], self._images)
            hit = u <= bound
            per_point = np.zeros((hit.shape[0], self.size), dtype=bool)
            for k in range(self.size):
                per_point[:, k] = hit[:, self._owner == k].any(axis=1)
            out[lo:lo + per] = per_point.sum(axis=1)
        return out

    def kernel_counts(self, centres: np.ndarray, R: float) -> np.ndarray:
        """sum_A #{gamma : rho(gamma z_A, w) <= R}, i.e. vol(B_R) sum_A K_R(z_A, w)."""
        self._prepare(R)
        w = reduce_array(np.atleast_1d(np.asarray(centres, dtype=complex)))
        out = np.zeros(w.size, dtype=np.int64)
        per = max(1, 2_000_000 // max(1, self._images.size))
        for lo in range(0, w.size, per):
            out[lo:lo + per] = orbit_translate_counts(w[lo:lo + per], self._images, R).sum(axis=1)
        return out

    def deviation(self, centres: np.ndarray, R: float) -> np.ndarray:
        # kernel weighting keeps the mean exactly zero when the ball wraps into the cusp
        return self.kernel_counts(centres, R) / (self.size * ball_volume(R)) - 1 / VOL


@dataclass
class GeodesicTarget:
    """Normalised arclength measure on the closed geodesics of a genus."""

    D: int
    genus: object = "principal"
    step: float = 0.01
    label: str = ""

    def __post_init__(self):
        self.label = self.label or f"geodesic(D={self.D}, genus={self.genus})"
        geos = closed_geodesics(self.D, self.genus)
        pts = []
        self.total_length = 0.0
        for g in geos:
            n = max(8, int(math.ceil(g.length / self.step)))
            if n > MAX_GEODESIC_SAMPLES:
                raise ResourceError(f"more than {MAX_GEODESIC_SAMPLES} samples per geodesic")
            pts.append(reduce_array(g.sample(n)))
            self.total_length += g.length
        self._pts = np.concatenate(pts)
        self._ds = self.total_length / self._pts.size  # all geodesics share the period length

    def lengths(self, centres: np.ndarray, R: float) -> np.ndarray:
        bound = math.sinh(R / 2) ** 2
        w = reduce_array(np.atleast_1d(np.asarray(centres, dtype=complex)))
        out = np.empty(w.size)
        for i, wc in enumerate(w):
            imgs = np.array([img for _, img in coset_images(wc, SQRT3_2 * math.exp(-R) * (1 - 1e-12))])
            u = orbit_distance_to_images(self._pts, imgs)
            out[i] = self._ds * np.count_nonzero((u <= bound).any(axis=1))
        return out

    def kernel_lengths(self, centres: np.ndarray, R: float) -> np.ndarray:
        """Arclength weighted by orbit multiplicity, vol(B_R) int_C K_R(z, w) ds."""
        w = reduce_array(np.atleast_1d(np.asarray(centres, dtype=complex)))
        out = np.empty(w.size)
        for i, wc in enumerate(w):
            imgs = np.array([img for _, img in coset_images(wc, SQRT3_2 * math.exp(-R) * (1 - 1e-12))])
            out[i] = self._ds * orbit_translate_counts(self._pts, imgs, R).sum()
        return out

    def deviation(self, centres: np.ndarray, R: float) -> np.ndarray:
        return self.kernel_lengths(centres, R) / (self.total_length * ball_volume(R)) - 1 / VOL


def heegner_ball_count(D: int, genus, ball: Ball) -> int:
    """#{A in the genus : z_A lies in B_R(w) modulo the modular group}."""
    return int(HeegnerTarget(D, genus).counts(np.array([ball.center.z]), ball.radius)[0])


def geodesic_ball_length(D: int, genus, ball: Ball, step: float | None = None) -> float:
    """Arclength of the genus geodesics inside B_R(w) modulo the group, sampled every ``step`` (default R/20)."""
    step = ball.radius / 20 if step is None else step
    if not 0 < step <= ball.radius / 10 * (1 + 1e-12):
        raise DomainError("geodesic sampling step must lie in (0, R/10]")
    return float(GeodesicTarget(D, genus, step).lengths(np.array([ball.center.z]), ball.radius)[0])


# ---------------------------------------------------------------------------
# estimators

@dataclass(frozen=True)
class MonteCarloConfig:
    samples: int = 2000
    seed: int = 0
    target_std_error: float | None = None
    max_samples: int = 200_000

    def __post_init__(self):
        if self.samples < 2:
            raise DomainError("need at least two samples")


@dataclass
class VarianceReport:
    estimate: float
    std_error: float
    samples: int
    target: str
    radius: float
    deviations: np.ndarray = field(repr=False)
    partial: bool = False

    def exceedance(self, levels: Sequence[float]) -> list[tuple[float, float, float]]:
        """(c, vol{|dev| > c}, Chebyshev bound Var / c^2) on the sample."""
        dev = np.abs(self.deviations)
        rows = []
        for c in levels:
            if c <= 0:
                raise DomainError("exceedance levels must be positive")
            rows.append((float(c), float(VOL * np.mean(dev > c)), float(self.estimate / c**2)))
        return rows


def var_estimator(target, R: float, cfg: MonteCarloConfig = MonteCarloConfig()) -> VarianceReport:
    """Monte Carlo estimate of int_F dev(w)^2 d mu(w) with its standard error."""
    if not R > 0:
        raise DomainError("radius must be positive")
    n = cfg.samples
    centres = sample_mu(n, cfg.seed)
    dev = np.asarray(target.deviation(centres, R), dtype=float)
    partial = False
    while True:
        sq = dev**2
        est = VOL * float(np.mean(sq))
        se = VOL * float(np.std(sq, ddof=1)) / math.sqrt(dev.size)
        if cfg.target_std_error is None or se <= cfg.target_std_error:
            break
        if dev.size >= cfg.max_samples:
            partial = True
            break
        extra = sample_mu(min(dev.size, cfg.max_samples - dev.size), cfg.seed + 7919 * dev.size)
        dev = np.concatenate([dev, target.deviation(extra, R)])
    if not np.isfinite(est):
        raise ToleranceNotMet("non-finite variance estimate")
    return VarianceReport(est, se, dev.size, getattr(target, "label", "target"), R, dev, partial)


def grid_variance(target, R: float, n: int = 40) -> tuple[float, float]:
    """Deterministic n x n Gauss-Legendre value of the variance and |Q_n - Q_{n/2}|."""
    def rule(m):
        pts, wts = fundamental_domain_rule(m)
        return float(np.sum(wts * np.asarray(target.deviation(pts, R)) ** 2))

    fine = rule(n)
    coarse = rule(max(2, n // 2))
    return fine, abs(fine - coarse)


def genus_variance(D: int, genus, R: float, cfg: MonteCarloConfig = MonteCarloConfig(), step: float = 0.01) -> VarianceReport:
    """Variance of the Heegner (D < 0) or geodesic (D > 0) measure of a genus."""
    target = HeegnerTarget(D, genus) if D < 0 else GeodesicTarget(D, genus, step)
    return var_estimator(target, R, cfg)


# ---------------------------------------------------------------------------
# Planck bound

@dataclass(frozen=True)
class PlanckRecord:
    t: float
    R: float
    w: complex
    lhs: float
    rhs: float

    @property
    def violation(self) -> float:
        return max(0.0, self.lhs - self.rhs)


def planck_check(t: float, R: float, w) -> PlanckRecord:
    """|h_R(t)|^2 |E(w)|^2 against the ball average of |E|^2 (Cauchy-Schwarz)."""
    wp = Point.of(w)
    E = eisenstein_series(0.5 + 1j * t)
    lhs = abs(h_R(t, R)) ** 2 * abs(E(wp.z)) ** 2
    rhs = ball_average(lambda z: np.abs(E(z)) ** 2, wp, R, tol=1e-12)
    return PlanckRecord(t, R, wp.z, float(lhs), float(rhs))
