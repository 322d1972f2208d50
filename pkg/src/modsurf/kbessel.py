"""K-Bessel function K_nu(x) for complex order and real positive argument.

Values are returned *scaled* by exp(pi |Im nu| / 2) because K_{a+ib}(x)
decays like exp(-pi |b| / 2) in the order.  Three evaluation routes:

* shifted trapezoid: K_nu(x) = 1/2 int exp(-x cosh u + nu u) du along the
  line Im u = asin(b / x), which removes the oscillatory cancellation when
  |b| < x;
* power series pi / (2 sin pi nu) (I_{-nu} - I_nu) for moderate |b| and
  x <= |b|, whose cancellation is bounded by exp(x^2 / 4|b|);
* mpmath for the remaining corner (large |b| with x below the turning point
  or orders close to an integer).

Real orders go straight to scipy's ``kve``.  :class:`KTable` builds a
piecewise Chebyshev interpolant in log x for fast repeated evaluation at a
fixed order.
"""

from __future__ import annotations

import cmath
import math
from functools import lru_cache

import mpmath
import numpy as np
from scipy import special

from .errors import DomainError, ToleranceNotMet

SERIES_MAX_ORDER = 60.0
TABLE_MAX_ORDER = 300.0


def _contour(nu: complex, x: float, extra: float, tol: float = 2e-16) -> complex:
    a, b = nu.real, nu.imag
    c = math.asin(b / x)
    xc = x * math.cos(c)
    # locate the peak of the real part and the window where it drops by ~40 nats
    v_peak = math.asinh(a / xc)
    f_peak = -xc * math.cosh(v_peak) + a * v_peak

    def reach(direction: int) -> float:
        v = v_peak
        step = 0.5
        while -xc * math.cosh(v) + a * v > f_peak - 42.0:
            v += direction * step
            step *= 1.3
        return v

    lo, hi = reach(-1), reach(1)
    shift = extra - b * c

    def integrand(v: np.ndarray) -> np.ndarray:
        re = -xc * np.cosh(v) + a * v + shift
        im = -x * np.sinh(v) * math.sin(c) + b * v + a * c
        return np.exp(re + 1j * im)

    n = 32
    h = (hi - lo) / n
    grid = lo + h * np.arange(n + 1)
    total = integrand(grid).sum() - 0.5 * (integrand(np.array([lo, hi]))).sum()
    estimate = 0.5 * h * total
    for _ in range(16):
        mids = lo + h * (np.arange(n) + 0.5)
        total = total + integrand(mids).sum()
        n *= 2
        h *= 0.5
        new = 0.5 * h * total
        if abs(new - estimate) <= tol * max(abs(new), 1e-300) * 64 and n >= 128:
            return complex(new)
        estimate = new
    raise ToleranceNotMet(f"K contour quadrature did not converge for nu={nu}, x={x}", best=complex(estimate))


def _series(nu: complex, x: float, extra: float) -> complex:
    q = x * x / 4.0
    log_pre = math.log(math.pi / 2) - cmath.log(cmath.sin(math.pi * nu)) + extra
    out = 0j
    for sign in (-1, 1):
        mu = sign * nu
        log_lead = mu * math.log(x / 2) - special.loggamma(1 + mu)
        term = 1.0 + 0j
        total = term
        k = 0
        while True:
            k += 1
            term *= q / (k * (k + mu))
            total += term
            if k > x and abs(term) < 1e-18 * abs(total):
                break
            if k > 5000:
                raise ToleranceNotMet(f"K series did not converge for nu={nu}, x={x}")
        out += -sign * cmath.exp(log_pre + log_lead) * total
    return out


def _mpmath(nu: complex, x: float, extra: float) -> complex:
    with mpmath.workdps(30):
        val = mpmath.besselk(mpmath.mpc(nu.real, nu.imag), mpmath.mpf(x)) * mpmath.exp(extra)
        return complex(val)


def bessel_K_exp(nu: complex, x: float, extra: float) -> complex:
    """K_nu(x) * exp(extra); the caller picks ``extra`` to keep the result in range."""
    nu = complex(nu)
    x = float(x)
    if not x > 0:
        raise DomainError("K-Bessel argument must be positive")
    a, b = nu.real, abs(nu.imag)
    if nu.imag == 0:
        return complex(special.kve(a, x) * math.exp(extra - x))
    val = _dispatch(complex(a, b), x, extra)
    if a == 0:
        # purely imaginary order: K is real and even in the order
        return complex(val.real)
    # K_{conj nu}(x) = conj K_nu(x) for real x
    return val.conjugate() if nu.imag < 0 else val


def _dispatch(nu: complex, x: float, extra: float) -> complex:
    b = nu.imag
    if b < x and math.sqrt(x * x - b * b) >= 1.0:
        return _contour(nu, x, extra)
    if b <= SERIES_MAX_ORDER and abs(cmath.sin(math.pi * nu)) > 1e-3:
        return _series(nu, x, extra)
    return _mpmath(nu, x, extra)


def bessel_K_scaled(nu: complex, x: float) -> complex:
    """exp(pi |Im nu| / 2) K_nu(x)."""
    return bessel_K_exp(nu, x, 0.5 * math.pi * abs(complex(nu).imag))


def bessel_K(nu: complex, x: float) -> complex:
    """K_nu(x); may underflow to zero for large |Im nu| or x."""
    nu = complex(nu)
    return bessel_K_exp(nu, x, 0.0)


def negligible_argument(nu: complex, log_threshold: float = -42.0) -> float:
    """Smallest x beyond which the scaled K_nu(x) stays below exp(log_threshold)."""
    b = abs(complex(nu).imag)
    a = abs(complex(nu).real)

    def log_size(x: float) -> float:
        if x <= b:
            return 0.0
        r = math.sqrt(x * x - b * b)
        return -r - b * math.asin(b / x) + 0.5 * math.pi * b - 0.5 * math.log(max(r, 1.0)) + a * math.log1p(a / x) + 1.0

    x = max(b, 1.0)
    while log_size(x) > log_threshold:
        x = x * 1.05 + 1.0
    return x


class KTable:
    """Piecewise Chebyshev interpolant of exp(pi|b|/2) K_nu(x) on [x_lo, x_hi].

    The stored quantity is exp(x) times the scaled value, which is slowly
    varying once x exceeds |b| and keeps relative accuracy across the decay.
    Beyond ``x_hi`` the function is treated as zero.
    """

    degree = 24

    def __init__(self, nu: complex, x_lo: float, x_hi: float | None = None):
        nu = complex(nu)
        if abs(nu.imag) > TABLE_MAX_ORDER:
            raise DomainError("order too large for tabulation; evaluate terms directly")
        self.nu = nu
        self.x_lo = float(x_lo)
        self.x_hi = float(x_hi) if x_hi is not None else negligible_argument(nu)
        if self.x_hi <= self.x_lo:
            self.x_hi = self.x_lo * 1.5 + 1.0
        b = abs(nu.imag)
        width = min(0.25, 2.0 / (b + 1.0))
        self.u_lo = math.log(self.x_lo)
        u_hi = math.log(self.x_hi)
        self.n_int = max(1, int(math.ceil((u_hi - self.u_lo) / width)))
        self.width = (u_hi - self.u_lo) / self.n_int
        m = self.degree
        j = np.arange(m + 1)
        self.nodes = np.cos(np.pi * j / m)
        w = (-1.0) ** j
        w[0] *= 0.5
        w[-1] *= 0.5
        self.weights = w
        extra_b = 0.5 * math.pi * b
        centers = self.u_lo + self.width * (np.arange(self.n_int) + 0.5)
        us = centers[:, None] + 0.5 * self.width * self.nodes[None, :]
        xs = np.exp(us)
        if nu.imag == 0:
            vals = special.kve(nu.real, xs).astype(complex)
        else:
            vals = np.array([[bessel_K_exp(nu, xv, xv + extra_b) for xv in row] for row in xs])
        self.values = vals

    def __call__(self, x) -> np.ndarray:
        """Scaled K at the points x (array); zero above x_hi."""
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        out = np.zeros(flat.shape, dtype=complex)
        if np.any(flat < self.x_lo * (1 - 1e-12)):
            raise DomainError(f"argument below table range {self.x_lo}")
        inside = flat < self.x_hi
        xi = flat[inside]
        u = np.log(np.maximum(xi, self.x_lo))
        pos = (u - self.u_lo) / self.width
        idx = np.clip(pos.astype(np.int64), 0, self.n_int - 1)
        local = 2.0 * (pos - idx) - 1.0
        diff = local[:, None] - self.nodes[None, :]
        exact = diff == 0
        diff[exact] = 1.0
        ratio = self.weights[None, :] / diff
        vals = self.values[idx]
        res = (ratio * vals).sum(axis=1) / ratio.sum(axis=1)
        hit = exact.any(axis=1)
        if hit.any():
            res[hit] = vals[hit][exact[hit]]
        out[inside] = res * np.exp(-xi)
        return out.reshape(x.shape)


@lru_cache(maxsize=64)
def k_table(nu: complex, x_lo: float) -> KTable:
    """Cached table; lru_cache is thread-safe for lookups and tables are immutable after build."""
    return KTable(nu, x_lo)
