"""Eisenstein series of the modular group, truncation, and Maass cusp forms.

The non-holomorphic Eisenstein series is evaluated from its Fourier
expansion

    E(z, s) = y^s + phi(s) y^{1-s}
              + (4 sqrt(y) / Lambda(2s)) sum_{n>=1} n^{s-1/2} sigma_{1-2s}(n)
                K_{s-1/2}(2 pi n y) cos(2 pi n x),

after reducing z into the fundamental domain, where the expansion converges
fastest.  Lambda is the completed zeta function and phi(s) = Lambda(2-2s)/Lambda(2s).
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import special

from . import specfun
from .errors import DomainError, ResourceError, ToleranceNotMet
from .geometry import SQRT3_2, Point, reduce_array
from .kbessel import TABLE_MAX_ORDER, bessel_K_exp, k_table, negligible_argument

Y_FLOOR = SQRT3_2 * (1 - 1e-9)


def _divisor_power_sums(n_max: int, exponent: complex) -> np.ndarray:
    """sigma_exponent(n) = sum_{d | n} d^exponent for n = 0..n_max (index 0 unused)."""
    out = np.zeros(n_max + 1, dtype=complex)
    d = np.arange(1, n_max + 1)
    powers = np.exp(exponent * np.log(d))
    for k in range(1, n_max + 1):
        out[k::k] += powers[k - 1]
    return out


class EisensteinSeries:
    """Vectorised evaluator of E(z, s) for one fixed s.

    Points are reduced into F first, so the K-Bessel arguments are at least
    2 pi n sqrt(3)/2.  For |Im s| up to a few hundred the K-values come from
    a cached Chebyshev table; beyond that each term is evaluated directly.
    """

    def __init__(self, s: complex):
        s = complex(s)
        if s == 0 or s == 1:
            raise DomainError(f"E(z, s) has a pole at s = {s}")
        self.s = s
        self.nu = s - 0.5
        self.vanishes = s == 0.5
        if self.vanishes:
            return
        self.phi = specfun.phi(s)
        b = abs(self.nu.imag)
        self._log_scale = 0.5 * math.pi * b
        log_pref = -specfun.log_completed_zeta(2 * s) - self._log_scale
        self._log_pref = log_pref
        self.x_max = negligible_argument(self.nu, -40.0 - max(0.0, log_pref.real))
        self.n_max = max(1, int(self.x_max / (2 * math.pi * Y_FLOOR)) + 1)
        self.coeff = self._coefficients(self.n_max)
        if self.nu.imag == 0:
            self._table = None
        elif b <= TABLE_MAX_ORDER:
            self._table = k_table(self.nu, 2 * math.pi * Y_FLOOR)
        else:
            self._table = "direct"

    def _coefficients(self, n_max: int) -> np.ndarray:
        n = np.arange(1, n_max + 1)
        sig = _divisor_power_sums(n_max, 1 - 2 * self.s)[1:]
        return 4 * np.exp(self._log_pref + (self.s - 0.5) * np.log(n)) * sig

    # -- pieces ---------------------------------------------------------
    def constant_term(self, y):
        y = np.asarray(y, dtype=float)
        if self.vanishes:
            return np.zeros(y.shape, dtype=complex)
        return np.exp(self.s * np.log(y)) + self.phi * np.exp((1 - self.s) * np.log(y))

    def _scaled_k(self, x: np.ndarray) -> np.ndarray:
        if self._table is None:
            return special.kv(self.nu.real, x).astype(complex)
        if isinstance(self._table, str) or x.min() < self._table.x_lo:
            flat = x.ravel()
            out = np.zeros(flat.shape, dtype=complex)
            for i, xv in enumerate(flat):
                if xv < self.x_max:
                    out[i] = bessel_K_exp(self.nu, float(xv), self._log_scale)
            return out.reshape(x.shape)
        return self._table(x)

    def fourier_coefficients(self, y) -> np.ndarray:
        """Array a_n(y), shape (len(y), n_max), with E = c(y) + sum a_n(y) cos(2 pi n x)."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        coeff = self.coeff
        if y.size and y.min() < Y_FLOOR:
            # unreduced points need more terms; slower direct K evaluations
            n_need = max(1, int(self.x_max / (2 * math.pi * y.min())) + 1)
            if n_need > 200_000:
                raise ResourceError("point too close to the real axis for the Fourier expansion")
            coeff = self._coefficients(n_need)
        n = np.arange(1, coeff.size + 1)
        arg = 2 * math.pi * np.outer(y, n)
        k = self._scaled_k(arg)
        return np.sqrt(y)[:, None] * coeff[None, :] * k

    def __call__(self, z, *, reduce: bool = True) -> np.ndarray:
        z_arr = np.asarray(z, dtype=complex)
        scalar = z_arr.ndim == 0
        flat = np.atleast_1d(z_arr).ravel()
        if self.vanishes:
            out = np.zeros(flat.shape, dtype=complex)
        else:
            pts = reduce_array(flat) if reduce else flat
            out = np.empty(pts.shape, dtype=complex)
            chunk = max(1, 400_000 // self.n_max)
            for lo in range(0, pts.size, chunk):
                p = pts[lo:lo + chunk]
                a = self.fourier_coefficients(p.imag)
                n = np.arange(1, a.shape[1] + 1)
                out[lo:lo + chunk] = self.constant_term(p.imag) + np.sum(
                    a * np.cos(2 * math.pi * np.outer(p.real, n)), axis=1)
        if scalar:
            return complex(out[0])
        return out.reshape(z_arr.shape)

    def truncated(self, z, T: float) -> np.ndarray:
        """Lambda^T E: the constant term is removed where Im(reduced z) > T.

        For T >= 1 only the identity coset reaches above height T inside F,
        so both terms y^s and phi(s) y^{1-s} are subtracted there.
        """
        if T < 1:
            raise DomainError("truncation height must be at least 1")
        z_arr = np.asarray(z, dtype=complex)
        pts = reduce_array(np.atleast_1d(z_arr).ravel())
        vals = self(pts, reduce=False)
        high = pts.imag > T
        if high.any():
            vals[high] -= self.constant_term(pts.imag[high])
        if z_arr.ndim == 0:
            return complex(vals[0])
        return vals.reshape(z_arr.shape)


@lru_cache(maxsize=32)
def eisenstein_series(s: complex) -> EisensteinSeries:
    """Cached evaluator (read-only after construction)."""
    return EisensteinSeries(complex(s))


def eisenstein_eval(z, s: complex) -> complex:
    """E(z, s) at a single point."""
    Point.of(z)
    return complex(eisenstein_series(complex(s))(complex(Point.of(z).z)))


def truncated_eisenstein(z, s: complex, T: float) -> complex:
    return complex(eisenstein_series(complex(s)).truncated(complex(Point.of(z).z), T))


# ---------------------------------------------------------------------------
# Maass-Selberg relation

def maass_selberg_rhs(s: complex, r: complex, T: float) -> complex:
    """Closed form of <Lambda^T E(., s), Lambda^T E(., r)> for T >= 1."""
    s, r = complex(s), complex(r)
    rb = r.conjugate()
    for val in (s + rb - 1, s - rb):
        if abs(val) < 1e-14:
            raise DomainError("Maass-Selberg closed form needs s + conj(r) != 1 and s != conj(r)")
    ps = specfun.phi(s)
    pr = specfun.phi(r).conjugate()
    logT = math.log(T)
    return (cmath.exp((s + rb - 1) * logT) / (s + rb - 1)
            + pr * cmath.exp((s - rb) * logT) / (s - rb)
            + ps * cmath.exp((rb - s) * logT) / (rb - s)
            + ps * pr * cmath.exp((1 - s - rb) * logT) / (1 - s - rb))


def maass_selberg_lhs(s: complex, r: complex, T: float, *, nodes: int = 48, tol: float = 1e-9) -> complex:
    """<Lambda^T E(., s), Lambda^T E(., r)> over F by quadrature.

    Three regions: the sliver under y = 1 (two-dimensional Gauss-Legendre),
    the band 1 <= y <= T and the cusp y >= T, where integrating over x first
    reduces the product to the constant terms plus half the sum of products
    of Fourier coefficients.
    """
    if T < 1:
        raise DomainError("truncation height must be at least 1")
    es, er = eisenstein_series(complex(s)), eisenstein_series(complex(r))
    prev = None
    n = nodes
    for _ in range(5):
        val = _ms_quadrature(es, er, T, n)
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            return val
        prev = val
        n *= 2
    raise ToleranceNotMet("Maass-Selberg quadrature did not converge", best=val, error=abs(val - prev))


def _ms_quadrature(es, er, T, n):
    g, gw = np.polynomial.legendre.leggauss(n)
    # sliver: 0 <= x <= 1/2 (the integrand is even in x), sqrt(1-x^2) <= y <= 1
    xs = 0.25 * (g + 1)
    wx = 0.25 * gw
    pts, wts = [], []
    for xv, wv in zip(xs, wx):
        lo = math.sqrt(1 - xv * xv)
        ys = lo + 0.5 * (1 - lo) * (g + 1)
        pts.append(xv + 1j * ys)
        wts.append(2 * wv * 0.5 * (1 - lo) * gw / ys**2)
    pts = np.concatenate(pts)
    wts = np.concatenate(wts)
    sliver = np.sum(wts * es(pts, reduce=False) * np.conj(er(pts, reduce=False)))

    def x_integrated(y, with_constant):
        a = es.fourier_coefficients(y)
        b = er.fourier_coefficients(y)
        m = min(a.shape[1], b.shape[1])
        val = 0.5 * np.sum(a[:, :m] * np.conj(b[:, :m]), axis=1)
        if with_constant:
            val = val + es.constant_term(y) * np.conj(er.constant_term(y))
        return val

    band = 0j
    if T > 1:
        ys = 1 + 0.5 * (T - 1) * (g + 1)
        band = np.sum(0.5 * (T - 1) * gw / ys**2 * x_integrated(ys, True))
    top = 0j
    for lo, hi in ((T, T + 2.0), (T + 2.0, T + 8.0)):
        ys = lo + 0.5 * (hi - lo) * (g + 1)
        top += np.sum(0.5 * (hi - lo) * gw / ys**2 * x_integrated(ys, False))
    return complex(sliver + band + top)


def l2_norm_truncated(t: float, T: float) -> float:
    """||Lambda^T E(., 1/2 + it)||^2, the limit of the Maass-Selberg diagonal.

    2 log T - phi'/phi(1/2+it) + Im(conj(phi(1/2+it)) T^{2it}) / t; the last
    term comes from the two cross terms, which stay bounded but do not vanish.
    """
    if t == 0:
        raise DomainError("t = 0 is excluded (E(z, 1/2) vanishes identically)")
    s = 0.5 + 1j * t
    ph = specfun.phi(s)
    cross = (ph.conjugate() * cmath.exp(2j * t * math.log(T))).imag / t
    return float(2 * math.log(T) - specfun.phi_log_derivative(s).real + cross)


def l2_norm_main_term(t: float, T: float) -> float:
    """2 log T - 2 log pi + 2 Re psi(1/2+it) + 4 Re zeta'/zeta(1+2it)."""
    return float(2 * math.log(T) - 2 * specfun.LOG_PI
                 + 2 * specfun.digamma(0.5 + 1j * t).real
                 + 4 * specfun.zeta_log_derivative(1 + 2j * t).real)


# ---------------------------------------------------------------------------
# Maass cusp forms

_HEADER = re.compile(r"^maass\s+t=([0-9.eE+-]+)\s+parity=(even|odd)\s+N=(\d+)\s*$")


@dataclass
class MaassForm:
    """Hecke-normalised Maass cusp form given by its eigenvalues lambda(n)."""

    t: float
    parity: str
    coefficients: np.ndarray  # lambda(1..N)
    source: str = ""

    def __post_init__(self):
        if self.parity not in ("even", "odd"):
            raise DomainError("parity must be 'even' or 'odd'")
        self.coefficients = np.asarray(self.coefficients, dtype=float)

    @property
    def n_terms(self) -> int:
        return int(self.coefficients.size)

    def __call__(self, z, *, reduce: bool = True) -> np.ndarray:
        z_arr = np.asarray(z, dtype=complex)
        flat = np.atleast_1d(z_arr).ravel()
        pts = reduce_array(flat) if reduce else flat
        # the first omitted term must sit beyond the K-Bessel decay point
        if 2 * math.pi * (self.n_terms + 1) * pts.imag.min() < negligible_argument(complex(0, self.t), -36.0):
            raise ToleranceNotMet(f"{self.n_terms} coefficients do not resolve y = {pts.imag.min():.3g}")
        n = np.arange(1, self.n_terms + 1)
        arg = 2 * math.pi * np.outer(pts.imag, n)
        k = np.empty(arg.shape)
        table = k_table(complex(0, self.t), 2 * math.pi * Y_FLOOR) if reduce else None
        if table is not None:
            k = (table(arg) * math.exp(-0.5 * math.pi * self.t)).real
        else:
            k = np.vectorize(lambda v: bessel_K_exp(complex(0, self.t), v, 0.0).real)(arg)
        trig = np.cos if self.parity == "even" else np.sin
        vals = np.sqrt(pts.imag) * np.sum(self.coefficients[None, :] * k * trig(2 * math.pi * np.outer(pts.real, n)), axis=1)
        if z_arr.ndim == 0:
            return float(vals[0])
        return vals.reshape(z_arr.shape)


def load_maass(path, *, hecke_tol: float = 1e-6) -> MaassForm:
    """Parse a Maass data file and check lambda(2) lambda(3) = lambda(6)."""
    text = Path(path).read_text().splitlines()
    lines = [ln.split("#", 1)[0].strip() for ln in text]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise DomainError(f"{path}: empty Maass file")
    m = _HEADER.match(lines[0])
    if not m:
        raise DomainError(f"{path}: bad header {lines[0]!r}")
    t, parity, N = float(m.group(1)), m.group(2), int(m.group(3))
    if N > 10**6:
        raise ResourceError("Maass file declares more than 10^6 coefficients")
    coeffs = np.full(N, np.nan)
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise DomainError(f"{path}: malformed line {ln!r}")
        try:
            idx, val = int(parts[0]), float(parts[1])
        except ValueError as exc:
            raise DomainError(f"{path}: malformed line {ln!r}") from exc
        if not 1 <= idx <= N:
            raise DomainError(f"{path}: index {idx} outside 1..{N}")
        coeffs[idx - 1] = val
    if np.isnan(coeffs).any():
        raise DomainError(f"{path}: missing coefficients")
    if abs(coeffs[0] - 1) > hecke_tol:
        raise DomainError(f"{path}: lambda(1) must be 1")
    if N >= 6 and abs(coeffs[1] * coeffs[2] - coeffs[5]) > hecke_tol * max(1.0, abs(coeffs[5])):
        raise DomainError(f"{path}: Hecke relation lambda(2)lambda(3) = lambda(6) fails")
    return MaassForm(t, parity, coeffs, str(path))
