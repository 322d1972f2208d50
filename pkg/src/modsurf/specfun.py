"""Special functions used throughout the package.

Zeta and Hurwitz zeta values come from a self-contained Euler-Maclaurin
summation (with its analytic derivative), Dirichlet L-functions of real
primitive characters are assembled from Hurwitz values, and the K-Bessel
function of complex order lives in :mod:`modsurf.kbessel`.  Gamma, digamma
and J-Bessel values are taken from scipy.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import DomainError, PoleError, ResourceError

LOG_PI = math.log(math.pi)
EULER_GAMMA = 0.57721566490153286061


@dataclass(frozen=True)
class PrecisionPolicy:
    """Tolerances and iteration caps handed to numerical routines."""

    target_abs_tol: float = 1e-12
    target_rel_tol: float = 1e-12
    max_terms: int = 200_000

    def __post_init__(self):
        if not (self.target_abs_tol > 0 and self.target_rel_tol > 0):
            raise DomainError("tolerances must be positive")
        if self.max_terms < 1:
            raise DomainError("max_terms must be positive")


DEFAULT_POLICY = PrecisionPolicy()


# ---------------------------------------------------------------------------
# Gamma family (scipy backed)

def log_gamma(s):
    """Principal branch of log Gamma for real or complex input."""
    s_arr = np.asarray(s, dtype=complex)
    bad = (s_arr.imag == 0) & (s_arr.real <= 0) & (s_arr.real == np.round(s_arr.real))
    if np.any(bad):
        raise PoleError(f"log_gamma has a pole at {s}")
    out = special.loggamma(s_arr)
    return complex(out) if out.ndim == 0 else out


def digamma(s):
    s_arr = np.asarray(s, dtype=complex)
    bad = (s_arr.imag == 0) & (s_arr.real <= 0) & (s_arr.real == np.round(s_arr.real))
    if np.any(bad):
        raise PoleError(f"digamma has a pole at {s}")
    out = special.psi(s_arr)
    return complex(out) if out.ndim == 0 else out


def bessel_J(order: int, x):
    """J_0 or J_1 of a real argument."""
    if order == 0:
        return special.j0(x)
    if order == 1:
        return special.j1(x)
    return special.jv(order, x)


# ---------------------------------------------------------------------------
# Euler-Maclaurin zeta

_EM_ORDER = 14


@lru_cache(maxsize=1)
def _em_coefficients() -> np.ndarray:
    # B_{2k} / (2k)!  for k = 1.._EM_ORDER
    b = special.bernoulli(2 * _EM_ORDER)
    return np.array([b[2 * k] / math.factorial(2 * k) for k in range(1, _EM_ORDER + 1)])


def _em_cutoff(s: complex) -> int:
    return int(math.ceil(2.0 * abs(s + 2 * _EM_ORDER) / math.pi)) + 2


def hurwitz_zeta(s: complex, a, *, derivative: bool = False, policy: PrecisionPolicy = DEFAULT_POLICY):
    """Hurwitz zeta(s, a) for complex s != 1 and real a > 0 (array allowed).

    With ``derivative=True`` returns ``(value, d/ds value)``.
    """
    s = complex(s)
    if s == 1:
        raise PoleError("Hurwitz zeta has a pole at s = 1")
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if np.any(a <= 0):
        raise DomainError("Hurwitz shift must be positive")
    cutoff = _em_cutoff(s)
    if cutoff * a.size > 50 * policy.max_terms * 100:
        raise ResourceError(f"Euler-Maclaurin cutoff {cutoff} too large for {a.size} shifts")

    value = np.zeros(a.size, dtype=complex)
    dvalue = np.zeros(a.size, dtype=complex)
    n = np.arange(cutoff, dtype=float)
    chunk = max(1, 2_000_000 // cutoff)
    for lo in range(0, a.size, chunk):
        base = n[None, :] + a[lo:lo + chunk, None]
        logs = np.log(base)
        powers = np.exp(-s * logs)
        value[lo:lo + chunk] = powers.sum(axis=1)
        if derivative:
            dvalue[lo:lo + chunk] = -(logs * powers).sum(axis=1)

    big = cutoff + a
    log_big = np.log(big)
    head = np.exp((1 - s) * log_big)
    value += head / (s - 1) + 0.5 * np.exp(-s * log_big)
    if derivative:
        dvalue += -log_big * head / (s - 1) - head / (s - 1) ** 2
        dvalue += -0.5 * log_big * np.exp(-s * log_big)

    # correction terms  c_k (s)_{2k-1} big^{-s-2k+1}
    poch, dpoch = s, 1.0 + 0j
    for k, c in enumerate(_em_coefficients(), start=1):
        if k > 1:
            for j in (2 * k - 3, 2 * k - 2):
                poch, dpoch = poch * (s + j), dpoch * (s + j) + poch
        term = c * np.exp((-s - 2 * k + 1) * log_big)
        value += poch * term
        if derivative:
            dvalue += (dpoch - log_big * poch) * term
    if derivative:
        return value, dvalue
    return value


def zeta(s: complex) -> complex:
    """Riemann zeta for complex s != 1."""
    return complex(hurwitz_zeta(s, 1.0)[0])


def zeta_derivative(s: complex) -> complex:
    _, d = hurwitz_zeta(s, 1.0, derivative=True)
    return complex(d[0])


def zeta_log_derivative(s: complex) -> complex:
    """zeta'(s)/zeta(s)."""
    v, d = hurwitz_zeta(s, 1.0, derivative=True)
    if v[0] == 0:
        raise PoleError(f"zeta vanishes at {s}")
    return complex(d[0] / v[0])


# ---------------------------------------------------------------------------
# completed zeta and the scattering coefficient

def log_completed_zeta(s: complex) -> complex:
    """log of pi^{-s/2} Gamma(s/2) zeta(s), any branch (use via exp).

    The functional equation Lambda(s) = Lambda(1-s) moves Re s < 1/2 to the
    right half, away from the trivial zeros.
    """
    s = complex(s)
    if s == 0 or s == 1:
        raise PoleError(f"completed zeta has a pole at {s}")
    if s.real < 0.5:
        s = 1 - s
    return -0.5 * s * LOG_PI + log_gamma(s / 2) + cmath.log(zeta(s))


def completed_zeta(s: complex) -> complex:
    return cmath.exp(log_completed_zeta(s))


def completed_zeta_log_derivative(s: complex) -> complex:
    s = complex(s)
    if s == 0 or s == 1:
        raise PoleError(f"completed zeta has a pole at {s}")
    if s.real < 0.5:
        return -completed_zeta_log_derivative(1 - s)
    return -0.5 * LOG_PI + 0.5 * digamma(s / 2) + zeta_log_derivative(s)


def phi(s: complex) -> complex:
    """Scattering coefficient Lambda(2-2s)/Lambda(2s) of the modular group."""
    s = complex(s)
    if s == 0.5:
        return -1.0 + 0j
    if s == 0 or s == 1:
        raise PoleError(f"scattering coefficient has a pole at {s}")
    return cmath.exp(log_completed_zeta(2 - 2 * s) - log_completed_zeta(2 * s))


def phi_log_derivative(s: complex) -> complex:
    """d/ds log phi(s)."""
    s = complex(s)
    return -2 * completed_zeta_log_derivative(2 - 2 * s) - 2 * completed_zeta_log_derivative(2 * s)


# ---------------------------------------------------------------------------
# Kronecker symbol and real characters

def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a/n) for integers a, n."""
    if n == 0:
        return 1 if abs(a) == 1 else 0
    result = 1
    if n < 0:
        n = -n
        if a < 0:
            result = -1
    v = (n & -n).bit_length() - 1
    if v:
        if a % 2 == 0:
            return 0
        n >>= v
        if v % 2 and a % 8 in (3, 5):
            result = -result
    a %= n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def _strip_twos(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    low = x & -x
    v = np.log2(low.astype(float)).round().astype(np.int64)
    return x >> v, v


def kronecker_array(a: int, n: np.ndarray) -> np.ndarray:
    """Vectorised (a/n) for a fixed integer a and positive integers n."""
    n = np.asarray(n, dtype=np.int64)
    if np.any(n <= 0):
        raise DomainError("kronecker_array expects positive moduli")
    odd, v = _strip_twos(n.copy())
    result = np.ones(n.shape, dtype=np.int64)
    if a % 2 == 0:
        result[v > 0] = 0
    elif a % 8 in (3, 5):
        result[v % 2 == 1] *= -1
    # Jacobi symbol (a / odd) by the binary algorithm on the active set only
    idx = np.nonzero(result != 0)[0]
    top = odd[idx]
    bottom = np.mod(a, top)
    sign = np.ones(idx.size, dtype=np.int64)
    while idx.size:
        zero = bottom == 0
        if zero.any():
            done = zero
            result[idx[done]] *= np.where(top[done] == 1, sign[done], 0)
            keep = ~done
            idx, top, bottom, sign = idx[keep], top[keep], bottom[keep], sign[keep]
            if not idx.size:
                break
        bottom, v = _strip_twos(bottom)
        flip = (v % 2 == 1) & ((top % 8 == 3) | (top % 8 == 5))
        sign[flip] *= -1
        flip = (bottom % 4 == 3) & (top % 4 == 3)
        sign[flip] *= -1
        top, bottom = bottom, top % bottom
    return result


def is_fundamental_discriminant(d: int) -> bool:
    if d == 1:
        return True
    if d == 0:
        return False
    if d % 4 == 1:
        return _squarefree(abs(d))
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and _squarefree(abs(m))
    return False


def _squarefree(n: int) -> bool:
    p = 2
    while p * p <= n:
        if n % (p * p) == 0:
            return False
        if n % p == 0:
            n //= p
        p += 1 if p == 2 else 2
    return True


def character_values(d: int) -> np.ndarray:
    """chi_d(a) for a = 1..|d| as an int array."""
    q = abs(d)
    return kronecker_array(d, np.arange(1, q + 1))


def dirichlet_L(s: complex, d: int, *, policy: PrecisionPolicy = DEFAULT_POLICY) -> complex:
    """L(s, chi_d) for the real primitive character of a fundamental discriminant d."""
    if not is_fundamental_discriminant(d):
        raise DomainError(f"{d} is not a fundamental discriminant")
    if abs(d) > 10**6:
        raise ResourceError("conductor above 10^6")
    s = complex(s)
    if d == 1:
        return zeta(s)
    q = abs(d)
    chi = character_values(d).astype(float)
    a = np.arange(1, q + 1, dtype=float) / q
    if s == 1:
        return complex(-np.dot(chi, special.psi(a)) / q)
    nz = chi != 0
    vals = hurwitz_zeta(s, a[nz], policy=policy)
    return complex(q ** (-s) * np.dot(chi[nz], vals))


def dirichlet_L_at_one(d: int) -> float:
    """L(1, chi_d) via the digamma identity (fast path for class-number checks)."""
    q = abs(d)
    chi = character_values(d).astype(float)
    a = np.arange(1, q + 1, dtype=float) / q
    return float(-np.dot(chi, special.psi(a)) / q)


# ---------------------------------------------------------------------------
# Dedekind eta and the Gamma-factor comparison

def dedekind_eta(z: complex, tol: float = 1e-16) -> complex:
    """eta(z) = e(z/24) prod_{m>=1} (1 - e(mz)) for Im z > 0."""
    z = complex(z)
    if z.imag <= 0:
        raise DomainError("eta needs Im z > 0")
    q = cmath.exp(2j * math.pi * z)
    m_max = int(math.ceil(math.log(tol) / math.log(abs(q)))) + 1 if abs(q) > 0 else 1
    if m_max > 10**6:
        raise ResourceError("eta product too long; reduce z first")
    m = np.arange(1, m_max + 1)
    qm = np.exp(2j * math.pi * z * m)
    return cmath.exp(2j * math.pi * z / 24) * complex(np.prod(1 - qm))


def log_abs_eta(z: complex) -> float:
    """log|eta(z)|, stable for large Im z."""
    z = complex(z)
    if z.imag <= 0:
        raise DomainError("eta needs Im z > 0")
    m_max = max(1, int(math.ceil(40.0 / (2 * math.pi * z.imag))) + 1)
    m = np.arange(1, m_max + 1)
    qm = np.exp(2j * math.pi * z * m)
    return -2 * math.pi * z.imag / 24 + float(np.sum(np.log(np.abs(1 - qm))))


def gamma_factor_product(t_f: float, t_g: float) -> float:
    """Exact Gamma-factor product in the triple-product comparison (real, positive)."""
    a = 2 * t_g + t_f
    b = 2 * t_g - t_f
    lg = special.loggamma
    val = (
        2 * lg(0.25 + 0.5j * a).real + 2 * lg(0.25 + 0.5j * b).real
        - 4 * lg(0.5 + 1j * t_g).real
        + 4 * lg(0.25 + 0.5j * t_f).real
        - 2 * lg(0.5 + 1j * t_f).real
    )
    return math.pi * math.exp(val)


def gamma_factor_main_term(t_f: float, t_g: float) -> float:
    omega = 0.0 if t_f <= 2 * t_g else t_f - 2 * t_g
    return 8 * math.pi**2 * math.exp(-math.pi * omega) / (
        (1 + t_f) * math.sqrt(1 + 2 * t_g + t_f) * math.sqrt(1 + abs(2 * t_g - t_f))
    )


def gamma_factor_ratio(t_f: float, t_g: float) -> float:
    """Exact product divided by its Stirling main term."""
    if t_f < 0 or t_g < 0:
        raise DomainError("spectral parameters must be non-negative")
    return gamma_factor_product(t_f, t_g) / gamma_factor_main_term(t_f, t_g)
