"""Binary quadratic forms, narrow class groups and their geometric invariants.

Forms are ax^2 + bxy + cy^2 with discriminant D = b^2 - 4ac.  Integer
arithmetic is exact (Python integers), so no overflow policy is needed.

For D < 0 the classes of positive definite primitive forms are represented
by reduced forms and correspond to Heegner points in the fundamental domain.
For D > 0 narrow classes correspond to cycles of reduced indefinite forms
and to closed geodesics on the modular surface.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from math import gcd, isqrt
from typing import Callable, Sequence

import numpy as np

from . import specfun
from .errors import DomainError, ResourceError, ToleranceNotMet
from .geometry import Point, matmul, reduce as reduce_point

MAX_ABS_DISC = 10**7


# ---------------------------------------------------------------------------
# forms

@dataclass(frozen=True, order=True)
class BinaryQuadraticForm:
    a: int
    b: int
    c: int

    @property
    def disc(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def __call__(self, x, y):
        return self.a * x * x + self.b * x * y + self.c * y * y

    def is_primitive(self) -> bool:
        return gcd(gcd(self.a, self.b), self.c) == 1

    def compose_matrix(self, m) -> "BinaryQuadraticForm":
        """The form (x, y) -> Q(p x + q y, r x + s y) for m = (p, q, r, s)."""
        p, q, r, s = m
        a, b, c = self.a, self.b, self.c
        return BinaryQuadraticForm(
            a * p * p + b * p * r + c * r * r,
            2 * a * p * q + b * (p * s + q * r) + 2 * c * r * s,
            a * q * q + b * q * s + c * s * s,
        )

    def is_reduced(self) -> bool:
        D = self.disc
        a, b, c = self.a, self.b, self.c
        if D < 0:
            if a <= 0:
                return False
            if not (abs(b) <= a <= c):
                return False
            return b >= 0 if (abs(b) == a or a == c) else True
        # 0 < (sqrt D - b)/(2|a|) < 1 < (sqrt D + b)/(2|a|), i.e. |sqrt D - 2|a|| < b < sqrt D
        A = abs(a)
        return 0 < b and b * b < D and (2 * A + b) ** 2 > D and (2 * A <= b or (2 * A - b) ** 2 < D)

    def roots(self) -> tuple[complex, complex]:
        """(-b + sqrt D)/(2a) and (-b - sqrt D)/(2a); complex for D < 0."""
        sq = cmath.sqrt(self.disc)
        return (-self.b + sq) / (2 * self.a), (-self.b - sq) / (2 * self.a)

    def __str__(self) -> str:
        return f"({self.a}, {self.b}, {self.c})"


BQF = BinaryQuadraticForm


def _check_disc(D: int) -> None:
    if D % 4 not in (0, 1):
        raise DomainError(f"{D} is not a discriminant (must be 0 or 1 mod 4)")
    if abs(D) > MAX_ABS_DISC:
        raise ResourceError(f"|D| above {MAX_ABS_DISC}")
    if D > 0 and isqrt(D) ** 2 == D:
        raise DomainError("square discriminants are not supported")
    if D == 0:
        raise DomainError("D = 0")


def principal_form(D: int) -> BQF:
    return BQF(1, D % 2, (D % 2 - D) // 4)


def _step_matrix(t: int):
    return (0, -1, 1, t)


def rho(form: BQF) -> tuple[BQF, tuple[int, int, int, int]]:
    """One indefinite reduction step; returns the new form and its matrix."""
    a, b, c = form.a, form.b, form.c
    D = form.disc
    C = abs(c)
    if c * c > D:
        bp = (-b) % (2 * C)
        if bp > C:
            bp -= 2 * C
    else:
        r = isqrt(D)
        bp = r - ((r + b) % (2 * C))
    t = (bp + b) // (2 * c)
    m = _step_matrix(t)
    new = form.compose_matrix(m)
    return new, m


def reduce_form(form: BQF) -> tuple[BQF, tuple[int, int, int, int]]:
    """Reduced form properly equivalent to ``form`` and the matrix M with form o M = result."""
    D = form.disc
    _check_disc(D)
    M = (1, 0, 0, 1)
    f = form
    if D < 0:
        if f.a < 0:
            raise DomainError("negative definite forms are not handled")
        for _ in range(100_000):
            a, b = f.a, f.b
            if not (-a < b <= a):
                k = (a - b) // (2 * a)
                m = (1, k, 0, 1)
                f, M = f.compose_matrix(m), matmul(M, m)
            if f.a > f.c:
                m = (0, -1, 1, 0)
                f, M = f.compose_matrix(m), matmul(M, m)
                continue
            break
        if f.a == f.c and f.b < 0:
            m = (0, -1, 1, 0)
            f, M = f.compose_matrix(m), matmul(M, m)
        return f, M
    for _ in range(100_000):
        if f.is_reduced():
            return f, M
        f, m = rho(f)
        M = matmul(M, m)
    raise ResourceError("indefinite reduction did not terminate")


def reduced_forms(D: int) -> list[BQF]:
    """All reduced primitive forms of discriminant D (positive definite for D < 0)."""
    _check_disc(D)
    out = []
    if D < 0:
        a = 1
        while 3 * a * a <= -D:
            for b in range(-a + 1, a + 1):
                if (b - D) % 2:
                    continue
                num = b * b - D
                if num % (4 * a):
                    continue
                c = num // (4 * a)
                f = BQF(a, b, c)
                if c >= a and f.is_reduced() and f.is_primitive():
                    out.append(f)
            a += 1
        return out
    r = isqrt(D)
    for b in range(1, r + 1):
        if (b - D) % 2:
            continue
        N = (D - b * b) // 4
        # |sqrt D - 2A| < b  bounds A to ((sqrt D - b)/2, (sqrt D + b)/2)
        for A in range(max(1, (r - b) // 2), (r + b) // 2 + 2):
            if N % A:
                continue
            for a in (A, -A):
                f = BQF(a, b, -N // a)
                if f.is_reduced() and f.is_primitive():
                    out.append(f)
    return out


def enumerate_reduced(D: int) -> list[BQF]:
    """One reduced representative per (narrow) class."""
    return ClassGroup.of(D).forms


# ---------------------------------------------------------------------------
# class groups

def _represent_positive(form: BQF, avoid: int, start_bound: int = 8):
    """A proper matrix M with form o M having first coefficient > 0 and coprime to ``avoid``."""
    bound = start_bound
    while bound < 10**5:
        best = None
        for x in range(0, bound + 1):
            for y in range(-bound, bound + 1):
                if gcd(x, y) != 1 or (x == 0 and y != 1):
                    continue
                v = form(x, y)
                if v > 0 and gcd(v, avoid) == 1 and (best is None or v < best[0]):
                    best = (v, x, y)
        if best is not None:
            v, x, y = best
            g, s, r = _egcd(x, y)  # s x + r y = 1
            # M = [[x, -r], [y, s]] has det x s + r y = 1
            return (x, -r, y, s)
        bound *= 2
    raise ResourceError("no suitable represented value found")


def _egcd(a: int, b: int):
    s0, s1, t0, t1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    if a < 0:
        a, s0, t0 = -a, -s0, -t0
    return a, s0, t0


def compose_forms(f1: BQF, f2: BQF) -> BQF:
    """Dirichlet composition of two primitive forms of the same discriminant.

    Both forms are first replaced by properly equivalent forms with positive,
    coprime leading coefficients a1, a2; the composite is then
    (a1 a2, B, (B^2 - D)/(4 a1 a2)) with B = b1 mod 2a1 and B = b2 mod 2a2.
    """
    D = f1.disc
    if f2.disc != D:
        raise DomainError("forms have different discriminants")
    if f1.a <= 0:
        f1 = f1.compose_matrix(_represent_positive(f1, 1))
    if gcd(f2.a, f1.a) != 1 or f2.a <= 0:
        f2 = f2.compose_matrix(_represent_positive(f2, f1.a))
    a1, b1, a2, b2 = f1.a, f1.b, f2.a, f2.b
    _, inv, _ = _egcd(a1, a2)
    k = (inv * ((b2 - b1) // 2)) % a2
    B = b1 + 2 * a1 * k
    A = a1 * a2
    B = B % (2 * A)
    num = B * B - D
    if num % (4 * A):
        raise ArithmeticError("composition produced a non-integral form")
    return BQF(A, B, num // (4 * A))


@dataclass
class ClassGroup:
    """Narrow class group of discriminant D with its multiplication table.

    ``forms[0]`` is the principal class.  For D > 0, ``cycles[i]`` lists the
    reduced forms in the cycle of class i.
    """

    D: int
    forms: list[BQF]
    cycles: list[list[BQF]]
    lookup: dict[BQF, int]
    _table: np.ndarray | None = None

    @classmethod
    def of(cls, D: int) -> "ClassGroup":
        return _class_group(D)

    @property
    def order(self) -> int:
        return len(self.forms)

    def index(self, form: BQF) -> int:
        f, _ = reduce_form(form)
        try:
            return self.lookup[f]
        except KeyError:
            raise DomainError(f"form {form} is not primitive of discriminant {self.D}") from None

    def compose(self, i: int, j: int) -> int:
        return self.index(compose_forms(self.forms[i], self.forms[j]))

    @property
    def table(self) -> np.ndarray:
        if self._table is None:
            h = self.order
            tab = np.zeros((h, h), dtype=np.int64)
            for i in range(h):
                for j in range(i, h):
                    tab[i, j] = tab[j, i] = self.compose(i, j)
            self._table = tab
        return self._table

    def inverse(self, i: int) -> int:
        return int(np.nonzero(self.table[i] == 0)[0][0])

    def squares(self) -> list[int]:
        return sorted({int(self.table[i, i]) for i in range(self.order)})

    def genera(self) -> list[list[int]]:
        """Cosets of the subgroup of squares, principal genus first."""
        sq = self.squares()
        seen: set[int] = set()
        out = []
        for i in range(self.order):
            if i in seen:
                continue
            coset = sorted({int(self.table[i, s]) for s in sq})
            seen.update(coset)
            out.append(coset)
        return out

    def select(self, genus) -> list[int]:
        """Class indices for 'all', 'principal' or an integer genus index."""
        if genus in (None, "all"):
            return list(range(self.order))
        if genus == "principal":
            return self.genera()[0]
        g = self.genera()
        if isinstance(genus, int) and 0 <= genus < len(g):
            return g[genus]
        raise DomainError(f"unknown genus selector {genus!r}")


@lru_cache(maxsize=256)
def _class_group(D: int) -> ClassGroup:
    _check_disc(D)
    red = reduced_forms(D)
    if D < 0:
        red.sort(key=lambda f: (f.a, abs(f.b), -f.b))
        lookup = {f: i for i, f in enumerate(red)}
        return ClassGroup(D, red, [[f] for f in red], lookup)
    remaining = set(red)
    cycles = []
    principal, _ = reduce_form(principal_form(D))
    order = [principal] + sorted(red, key=lambda f: (abs(f.a), f.b, -f.a))
    for start in order:
        if start not in remaining:
            continue
        cyc = [start]
        remaining.discard(start)
        f, _ = rho(start)
        while f != start:
            if f not in remaining:
                raise ArithmeticError("reduced cycles overlap")
            cyc.append(f)
            remaining.discard(f)
            f, _ = rho(f)
        cycles.append(cyc)
    lookup = {f: i for i, cyc in enumerate(cycles) for f in cyc}
    reps = [min(cyc, key=lambda f: (abs(f.a), f.b, -f.a)) if i else cyc[0] for i, cyc in enumerate(cycles)]
    return ClassGroup(D, reps, cycles, lookup)


def class_group(D: int) -> ClassGroup:
    return ClassGroup.of(D)


def class_number(D: int) -> int:
    """Narrow class number (equal to the class number for D < 0)."""
    return ClassGroup.of(D).order


# ---------------------------------------------------------------------------
# units

@dataclass(frozen=True)
class PellUnit:
    """Fundamental units of the order of discriminant D > 0.

    eps_plus = (x + y sqrt D)/2 is the smallest unit > 1 of norm +1
    (x^2 - D y^2 = 4); eps = (eps_x + eps_y sqrt D)/2 is the fundamental
    unit, of norm -1 exactly when ``norm_minus_one``.
    """

    D: int
    x: int
    y: int
    eps_x: int
    eps_y: int
    norm_minus_one: bool

    @property
    def log_eps_plus(self) -> float:
        return _log_unit(self.x, self.y, self.D)

    @property
    def log_eps(self) -> float:
        return _log_unit(self.eps_x, self.eps_y, self.D)

    @property
    def value(self) -> float:
        return math.exp(self.log_eps_plus)


def _log_unit(x: int, y: int, D: int) -> float:
    # (x + y sqrt D)/2 = 2 / (x - y sqrt D) avoids nothing here since both are positive;
    # use logs of big integers for size
    return math.log(x + y * math.sqrt(D)) - math.log(2) if x < 10**300 else math.log(x) + math.log1p(y * math.sqrt(D) / x) - math.log(2)


@lru_cache(maxsize=4096)
def pell_unit(D: int) -> PellUnit:
    """Units from the automorph obtained by running once around the principal cycle."""
    _check_disc(D)
    if D < 0:
        raise DomainError("pell_unit needs D > 0")
    start, _ = reduce_form(principal_form(D))
    f, M = start, (1, 0, 0, 1)
    while True:
        f, m = rho(f)
        M = matmul(M, m)
        if f == start:
            break
    t = M[0] + M[3]
    u = M[2] // start.a
    t, u = abs(t), abs(u)
    if t * t - D * u * u != 4:
        raise ArithmeticError("cycle automorph is not a unit")
    X2, Y2 = t - 2, (t + 2)
    neg = False
    ex, ey = t, u
    X = isqrt(X2)
    if X * X == X2 and Y2 % D == 0:
        Y = isqrt(Y2 // D)
        if Y * Y * D == Y2 and X * Y == u:
            neg = True
            ex, ey = X, Y
    return PellUnit(D, t, u, ex, ey, neg)


def regulator_plus(D: int) -> float:
    """log eps_plus; the length of each closed geodesic is twice this."""
    return pell_unit(D).log_eps_plus


# ---------------------------------------------------------------------------
# Heegner points and closed geodesics

@dataclass(frozen=True)
class HeegnerPoint:
    form: BQF
    point: Point
    class_index: int


def heegner_points(D: int, genus="all") -> list[HeegnerPoint]:
    """Roots (-b + i sqrt|D|)/(2a) of the class representatives, moved into F."""
    if D >= 0:
        raise DomainError("Heegner points need D < 0")
    cg = ClassGroup.of(D)
    out = []
    for i in cg.select(genus):
        f = cg.forms[i]
        z = complex(-f.b, math.sqrt(-D)) / (2 * f.a)
        p, word = reduce_point(z)
        a, b, c, d = word.matrix
        # p = g z, so p is a root of f o g^{-1}
        g_inv = (d, -b, -c, a)
        out.append(HeegnerPoint(f.compose_matrix(g_inv), p, i))
    return out


@dataclass
class ClosedGeodesic:
    """Closed geodesic of an indefinite form, parametrised by arclength.

    z(s) = m + rho (tanh s + i sech s) runs along the semicircle joining the
    roots; one period has length 2 log eps_plus.
    """

    form: BQF
    class_index: int
    length: float

    @property
    def endpoints(self) -> tuple[float, float]:
        r1, r2 = self.form.roots()
        return r1.real, r2.real

    def sample(self, n: int, offset: float = 0.5) -> np.ndarray:
        """n points equally spaced in arclength over one period (midpoint rule)."""
        f = self.form
        D = f.disc
        centre = -f.b / (2 * f.a)
        radius = math.sqrt(D) / (2 * abs(f.a))
        s = (np.arange(n) + offset) * self.length / n - 0.5 * self.length
        return centre + radius * (np.tanh(s) + 1j / np.cosh(s))


def closed_geodesics(D: int, genus="all") -> list[ClosedGeodesic]:
    if D <= 0:
        raise DomainError("closed geodesics need D > 0")
    cg = ClassGroup.of(D)
    length = 2 * regulator_plus(D)
    return [ClosedGeodesic(cg.forms[i], i, length) for i in cg.select(genus)]


# ---------------------------------------------------------------------------
# genus characters

def prime_discriminants(D: int) -> list[int]:
    """Factor a fundamental discriminant into prime discriminants."""
    if not specfun.is_fundamental_discriminant(D) or D == 1:
        raise DomainError(f"{D} is not a fundamental discriminant")
    n = abs(D)
    while n % 2 == 0:
        n //= 2
    out = []
    p = 3
    prod = 1
    while p * p <= n:
        if n % p == 0:
            n //= p
            ps = p if p % 4 == 1 else -p
            out.append(ps)
            prod *= ps
        p += 2
    if n > 1:
        ps = n if n % 4 == 1 else -n
        out.append(ps)
        prod *= ps
    two = D // prod
    if two != 1:
        out.append(two)
    return sorted(out)


@dataclass(frozen=True)
class GenusCharacter:
    """chi_{d1, d2} with d1 d2 = D; (1, D) is the trivial character."""

    D: int
    d1: int
    d2: int

    @property
    def trivial(self) -> bool:
        return self.d1 == 1 or self.d2 == 1

    def __call__(self, form: BQF) -> int:
        return chi_eval(self, form)


def genus_characters(D: int) -> list[GenusCharacter]:
    """All 2^(omega(D) - 1) genus characters, trivial first."""
    primes = prime_discriminants(D)
    seen = set()
    out = []
    for k in range(len(primes) + 1):
        for sub in combinations(primes, k):
            d1 = math.prod(sub)
            d2 = D // d1
            key = frozenset((d1, d2))
            if key in seen:
                continue
            seen.add(key)
            a, b = sorted((d1, d2), key=lambda d: (abs(d) != 1, abs(d), d))
            out.append(GenusCharacter(D, a, b))
    return out


def represented_values(form: BQF, coprime_to: int, count: int = 1, bound: int = 40) -> list[int]:
    """Values form(x, y), gcd(x, y) = 1, coprime to ``coprime_to``, in increasing |value|."""
    vals = set()
    for x in range(-bound, bound + 1):
        for y in range(0, bound + 1):
            if gcd(x, y) != 1 or (y == 0 and x != 1):
                continue
            v = form(x, y)
            if v != 0 and gcd(v, coprime_to) == 1:
                vals.add(v)
    if len(vals) < count:
        raise ResourceError("not enough represented values in the search box")
    return sorted(vals, key=lambda v: (abs(v), v))[:count]


def chi_eval(char: GenusCharacter, form: BQF) -> int:
    """chi(m) for any m represented by the form and coprime to D (value is independent of m)."""
    if form.disc != char.D:
        raise DomainError("form and character have different discriminants")
    m = represented_values(form, char.D, 1)[0]
    return specfun.kronecker(char.d1, m)


# ---------------------------------------------------------------------------
# minus continued fractions

def minus_continued_fraction(P: int, Q: int, D: int, max_steps: int = 100_000):
    """Ceiling expansion x = n1 - 1/(n2 - 1/(...)) of x = (P + sqrt D)/Q.

    Returns (preperiod, period) as lists of integers.  The state (P, Q) is
    kept with Q | D - P^2, so every step is exact.
    """
    if (D - P * P) % Q:
        raise DomainError("need Q | D - P^2")
    seen: dict[tuple[int, int], int] = {}
    digits = []
    for step in range(max_steps):
        key = (P, Q)
        if key in seen:
            i = seen[key]
            return digits[:i], digits[i:]
        seen[key] = step
        n = _ceil_exact(P, Q, D)
        digits.append(n)
        P = n * Q - P
        Q = (P * P - D) // Q
    raise ResourceError("minus continued fraction did not become periodic")


def _ceil_exact(P: int, Q: int, D: int) -> int:
    """ceil((P + sqrt D)/Q) for non-square D, exact.

    sqrt D lies strictly between r = isqrt(D) and r + 1, and no multiple of
    |Q| fits strictly between the consecutive integers P + r and P + r + 1.
    """
    r = isqrt(D)
    if Q > 0:
        return (P + r) // Q + 1
    return -((P + r) // -Q)


def _canonical_rotation(cycle: Sequence[int]) -> tuple[int, ...]:
    rots = [tuple(cycle[i:]) + tuple(cycle[:i]) for i in range(len(cycle))]
    return min(rots)


def _primitive_period(cycle: list[int]) -> list[int]:
    n = len(cycle)
    for d in range(1, n + 1):
        if n % d == 0 and cycle == cycle[:d] * (n // d):
            return cycle[:d]
    return cycle


@dataclass(frozen=True)
class MinusCFCycle:
    D: int
    class_index: int
    cycle: tuple[int, ...]
    seed: tuple[int, int]  # (P, Q) of the seed (P + sqrt D)/Q

    @property
    def volume(self) -> float:
        """Hyperbolic area of the associated region: pi times the cycle length."""
        return math.pi * len(self.cycle)


def admissible_seeds(form: BQF, count: int = 2) -> list[tuple[int, int]]:
    """Seeds w = (P + sqrt D)/Q in the class of ``form`` with 1 > w > w' > 0.

    Walks the minus continued fraction of the form's first root until it is
    purely periodic (x > 1 > x' > 0) and maps each x to x/(x + 1).
    """
    D = form.disc
    P, Q = -form.b, 2 * form.a
    pre, per = minus_continued_fraction(P, Q, D)
    for n in pre:
        P = n * Q - P
        Q = (P * P - D) // Q
    seeds = []
    for n in per:
        # x/(x+1) = (P + sqrt D)/(P + Q + sqrt D) = (P(P+Q) - D + Q sqrt D)/((P+Q)^2 - D)
        num_P = P * (P + Q) - D
        den = (P + Q) ** 2 - D
        P2, Q2 = num_P // Q, den // Q
        if (D - P2 * P2) % Q2:
            raise ArithmeticError("seed lost the divisibility invariant")
        seeds.append((P2, Q2))
        P = n * Q - P
        Q = (P * P - D) // Q
        if len(seeds) >= count:
            break
    return seeds


def seed_value(seed: tuple[int, int], D: int) -> tuple[float, float]:
    P, Q = seed
    return (P + math.sqrt(D)) / Q, (P - math.sqrt(D)) / Q


def minus_cf_cycle(D: int, class_index: int, seed: tuple[int, int] | None = None) -> MinusCFCycle:
    """Canonical (lexicographically least rotation) minus continued fraction cycle of a class."""
    cg = ClassGroup.of(D)
    if D <= 0:
        raise DomainError("minus continued fractions need D > 0")
    if seed is None:
        seed = admissible_seeds(cg.forms[class_index], 1)[0]
    P, Q = seed
    w, w_conj = seed_value(seed, D)
    if not (1 > w > w_conj > 0):
        raise DomainError("seed must satisfy 1 > w > w' > 0")
    _, per = minus_continued_fraction(P, Q, D)
    cyc = _primitive_period(list(per))
    return MinusCFCycle(D, class_index, _canonical_rotation(cyc), seed)


# ---------------------------------------------------------------------------
# class number formula

def units_in_order(D: int) -> int:
    return {-3: 6, -4: 4}.get(D, 2)


def class_number_from_L(D: int) -> float:
    """Analytic class number: sqrt D L(1) / log eps_plus, or w sqrt|D| L(1)/(2 pi)."""
    L1 = specfun.dirichlet_L_at_one(D)
    if D > 0:
        return math.sqrt(D) * L1 / regulator_plus(D)
    return units_in_order(D) * math.sqrt(-D) * L1 / (2 * math.pi)


@dataclass(frozen=True)
class ClassNumberRecord:
    D: int
    table: int
    formula: float

    @property
    def diff(self) -> float:
        return abs(self.table - self.formula)


def fundamental_discriminants(d_min: int, d_max: int) -> list[int]:
    return [d for d in range(d_min, d_max + 1) if d not in (0, 1) and specfun.is_fundamental_discriminant(d)]


def class_number_formula_check(d_min: int, d_max: int) -> list[ClassNumberRecord]:
    out = []
    for D in fundamental_discriminants(d_min, d_max):
        h = len(_class_reps_fast(D))
        out.append(ClassNumberRecord(D, h, class_number_from_L(D)))
    return out


def _class_reps_fast(D: int) -> list:
    """Class representatives without building the lookup cache (used by bulk checks)."""
    if D < 0:
        return reduced_forms(D)
    red = set(reduced_forms(D))
    count = []
    while red:
        start = red.pop()
        f, _ = rho(start)
        while f != start:
            red.discard(f)
            f, _ = rho(f)
        count.append(start)
    return count


# ---------------------------------------------------------------------------
# Weyl sums

def weyl_oracle(D: int, char: GenusCharacter, s: complex) -> complex:
    """Closed form of the twisted Weyl sum of E(., s) from L(s, chi_d1) L(s, chi_d2) / zeta(2s).

    D < 0:  (w_D / 2) (sqrt|D| / 2)^s L L / zeta(2s).
    D > 0:  (1 + sign d1) D^{s/2} Gamma(s/2)^2 / (2 Gamma(s)) L L / zeta(2s).
    """
    s = complex(s)
    LL = specfun.dirichlet_L(s, char.d1) * specfun.dirichlet_L(s, char.d2) / specfun.zeta(2 * s)
    if D < 0:
        return units_in_order(D) / 2 * cmath.exp(s * math.log(math.sqrt(-D) / 2)) * LL
    sign = 1 if char.d1 > 0 else -1
    gam = cmath.exp(2 * specfun.log_gamma(s / 2) - specfun.log_gamma(s) + 0.5 * s * math.log(D))
    return (1 + sign) * 0.5 * gam * LL


def weyl_sum(D: int, char: GenusCharacter, func: Callable[[np.ndarray], np.ndarray], *,
             tol: float = 1e-10, start: int = 64, max_points: int = 1 << 16) -> complex:
    """sum_A chi(A) f(z_A) for D < 0, or sum_A chi(A) int_{C_A} f ds for D > 0.

    Geodesic integrals use the trapezoid rule over one period in arclength,
    doubled until two levels agree.
    """
    cg = ClassGroup.of(D)
    weights = np.array([chi_eval(char, f) for f in cg.forms], dtype=float)
    if D < 0:
        pts = np.array([hp.point.z for hp in heegner_points(D)])
        return complex(np.dot(weights, func(pts)))
    total_prev = None
    n = start
    geos = closed_geodesics(D)
    while n <= max_points:
        total = 0j
        for wgt, geo in zip(weights, geos):
            pts = geo.sample(n)
            total += wgt * geo.length / n * np.sum(func(pts))
        if total_prev is not None and abs(total - total_prev) <= tol * max(1.0, abs(total)):
            return complex(total)
        total_prev = total
        n *= 2
    raise ToleranceNotMet("geodesic Weyl sum did not converge", best=total_prev)


def weyl_sum_eisenstein(D: int, char: GenusCharacter, s: complex, **kw) -> complex:
    from .autoforms import eisenstein_series

    E = eisenstein_series(complex(s))
    return weyl_sum(D, char, lambda z: E(z), **kw)
