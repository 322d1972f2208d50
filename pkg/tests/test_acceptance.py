"""Acceptance battery: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or ``python tests/test_acceptance.py``.  Criterion 13 is reported
but never fails the run.
"""

import itertools
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from modsurf import specfun  # noqa: E402
from modsurf.autoforms import (eisenstein_eval, eisenstein_series, l2_norm_truncated,  # noqa: E402
                               maass_selberg_lhs, maass_selberg_rhs)
from modsurf.equilab import (EisensteinTarget, HeegnerTarget, MonteCarloConfig, grid_variance,  # noqa: E402
                             kronecker_limit_residual, planck_check, var_estimator)
from modsurf.geometry import Ball, Point, ball_quadrature, ball_volume, reduce  # noqa: E402
from modsurf.kernels import asymptotic_h, h_R, h_R_derivative_at_i_half  # noqa: E402
from modsurf.quadinv import (ClassGroup, chi_eval, class_number_formula_check, genus_characters,  # noqa: E402
                             weyl_oracle, weyl_sum_eisenstein)
from oracles import eisenstein_lattice_sum  # noqa: E402

RESULTS: list[str] = []


def report(number, name, ok, detail, started, budget, gating=True):
    elapsed = time.perf_counter() - started
    within = elapsed <= budget
    verdict = "PASS" if ok and within else "FAIL"
    tag = "" if gating else " (non-gating)"
    line = f"{verdict} criterion {number:>2} {name}{tag}: {detail}; {elapsed:.1f}s of {budget:.0f}s"
    RESULTS.append(line)
    print(line, flush=True)
    if gating:
        assert ok, line
        assert within, line


def test_01_maass_selberg_off_diagonal():
    start = time.perf_counter()
    grid = [0.6 + 3j, 0.55 + 2j, 0.7 + 5j]
    worst = 0.0
    for s, r in itertools.product(grid, grid):
        for T in (1.5, 3.0):
            rhs = maass_selberg_rhs(s, r, T)
            worst = max(worst, abs(maass_selberg_lhs(s, r, T) - rhs) / abs(rhs))
    report(1, "Maass-Selberg quadrature vs closed form", worst <= 1e-3, f"max rel {worst:.2e} <= 1e-3", start, 300)


def test_02_truncated_l2_norm():
    start = time.perf_counter()
    worst = 0.0
    for t, T in itertools.product((1.0, 5.0, 10.0), (1.5, 3.0)):
        s = 0.5 + 1j * t
        quad = maass_selberg_lhs(s, s, T).real
        worst = max(worst, abs(quad - l2_norm_truncated(t, T)) / abs(quad))
    report(2, "truncated L2 norm", worst <= 1e-3, f"max rel {worst:.2e} <= 1e-3", start, 300)


def test_03_mean_value_identity():
    start = time.perf_counter()
    worst = 0.0
    for t, R, w in itertools.product((0.0, 4.2, 9.7), (0.05, 0.2, 0.5), (1j, 0.25 + 2j)):
        E = eisenstein_series(0.5 + 1j * t)
        avg = ball_quadrature(E, Ball(Point.of(w), R), tol=1e-11).value / ball_volume(R)
        fw = E(w)
        worst = max(worst, abs(avg - h_R(t, R) * fw) / (1 + abs(fw)))
    report(3, "mean-value identity", worst <= 1e-4, f"max |diff|/(1+|f(w)|) {worst:.2e} <= 1e-4", start, 120)


def test_04_h_asymptotics():
    start = time.perf_counter()
    R = 1e-3
    xs = np.geomspace(0.1, 30, 20)
    bessel = max(abs(h_R(x / R, R) - 2 * specfun.bessel_J(1, x) / x) for x in xs)
    third = max(abs(h_R(x / R, R) - asymptotic_h(R, x / R)[1]) for x in (100.0, 1000.0))
    at_zero = abs(h_R(0.0, R) - 1)
    ok = bessel <= 1e-3 and third <= 1e-4 and at_zero <= 1e-6
    report(4, "h_R small-radius asymptotics", ok,
           f"Bessel regime {bessel:.1e} <= 1e-3, oscillatory regime {third:.1e} <= 1e-4, "
           f"|h(0)-1| {at_zero:.1e} <= 1e-6", start, 60)


def test_05_derivative_asymptotic():
    start = time.perf_counter()
    ratios = [h_R_derivative_at_i_half(R) / (R * R / 8) for R in (1e-2, 1e-3)]
    ok = all(0.98 <= q <= 1.02 for q in ratios)
    report(5, "i h'(i/2) ~ R^2/8", ok, "ratios " + ", ".join(f"{q:.5f}" for q in ratios) + " in [0.98, 1.02]",
           start, 60)


def test_06_kronecker_limit():
    start = time.perf_counter()
    worst = 0.0
    for eps, w in itertools.product((1e-2, 1e-3), (1j, 0.3 + 1.2j)):
        worst = max(worst, abs(kronecker_limit_residual(w, eps)) / eps)
    report(6, "Kronecker limit formula", worst <= 10, f"max |residual|/eps {worst:.3f} <= 10", start, 60)


def test_07_class_number_formula():
    start = time.perf_counter()
    records = class_number_formula_check(-10_000, 10_000)
    worst = max(r.diff for r in records)
    report(7, "class number formula", worst <= 1e-6,
           f"{len(records)} fundamental discriminants, max |diff| {worst:.1e} <= 1e-6", start, 600)


def test_08_genus_orthogonality():
    start = time.perf_counter()
    failures = 0
    count = 0
    for D in range(-2000, 2001):
        if D in (0, 1) or not specfun.is_fundamental_discriminant(D):
            continue
        cg = ClassGroup.of(D)
        table = np.array([[chi_eval(c, f) for f in cg.forms] for c in genus_characters(D)], dtype=np.int64)
        gram = table @ table.T
        if not np.array_equal(gram, cg.order * np.eye(len(table), dtype=np.int64)):
            failures += 1
        count += 1
    report(8, "genus character orthogonality", failures == 0,
           f"{count} fundamental discriminants, {failures} with a non-diagonal Gram matrix", start, 120)


def test_09_fourier_vs_lattice_sum():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for s in (1.5, 2.0, 2.5):
        for _ in range(10):
            z = reduce(complex(rng.uniform(-0.5, 0.5), rng.uniform(0.9, 3.0)))[0].z
            ref = eisenstein_lattice_sum(z, s)
            worst = max(worst, abs(eisenstein_eval(z, s) - ref) / abs(ref))
    report(9, "Eisenstein Fourier expansion vs lattice sum", worst <= 1e-8, f"max rel {worst:.1e} <= 1e-8", start, 60)


def test_10_weyl_sums():
    start = time.perf_counter()
    worst = 0.0
    n = 0
    for D in (-4, -23, -84, 5, 12):
        for char in genus_characters(D):
            direct = weyl_sum_eisenstein(D, char, 2.0)
            oracle = weyl_oracle(D, char, 2.0)
            # real quadratic characters with d1 < 0 have oracle value 0, so the scale is floored at 1
            worst = max(worst, abs(direct - oracle) / max(abs(oracle), 1.0))
            n += 1
    report(10, "Weyl sums vs L-function oracle", worst <= 1e-6,
           f"{n} (D, character) pairs, max |diff|/max(|oracle|, 1) {worst:.1e} <= 1e-6",
           start, 120)


def test_11_planck_inequality():
    start = time.perf_counter()
    rng = np.random.Generator(np.random.Philox(key=0))
    violations = 0
    worst = -math.inf
    for _ in range(50):
        t = float(rng.uniform(0, 50))
        R = float(10 ** rng.uniform(-3, 0))
        w = complex(rng.uniform(-0.5, 0.5), rng.uniform(0.9, 3.0))
        rec = planck_check(t, R, w)
        worst = max(worst, rec.lhs - rec.rhs)
        violations += rec.violation > 1e-8
    report(11, "Planck Cauchy-Schwarz inequality", violations == 0,
           f"50 configurations, {violations} violations beyond 1e-8 (max lhs - rhs {worst:.2e})", start, 300)


def test_12_variance_oracle_agreement():
    start = time.perf_counter()
    lines = []
    ok = True
    for target, label in ((EisensteinTarget(20.0), "Eisenstein t=20"), (HeegnerTarget(-4, "all"), "Heegner D=-4")):
        mc = var_estimator(target, 0.3, MonteCarloConfig(samples=2000, seed=0))
        grid, grid_err = grid_variance(target, 0.3, 40)
        z = abs(mc.estimate - grid) / math.hypot(mc.std_error, grid_err)
        ok &= z <= 3
        lines.append(f"{label}: MC {mc.estimate:.4f}+-{mc.std_error:.4f} vs grid {grid:.4f}+-{grid_err:.4f}, z={z:.2f}")
    report(12, "Monte Carlo vs grid variance", ok, "; ".join(lines), start, 300)


def _soft_trend_discriminants(start, count=5):
    out = []
    n = -start
    while len(out) < count:
        n += 1
        if n % 4 == 3 and all(n % p for p in range(3, math.isqrt(n) + 1, 2)):
            out.append(-n)
    return out


def test_13_soft_trend():
    start = time.perf_counter()
    means = []
    for base in (-1000, -100_000):
        vals = [var_estimator(HeegnerTarget(D, "principal"), 0.3, MonteCarloConfig(samples=2000, seed=1)).estimate
                for D in _soft_trend_discriminants(base)]
        means.append(float(np.mean(vals)))
    report(13, "Heegner variance decreases with |D|", means[1] < means[0],
           f"mean variance {means[0]:.3f} near |D|=1e3, {means[1]:.3f} near |D|=1e5", start, 600, gating=False)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
