"""Command line front end.

Every subcommand writes ``<name>.csv``, ``<name>.json`` (the same rows plus
the manifest) and ``<name>.manifest.json`` into ``--out``.  Exit codes:
0 success, 2 invalid input, 3 tolerance not met or non-finite output,
4 resource limits.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DomainError, ModsurfError, ResourceError, ToleranceNotMet

EXIT_OK, EXIT_INVALID, EXIT_TOLERANCE, EXIT_RESOURCE = 0, 2, 3, 4

DEFAULTS = {
    "ms-check": {"s": "0.6+3j", "r": "0.55+2j", "T": 1.5, "tol": 1e-3},
    "shc": {"R": 0.3, "t_grid": "0:50:5"},
    "eisen": {"s": "0.5+9.7j", "z": ["1j"]},
    "ball-avg": {"t": 9.7, "R": 0.3, "w": "1j", "tol": 1e-4},
    "variance": {"t_g": 20.0, "R": 0.3, "samples": 2000, "seed": 0, "centering": "C",
                 "levels": "0.5,1,2,4"},
    "planck": {"configs": 50, "seed": 0, "tol": 1e-8},
    "classgroup": {"D": -23},
    "genus": {"D": -84},
    "heegner": {"D": -23, "genus": "all", "w": "1j", "R": 0.5},
    "geodesic": {"D": 5, "genus": "all", "w": "1j", "R": 0.5, "step": None},
    "minus-cf": {"D": 12},
    "weyl": {"D": -23, "s": "2"},
    "cnf-check": {"dmin": -1000, "dmax": 1000, "tol": 1e-6},
    "kronecker": {"w": "1j", "eps": "1e-2,1e-3"},
}


class CommandFailure(Exception):
    """Outputs were written but a tolerance check failed."""


# ---------------------------------------------------------------------------
# parsing helpers

def parse_complex(text: str) -> complex:
    try:
        return complex(str(text).replace(" ", "").replace("i", "j"))
    except ValueError:
        raise DomainError(f"cannot parse complex number {text!r}") from None


def parse_grid(text: str) -> np.ndarray:
    parts = str(text).split(":")
    if len(parts) != 3:
        raise DomainError("grid must be start:stop:step")
    a, b, h = (float(p) for p in parts)
    if h <= 0 or b < a:
        raise DomainError("grid needs step > 0 and stop >= start")
    n = int(math.floor((b - a) / h + 1e-9)) + 1
    return a + h * np.arange(n)


def parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise DomainError(f"cannot parse number list {text!r}") from None


def parse_genus(text):
    if text in ("all", "principal"):
        return text
    try:
        return int(text)
    except ValueError:
        raise DomainError(f"genus must be 'all', 'principal' or an integer, not {text!r}") from None


def read_config(path: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except FileNotFoundError:
        raise DomainError(f"config file {path} not found") from None
    except configparser.Error as exc:
        raise DomainError(f"bad config file: {exc}") from None
    return cp


def thread_count() -> int:
    raw = os.environ.get("MODSURF_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise DomainError(f"MODSURF_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise DomainError("MODSURF_THREADS must be positive")
    return n


def resolve(args: argparse.Namespace, command: str, cfg) -> dict:
    """Command line beats the config section, which beats [defaults] and built-ins."""
    out = dict(DEFAULTS[command])
    if cfg is not None:
        for section in ("defaults", command):
            if cfg.has_section(section):
                for k, v in cfg.items(section):
                    key = k.replace("-", "_")
                    if key not in out:
                        raise DomainError(f"unknown config key {k!r} in [{section}]")
                    default = DEFAULTS[command][key]
                    out[key] = type(default)(v) if isinstance(default, (int, float)) else v
    for k in out:
        v = getattr(args, k, None)
        if v is not None:
            out[k] = v
    return out


# ---------------------------------------------------------------------------
# output

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if not math.isfinite(float(v)):
            raise ToleranceNotMet("refusing to write a non-finite value")
        return format(float(v), ".17g")
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        if not math.isfinite(float(v)):
            raise ToleranceNotMet("refusing to write a non-finite value")
        return float(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


def write_outputs(out_dir: Path, name: str, rows: list[dict], manifest: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    columns = list(rows[0].keys()) if rows else []
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_fmt(r[c]) for c in columns])
    clean_rows = [{k: _jsonable(v) for k, v in r.items()} for r in rows]
    (out_dir / f"{name}.csv").write_text(buf.getvalue())
    (out_dir / f"{name}.json").write_text(json.dumps({"manifest": manifest, "rows": clean_rows}, indent=1) + "\n")
    (out_dir / f"{name}.manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")


def build_manifest(command: str, params: dict, status: str, elapsed: float, summary: dict,
                   out_dir: Path) -> dict:
    import mpmath
    import scipy

    return {
        "command": command,
        "parameters": {k: (v if v is None or isinstance(v, (int, float, str, list)) else str(v)) for k, v in params.items()},
        "seed": params.get("seed"),
        "tolerance": params.get("tol"),
        "outputs": [str(out_dir / f"{command}.{ext}") for ext in ("csv", "json", "manifest.json")],
        "status": status,
        "summary": {k: _jsonable(v) for k, v in summary.items()},
        "versions": {"modsurf": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "mpmath": mpmath.__version__, "python": platform.python_version()},
        "threads": thread_count(),
        "wall_seconds": round(elapsed, 3),
    }


# ---------------------------------------------------------------------------
# subcommands; each returns (rows, summary, ok)

def cmd_ms_check(p):
    from .autoforms import maass_selberg_lhs, maass_selberg_rhs

    s, r, T = parse_complex(p["s"]), parse_complex(p["r"]), float(p["T"])
    lhs = maass_selberg_lhs(s, r, T)
    rhs = maass_selberg_rhs(s, r, T)
    rel = abs(lhs - rhs) / abs(rhs)
    row = {"s_re": s.real, "s_im": s.imag, "r_re": r.real, "r_im": r.imag, "T": T,
           "lhs_re": lhs.real, "lhs_im": lhs.imag, "rhs_re": rhs.real, "rhs_im": rhs.imag, "rel_err": rel}
    return [row], {"rel_err": rel}, rel <= float(p["tol"])


def cmd_shc(p):
    from .kernels import asymptotic_h, h_R

    R = float(p["R"])
    ts = parse_grid(p["t_grid"])
    hs = np.atleast_1d(h_R(ts, R))
    rows = []
    for t, h in zip(ts, hs):
        regime, approx = asymptotic_h(R, t)
        rows.append({"t": float(t), "h_R": float(h), "regime": regime, "regime_value": approx,
                     "diff": abs(float(h) - approx)})
    return rows, {"points": len(rows)}, True


def cmd_eisen(p):
    from .autoforms import eisenstein_eval

    s = parse_complex(p["s"])
    zs = p["z"] if isinstance(p["z"], list) else str(p["z"]).split(",")
    rows = []
    for zt in zs:
        z = parse_complex(zt)
        if z.imag <= 0:
            raise DomainError("z must lie in the upper half-plane")
        E = eisenstein_eval(z, s)
        rows.append({"x": z.real, "y": z.imag, "s_re": s.real, "s_im": s.imag, "E_re": E.real, "E_im": E.imag})
    return rows, {"points": len(rows)}, True


def cmd_ball_avg(p):
    from .autoforms import eisenstein_series
    from .equilab import ball_average
    from .kernels import h_R

    t, R, w = float(p["t"]), float(p["R"]), parse_complex(p["w"])
    E = eisenstein_series(0.5 + 1j * t)
    avg = ball_average(E, w, R)
    pred = complex(h_R(t, R)) * E(w)
    err = abs(avg - pred) / (1 + abs(pred))
    row = {"t": t, "R": R, "w_re": w.real, "w_im": w.imag, "avg_re": avg.real, "avg_im": avg.imag,
           "predicted_re": pred.real, "predicted_im": pred.imag, "rel_err": err}
    return [row], {"rel_err": err}, err <= float(p["tol"])


def cmd_variance(p):
    from .equilab import EisensteinTarget, MonteCarloConfig, var_estimator

    target = EisensteinTarget(float(p["t_g"]), str(p["centering"]))
    rep = var_estimator(target, float(p["R"]), MonteCarloConfig(int(p["samples"]), int(p["seed"])))
    rows = [{"quantity": "variance", "level": 0.0, "value": rep.estimate, "bound": rep.std_error}]
    for c, frac, bound in rep.exceedance(parse_floats(p["levels"])):
        rows.append({"quantity": "exceedance", "level": c, "value": frac, "bound": bound})
    return rows, {"estimate": rep.estimate, "std_error": rep.std_error, "samples": rep.samples,
                  "partial": rep.partial}, True


def cmd_planck(p):
    from .equilab import planck_check

    rng = np.random.Generator(np.random.Philox(key=int(p["seed"])))
    rows = []
    worst = 0.0
    for _ in range(int(p["configs"])):
        t = float(rng.uniform(0, 50))
        R = float(10 ** rng.uniform(-3, 0))
        w = complex(rng.uniform(-0.5, 0.5), rng.uniform(0.9, 3.0))
        rec = planck_check(t, R, w)
        worst = max(worst, rec.violation)
        rows.append({"t": t, "R": R, "w_re": w.real, "w_im": w.imag, "lhs": rec.lhs, "rhs": rec.rhs,
                     "violation": rec.violation})
    return rows, {"worst_violation": worst}, worst <= float(p["tol"])


def cmd_classgroup(p):
    from .quadinv import ClassGroup

    cg = ClassGroup.of(int(p["D"]))
    genus_of = {i: g for g, members in enumerate(cg.genera()) for i in members}
    rows = []
    for i, f in enumerate(cg.forms):
        rows.append({"class": i, "a": f.a, "b": f.b, "c": f.c, "inverse": cg.inverse(i),
                     "square": int(cg.table[i, i]), "genus": genus_of[i]})
    return rows, {"class_number": cg.order, "genera": len(cg.genera())}, True


def cmd_genus(p):
    from .quadinv import ClassGroup, chi_eval, genus_characters

    D = int(p["D"])
    cg = ClassGroup.of(D)
    rows = []
    for ch in genus_characters(D):
        for i, f in enumerate(cg.forms):
            rows.append({"d1": ch.d1, "d2": ch.d2, "class": i, "a": f.a, "b": f.b, "c": f.c,
                         "value": chi_eval(ch, f)})
    return rows, {"characters": len(genus_characters(D))}, True


def cmd_heegner(p):
    from .equilab import HeegnerTarget
    from .quadinv import heegner_points

    D, genus, R = int(p["D"]), parse_genus(p["genus"]), float(p["R"])
    w = parse_complex(p["w"])
    target = HeegnerTarget(D, genus)
    count = int(target.counts(np.array([w]), R)[0])
    rows = []
    for hp in heegner_points(D, genus):
        rows.append({"class": hp.class_index, "a": hp.form.a, "b": hp.form.b, "c": hp.form.c,
                     "x": hp.point.x, "y": hp.point.y})
    return rows, {"count_in_ball": count, "points": len(rows)}, True


def cmd_geodesic(p):
    from .equilab import geodesic_ball_length
    from .geometry import Ball, Point
    from .quadinv import closed_geodesics

    D, genus, R = int(p["D"]), parse_genus(p["genus"]), float(p["R"])
    w = parse_complex(p["w"])
    rows = []
    for g in closed_geodesics(D, genus):
        e1, e2 = g.endpoints
        rows.append({"class": g.class_index, "a": g.form.a, "b": g.form.b, "c": g.form.c,
                     "endpoint_plus": e1, "endpoint_minus": e2, "length": g.length})
    step = None if p["step"] is None else float(p["step"])
    total = geodesic_ball_length(D, genus, Ball(Point.of(w), R), step)
    return rows, {"length_in_ball": total}, True


def cmd_minus_cf(p):
    from .quadinv import ClassGroup, minus_cf_cycle

    D = int(p["D"])
    rows = []
    for i in range(ClassGroup.of(D).order):
        cyc = minus_cf_cycle(D, i)
        rows.append({"class": i, "cycle": " ".join(map(str, cyc.cycle)), "length": len(cyc.cycle),
                     "volume": cyc.volume})
    return rows, {"classes": len(rows)}, True


def cmd_weyl(p):
    from .quadinv import genus_characters, weyl_oracle, weyl_sum, weyl_sum_eisenstein

    D = int(p["D"])
    s = parse_complex(p["s"])
    rows = []
    for ch in genus_characters(D):
        direct = weyl_sum_eisenstein(D, ch, s)
        oracle = weyl_oracle(D, ch, s)
        err = abs(direct - oracle) / max(abs(oracle), 1.0)
        row = {"d1": ch.d1, "d2": ch.d2, "direct_re": direct.real, "direct_im": direct.imag,
               "oracle_re": oracle.real, "oracle_im": oracle.imag, "rel_err": err}
        if p.get("maass_file"):
            from .autoforms import load_maass
            f = load_maass(p["maass_file"])
            m = weyl_sum(D, ch, lambda z: f(z))
            row.update({"maass_re": m.real, "maass_im": m.imag})
        rows.append(row)
    return rows, {"characters": len(rows)}, True


def cmd_cnf_check(p):
    from .quadinv import class_number_formula_check

    lo, hi = int(p["dmin"]), int(p["dmax"])
    if hi < lo:
        raise DomainError("dmax must be at least dmin")
    recs = class_number_formula_check(lo, hi)
    rows = [{"D": r.D, "h_table": r.table, "h_formula": r.formula, "abs_diff": r.diff} for r in recs]
    worst = max((r.diff for r in recs), default=0.0)
    return rows, {"discriminants": len(rows), "worst_diff": worst}, worst <= float(p["tol"])


def cmd_kronecker(p):
    from .equilab import kronecker_limit_residual

    w = parse_complex(p["w"])
    rows = []
    for eps in parse_floats(p["eps"]):
        if eps <= 0:
            raise DomainError("eps must be positive")
        res = kronecker_limit_residual(w, eps)
        rows.append({"eps": eps, "residual": res, "residual_over_eps": res / eps})
    ok = all(abs(r["residual"]) <= 10 * r["eps"] for r in rows)
    return rows, {"points": len(rows)}, ok


COMMANDS = {
    "ms-check": cmd_ms_check, "shc": cmd_shc, "eisen": cmd_eisen, "ball-avg": cmd_ball_avg,
    "variance": cmd_variance, "planck": cmd_planck, "classgroup": cmd_classgroup, "genus": cmd_genus,
    "heegner": cmd_heegner, "geodesic": cmd_geodesic, "minus-cf": cmd_minus_cf, "weyl": cmd_weyl,
    "cnf-check": cmd_cnf_check, "kronecker": cmd_kronecker,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modsurf", description="Equidistribution experiments on the modular surface.")
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="modsurf-out", help="output directory")
    common.add_argument("--config", help="key = value file with [defaults] and per-command sections")
    common.add_argument("--maass-file", dest="maass_file", help="Maass form coefficient file")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, *opts):
        sp = sub.add_parser(name, parents=[common])
        for flag, kw in opts:
            sp.add_argument(flag, default=None, **kw)
        return sp

    add("ms-check", ("--s", {}), ("--r", {}), ("--T", {"type": float}), ("--tol", {"type": float}))
    add("shc", ("--R", {"type": float}), ("--t-grid", {"dest": "t_grid"}))
    add("eisen", ("--s", {}), ("--z", {"action": "append"}))
    add("ball-avg", ("--t", {"type": float}), ("--R", {"type": float}), ("--w", {}), ("--tol", {"type": float}))
    add("variance", ("--t-g", {"dest": "t_g", "type": float}), ("--R", {"type": float}),
        ("--samples", {"type": int}), ("--seed", {"type": int}), ("--centering", {"choices": ["C", "D"]}),
        ("--levels", {}))
    add("planck", ("--configs", {"type": int}), ("--seed", {"type": int}), ("--tol", {"type": float}))
    add("classgroup", ("--D", {"type": int}))
    add("genus", ("--D", {"type": int}))
    add("heegner", ("--D", {"type": int}), ("--genus", {}), ("--w", {}), ("--R", {"type": float}))
    add("geodesic", ("--D", {"type": int}), ("--genus", {}), ("--w", {}), ("--R", {"type": float}),
        ("--step", {"type": float}))
    add("minus-cf", ("--D", {"type": int}))
    add("weyl", ("--D", {"type": int}), ("--s", {}))
    add("cnf-check", ("--dmin", {"type": int}), ("--dmax", {"type": int}), ("--tol", {"type": float}))
    add("kronecker", ("--w", {}), ("--eps", {}))
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on bad flags, before any output
    command = args.command
    started = time.perf_counter()
    try:
        thread_count()
        cfg = read_config(args.config) if args.config else None
        params = resolve(args, command, cfg)
        params["maass_file"] = args.maass_file
        if args.maass_file and not Path(args.maass_file).exists():
            raise DomainError(f"Maass file {args.maass_file} not found")
        rows, summary, ok = COMMANDS[command](params)
        status = "ok" if ok else "tolerance-not-met"
        manifest = build_manifest(command, params, status, time.perf_counter() - started, summary, Path(args.out))
        write_outputs(Path(args.out), command, rows, manifest)
    except ToleranceNotMet as exc:
        print(f"modsurf {command}: tolerance not met: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except ResourceError as exc:
        print(f"modsurf {command}: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (DomainError, ValueError) as exc:
        print(f"modsurf {command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except MemoryError:
        print(f"modsurf {command}: out of memory", file=sys.stderr)
        return EXIT_RESOURCE
    if not ok:
        print(f"modsurf {command}: tolerance not met (outputs written, status flagged)", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
