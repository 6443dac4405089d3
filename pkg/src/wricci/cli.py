"""Command-line front end.

Every subcommand builds a manifold from flags (or a ``key = value`` config
file, which flags override), runs one computation per ``(K, N)`` cell and
writes a JSON or CSV report.  Errors go to stderr as a single line starting
with ``error[config]:`` (exit 2) or ``error[numeric]:`` (exit 3).
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import __version__
from .analysis import (
    bochner_report,
    concentration_profile,
    lsi_sweep,
    sigma_composed_bound,
    tilt_grid,
)
from .expr import DomainError, Expression, parse
from .geometry import Chart, GeometryError, ScalarField
from .spectral import SpectralError, first_nonzero_eigenvalue
from .verify import SUITES, format_table, run_suite
from .weighted import (
    NEG_INF,
    WeightedManifold,
    check_dimension,
    curvature_report,
    custom_line,
    model_space,
    parse_dimension,
    ric_n_direction,
    sigma_curvature_check,
    warped_product,
)

EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# ---------------------------------------------------------------------------
# value converters (shared by flags and config files)

def _float(text) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"not a number: {text!r}") from None


def _float_list(text) -> list[float]:
    return [_float(t) for t in str(text).split(",") if t.strip()]


def _dim_list(text) -> list[float]:
    try:
        return [parse_dimension(t.strip()) for t in str(text).split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _axis(text) -> np.ndarray:
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid axis must look like a:b:n, got {text!r}")
    a, b = _float(parts[0]), _float(parts[1])
    try:
        n = int(parts[2])
    except ValueError:
        raise ConfigError(f"grid count must be an integer, got {parts[2]!r}") from None
    if n < 1 or (n > 1 and not a < b):
        raise ConfigError(f"bad grid axis {text!r}")
    return np.linspace(a, b, n)


def _axes(text) -> list[np.ndarray]:
    return [_axis(t) for t in str(text).split(",") if t.strip()]


def _int(text) -> int:
    try:
        return int(text)
    except (TypeError, ValueError):
        raise ConfigError(f"not an integer: {text!r}") from None


def _metric(value) -> list[str]:
    if isinstance(value, str):
        value = [t for t in value.split(";") if t.strip()]
    return [str(v).strip() for v in value]


CONVERTERS: dict[str, Callable] = {
    "model": str, "weight": str, "metric": _metric, "K": _float_list, "Neff": _dim_list,
    "L": _float, "nodes": _int, "grid": _axis, "grid_2d": _axes, "r": _float_list,
    "format": str, "out": str, "jobs": _int, "seed": _int, "dim": _int, "slope": _float,
    "radius": _float, "u": str, "beta_max": _float, "betas": _int, "samples": _int,
    "base": str, "base_K": _float, "base_Neff": parse_dimension, "extrapolate": str,
}


def read_config(path: str) -> dict[str, Any]:
    """Parse a ``key = value`` file; ``#`` starts a comment."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    out: dict[str, Any] = {}
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":" if ":" in line.split()[0] else None
        if sep is None:
            raise ConfigError(f"{path}:{num}: expected key = value")
        key, value = (s.strip() for s in line.split(sep, 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in CONVERTERS:
            raise ConfigError(f"{path}:{num}: unknown key {key!r}")
        out[key] = CONVERTERS[key](value)
    return out


def resolve(args: argparse.Namespace) -> dict[str, Any]:
    """Merge config file and flags; flags win."""
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    for key, value in vars(args).items():
        if key in ("config", "func", "command") or value is None:
            continue
        cfg[key] = value
    return cfg


# ---------------------------------------------------------------------------
# manifold construction

def _cells(cfg) -> list[tuple[Optional[float], Optional[float]]]:
    Ks = cfg.get("K") or [None]
    Ns = cfg.get("Neff") or [None]
    return list(itertools.product(Ks, Ns))


def build_manifold(cfg: dict, K: Optional[float], N: Optional[float]) -> WeightedManifold:
    model, weight, metric = cfg.get("model"), cfg.get("weight"), cfg.get("metric")
    if model is not None and (weight is not None or metric is not None):
        raise ConfigError("give either --model or --weight/--metric, not both")
    if model is None and weight is None and metric is None:
        raise ConfigError("no manifold: give --model, --weight or --metric")
    kn = {k: v for k, v in (("K", K), ("N", N)) if v is not None}
    if model is not None:
        extra = {k: cfg[k] for k in ("dim", "slope", "radius") if k in cfg}
        return model_space(model, **kn, **extra)
    if metric is None:
        return custom_line(weight, **kn)
    return custom_chart(metric, weight or "0", kn)


def custom_chart(metric: Sequence[str], weight: str, params: dict) -> WeightedManifold:
    """Chart from metric entries: ``g`` in 1-D, ``g11 g12 g22`` in 2-D."""
    if len(metric) == 1:
        coords = ("x",)
        rows = [[metric[0]]]
    elif len(metric) == 3:
        coords = ("x", "y")
        rows = [[metric[0], metric[1]], [metric[1], metric[2]]]
    else:
        raise ConfigError("--metric takes 1 entry (1-D) or 3 entries g11 g12 g22 (2-D)")
    exprs = tuple(tuple(parse(t, coords, params) for t in row) for row in rows)
    chart = Chart(coords, ((-math.inf, math.inf),) * len(coords), metric=exprs, name="custom")
    psi = ScalarField(parse(weight, coords, params))
    return WeightedManifold(chart, psi, "custom", {k: float(v) for k, v in params.items()})


def _default_axes(wm: WeightedManifold) -> list[np.ndarray]:
    if wm.dim == 1:
        return [np.linspace(-5, 5, 101)]
    if wm.label == "hyperbolic":
        return [np.linspace(-2, 2, 5), np.linspace(0.5, 4, 8)]
    if wm.label == "sphere":
        return [np.linspace(0.3, 2.8, 6), np.linspace(-3, 3, 7)]
    return [np.linspace(-2, 2, 5)] * wm.dim


def grid_points(cfg: dict, wm: WeightedManifold) -> list[list[float]]:
    if "grid_2d" in cfg:
        axes = cfg["grid_2d"]
    elif "grid" in cfg:
        axes = [cfg["grid"]] * wm.dim
    else:
        axes = _default_axes(wm)
    if len(axes) != wm.dim:
        raise ConfigError(f"grid has {len(axes)} axes but the manifold has dimension {wm.dim}")
    return [list(map(float, p)) for p in itertools.product(*axes)]


def _eval_N(wm: WeightedManifold, N: Optional[float]) -> float:
    if N is None:
        N = wm.params.get("N")
    if N is None:
        raise ConfigError("--Neff is required for this manifold")
    try:
        return check_dimension(N, wm.dim)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _pool_map(func, items, jobs: Optional[int]):
    if len(items) <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs or os.cpu_count() or 1) as ex:
        return list(ex.map(func, items))


# ---------------------------------------------------------------------------
# subcommands; each returns (results, csv_header, csv_rows, exit_code)

def _num(x):
    if x is NEG_INF:
        return -math.inf
    return x


def cmd_curvature(cfg):
    def cell(kn):
        K, N = kn
        wm = build_manifold(cfg, K, N)
        Nv = _eval_N(wm, N)
        rep = curvature_report(wm, grid_points(cfg, wm), Nv)
        return {
            "K": K, "N": Nv, "model": wm.label, "coordinates": list(wm.chart.coordinates),
            "points": [list(p) for p in rep.points], "minima": [_num(m) for m in rep.minima],
            "directions": [list(map(float, d)) for d in rep.directions],
            "forms": [None if f is None else f.tolist() for f in rep.forms],
            "summary_min": _num(rep.summary_min), "summary_max": _num(rep.summary_max),
        }

    cells = _pool_map(cell, _cells(cfg), cfg.get("jobs"))
    header = ["K", "N", "point", "ric_n_min", "direction"]
    rows = [[c["K"], c["N"], " ".join(_f(x) for x in p), m, " ".join(_f(x) for x in d)]
            for c in cells for p, m, d in zip(c["points"], c["minima"], c["directions"])]
    return {"cells": cells}, header, rows, 0


def cmd_spectrum(cfg):
    samples = cfg.get("samples", 101)
    extrapolate = str(cfg.get("extrapolate", "yes")).lower() not in ("no", "false", "0")

    def cell(kn):
        K, N = kn
        wm = build_manifold(cfg, K, N)
        if wm.dim != 1:
            raise ConfigError("spectrum needs a 1-dimensional manifold")
        r = first_nonzero_eigenvalue(wm, cfg.get("L"), cfg.get("nodes", 4001), extrapolate)
        idx = np.unique(np.linspace(0, len(r.x) - 1, max(samples, 2)).round().astype(int))
        res = r.result
        return {
            "K": K, "N": N, "model": wm.label,
            "lambda1": r.lambda1, "extrapolated_lambda1": res.extrapolated_lambda1,
            "fine_lambda1": res.fine_lambda1, "bound": r.bound, "margin": r.margin,
            "flags": list(r.flags),
            "eigenvalues": [float(v) for v in res.eigenvalues],
            "residuals": [float(v) for v in res.residuals],
            "grid": {"L": res.grid.half_width, "nodes": res.grid.nodes, "h": res.grid.h},
            "eigenfunction": {"x": [float(v) for v in r.x[idx]],
                              "value": [float(v) for v in r.eigenfunction[idx]]},
        }

    cells = _pool_map(cell, _cells(cfg), cfg.get("jobs"))
    header = ["K", "N", "index", "eigenvalue", "residual", "bound", "margin", "flags"]
    rows = [[c["K"], c["N"], i, ev, rs, c["bound"], c["margin"], "; ".join(c["flags"])]
            for c in cells for i, (ev, rs) in enumerate(zip(c["eigenvalues"], c["residuals"]))]
    return {"cells": cells}, header, rows, 0


def cmd_bochner(cfg):
    def cell(kn):
        K, N = kn
        wm = build_manifold(cfg, K, N)
        Nv = _eval_N(wm, N)
        if "u" in cfg:
            u = parse(cfg["u"], wm.chart.coordinates)
        elif "eigenfunction" in wm.extras:
            u = wm.extras["eigenfunction"]
        else:
            raise ConfigError("--u is required for this manifold")
        pts = []
        for p in grid_points(cfg, wm):
            r = bochner_report(wm, u, p, Nv)
            pts.append({"point": p, "lhs": r.lhs, "rhs_N": _num(r.rhs_N), "gap_N": _num(r.gap_N),
                        "gap_inf": r.gap_inf, "hs_slack": r.hs_slack, "quad_slack": _num(r.quad_slack),
                        "residual": r.residual})
        return {"K": K, "N": Nv, "model": wm.label, "u": u.text, "points": pts,
                "min_gap": min(_num(p["gap_N"]) for p in pts),
                "max_abs_residual": max(abs(p["residual"]) for p in pts)}

    cells = _pool_map(cell, _cells(cfg), cfg.get("jobs"))
    header = ["K", "N", "point", "lhs", "rhs_N", "gap_N", "hs_slack", "quad_slack", "residual"]
    rows = [[c["K"], c["N"], " ".join(_f(x) for x in p["point"]), p["lhs"], p["rhs_N"], p["gap_N"],
             p["hs_slack"], p["quad_slack"], p["residual"]] for c in cells for p in c["points"]]
    return {"cells": cells}, header, rows, 0


def cmd_concentration(cfg):
    rs = cfg.get("r", [0.0, 0.5, 1.0, 2.0, 4.0, 8.0])

    def cell(kn):
        K, N = kn
        wm = build_manifold(cfg, K, N)
        if wm.dim != 1:
            raise ConfigError("concentration needs a 1-dimensional manifold")
        prof = concentration_profile(wm, rs, cfg.get("L"))
        return {"K": K, "N": N, "model": wm.label,
                "profile": [{"r": p.r, "alpha": p.half_line_alpha, "bound": p.bound,
                             "exceeds": p.exceeds} for p in prof]}

    cells = _pool_map(cell, _cells(cfg), cfg.get("jobs"))
    header = ["K", "N", "r", "alpha", "bound", "exceeds"]
    rows = [[c["K"], c["N"], p["r"], p["alpha"], p["bound"], p["exceeds"]]
            for c in cells for p in c["profile"]]
    return {"cells": cells}, header, rows, 0


def cmd_lsi(cfg):
    def cell(kn):
        K, N = kn
        wm = build_manifold(cfg, K, N)
        if wm.dim != 1:
            raise ConfigError("lsi needs a 1-dimensional manifold")
        Kv = K if K is not None else wm.params.get("K")
        Nv = N if N is not None else wm.params.get("N")
        if Kv is None or Nv is None:
            raise ConfigError("lsi needs --K and --Neff")
        bmax = cfg.get("beta_max", wm.extras.get("decay_rate", 2.0))
        sweep = lsi_sweep(wm, Kv, Nv, tilt_grid(bmax, cfg.get("betas", 64)), cfg.get("L"))
        worst = max(d for _, d in sweep)
        return {"K": Kv, "N": Nv, "model": wm.label, "beta_max": bmax,
                "constant": 1 / (2 * Kv) if math.isinf(Nv) else (Nv - 1) / (2 * Kv * Nv),
                "sweep": [{"beta": b, "deficit": d} for b, d in sweep],
                "max_deficit": worst, "violated": worst > 1e-6}

    cells = _pool_map(cell, _cells(cfg), cfg.get("jobs"))
    header = ["K", "N", "beta", "deficit"]
    rows = [[c["K"], c["N"], s["beta"], s["deficit"]] for c in cells for s in c["sweep"]]
    return {"cells": cells}, header, rows, 0


def cmd_warped(cfg):
    base_tag = cfg.get("base", "circle")
    base_kw = {k: cfg[k] for k in ("radius",) if k in cfg}
    if "base_K" in cfg:
        base_kw["K"] = cfg["base_K"]
    if "base_Neff" in cfg:
        base_kw["N"] = cfg["base_Neff"]
    try:
        base = model_space(base_tag, **base_kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    def cell(kn):
        K, N = kn
        if K is None or N is None:
            raise ConfigError("warped-product needs --K and --Neff")
        w = warped_product(base, K, N)
        pts = grid_points(cfg, w) if ("grid_2d" in cfg or "grid" in cfg) else [
            [t, x] for t in np.linspace(-3, 3, 7) for x in np.linspace(-2, 2, 5)]
        a = w.extras["warp_rate"]
        radial = [float(ric_n_direction(w, p, [1.0, 0.0], N)) for p in pts]
        ratio = [w.density(p) / w.density([0.0, p[1]]) for p in pts]
        expected = [math.cosh(a * p[0]) ** (N - 1) for p in pts]
        sig = sigma_curvature_check(w, [[p[1]] for p in pts])
        try:
            _, composed = sigma_composed_bound(K, N)
        except ArithmeticError:
            composed = None
        return {"K": K, "N": N, "base": base.label, "warp_rate": a,
                "points": pts, "radial_ric_n": radial, "density_ratio": ratio,
                "density_ratio_expected": expected,
                "sigma_threshold": sig.threshold, "sigma_values": [_num(v) for v in sig.values],
                "sigma_satisfied": sig.satisfied, "composed_bound": composed}

    cells = _pool_map(cell, _cells(cfg), cfg.get("jobs"))
    header = ["K", "N", "t", "s", "radial_ric_n", "density_ratio", "expected_ratio", "sigma_value"]
    rows = [[c["K"], c["N"], p[0], p[1], r, d, e, s]
            for c in cells
            for p, r, d, e, s in zip(c["points"], c["radial_ric_n"], c["density_ratio"],
                                     c["density_ratio_expected"], c["sigma_values"])]
    return {"cells": cells}, header, rows, 0


def cmd_verify(cfg):
    checks = run_suite(cfg.get("suite", "all"), cfg.get("seed", 0), cfg.get("jobs"))
    if cfg.get("out") is None:
        print(format_table(checks))
    ok = all(c.passed for c in checks)
    results = {"passed": ok, "checks": [
        {"name": c.name, "expected": c.expected, "got": c.got, "tolerance": c.tolerance,
         "status": "PASS" if c.passed else "FAIL"} for c in checks]}
    header = ["check", "expected", "got", "tolerance", "status"]
    rows = [[r["name"], r["expected"], r["got"], r["tolerance"], r["status"]] for r in results["checks"]]
    return results, header, rows, 0 if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# output

def _f(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def to_json(obj, indent: int = 0) -> str:
    """Deterministic JSON: insertion-ordered keys, 17 significant digits.

    Non-finite floats become the strings ``"inf"``, ``"-inf"`` and ``"nan"``.
    """
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is NEG_INF:
        return '"-inf"'
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return _f(x) if math.isfinite(x) else f'"{_f(x)}"'
    if isinstance(obj, str):
        import json
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{to_json(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) or v is None for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_f(float(v)) if isinstance(v, (float, np.floating)) else
                    "" if v is None else v for v in row])
    return buf.getvalue()


def _inputs(cfg: dict) -> dict:
    out = {}
    for k in sorted(cfg):
        if k in ("out", "format", "jobs"):
            continue
        v = cfg[k]
        if isinstance(v, np.ndarray):
            v = {"start": float(v[0]), "stop": float(v[-1]), "count": len(v)}
        elif isinstance(v, list) and v and isinstance(v[0], np.ndarray):
            v = [{"start": float(a[0]), "stop": float(a[-1]), "count": len(a)} for a in v]
        out[k] = v
    return out


# ---------------------------------------------------------------------------
# parser

COMMANDS = {
    "curvature": (cmd_curvature, "Ric_N minima over a point grid"),
    "spectrum": (cmd_spectrum, "first nonzero eigenvalue of the weighted Laplacian on a line"),
    "bochner": (cmd_bochner, "Bochner inequality terms for a test function"),
    "concentration": (cmd_concentration, "half-line concentration estimates vs the exponential bound"),
    "lsi": (cmd_lsi, "log-Sobolev deficits over a tilted family"),
    "warped-product": (cmd_warped, "warped product over a 1-D base"),
    "verify": (cmd_verify, "run a named suite of numerical checks"),
}


def _add_manifold_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("manifold")
    g.add_argument("--model", help="model tag: m1, m2, gauss, hyperbolic, sphere, circle, flat-product, flat")
    g.add_argument("--weight", help="weight psi as an expression (custom manifold)")
    g.add_argument("--metric", nargs="+", metavar="EXPR", type=str,
                   help="metric entries: g (1-D) or g11 g12 g22 (2-D)")
    g.add_argument("--K", type=_float_list, help="curvature bound; comma list for a sweep")
    g.add_argument("--Neff", type=_dim_list, help="effective dimension (accepts inf); comma list")
    g.add_argument("--dim", type=_int)
    g.add_argument("--slope", type=_float)
    g.add_argument("--radius", type=_float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wricci", description="Weighted Ricci curvature with negative effective dimension.")
    parser.add_argument("--version", action="version", version=f"wricci {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    for name, (func, helptext) in COMMANDS.items():
        p = sub.add_parser(name, help=helptext, description=helptext)
        p.set_defaults(func=func)
        if name == "verify":
            p.add_argument("suite", nargs="?", choices=["all", *SUITES], default=None)
        else:
            _add_manifold_flags(p)
        p.add_argument("--config", help="key = value file; flags override it")
        p.add_argument("--format", choices=["json", "csv"])
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--jobs", type=_int, help="worker threads for sweeps (default: all cores)")
        p.add_argument("--seed", type=_int, help="seed for randomized sweeps")
        if name in ("curvature", "bochner", "warped-product"):
            p.add_argument("--grid", type=_axis, help="a:b:n, used on every axis")
            p.add_argument("--grid-2d", dest="grid_2d", type=_axes, help="a:b:n,c:d:m per axis")
        if name in ("spectrum", "concentration", "lsi"):
            p.add_argument("--L", type=_float, help="half-width of the truncated line")
        if name == "spectrum":
            p.add_argument("--nodes", type=_int, help="grid nodes (odd)")
            p.add_argument("--samples", type=_int, help="eigenfunction samples in the report")
            p.add_argument("--extrapolate", choices=["yes", "no"])
        if name == "bochner":
            p.add_argument("--u", help="test function expression")
        if name == "concentration":
            p.add_argument("--r", type=_float_list, help="comma list of radii")
        if name == "lsi":
            p.add_argument("--beta-max", dest="beta_max", type=_float)
            p.add_argument("--betas", type=_int, help="number of tilts")
        if name == "warped-product":
            p.add_argument("--base", help="base model tag (default circle)")
            p.add_argument("--base-K", dest="base_K", type=_float)
            p.add_argument("--base-Neff", dest="base_Neff", type=parse_dimension)
    return parser


def _fail(kind: str, msg, code: int) -> int:
    text = " ".join(str(msg).split())
    print(f"error[{kind}]: {text}", file=sys.stderr)
    return code


def _attach_negative_values(argv: Sequence[str]) -> list[str]:
    # argparse reads "-5:5:101" or "-x^2" as an option; glue such values to their flag
    out: list[str] = []
    it = iter(argv)
    for tok in it:
        out.append(tok)
        if tok.startswith("--") and "=" not in tok and tok not in _SWITCHES:
            nxt = next(it, None)
            if nxt is None:
                break
            if nxt.startswith("-") and not nxt.startswith("--") and len(nxt) > 1:
                out[-1] = f"{tok}={nxt}"
            else:
                out.append(nxt)
    return out


_SWITCHES = {"--help", "--version"}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(_attach_negative_values(argv))
        cfg = resolve(args)
        results, header, rows, code = args.func(cfg)
        fmt = cfg.get("format", "json")
        if fmt not in ("json", "csv"):
            raise ConfigError(f"unknown format {fmt!r}")
        if fmt == "csv":
            text = to_csv(header, rows)
        else:
            record = {"meta": {"program": "wricci", "version": __version__, "command": args.command},
                      "inputs": _inputs(cfg), "results": results}
            text = to_json(record) + "\n"
        out = cfg.get("out")
        if out:
            try:
                with open(out, "w", encoding="utf-8", newline="") as fh:
                    fh.write(text)
            except OSError as exc:
                raise ConfigError(f"cannot write {out!r}: {exc.strerror}") from None
        elif args.command != "verify":
            sys.stdout.write(text)
        return code
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (DomainError, GeometryError, SpectralError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _fail("numeric", exc, EXIT_NUMERIC)
    except (ConfigError, ValueError, TypeError) as exc:
        return _fail("config", exc, EXIT_CONFIG)


if __name__ == "__main__":
    sys.exit(main())
