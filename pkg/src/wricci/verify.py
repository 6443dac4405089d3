"""Named numerical checks, grouped into suites.

Each check function returns a list of :class:`Check` rows.  The CLI ``verify``
command and the acceptance tests run the same functions.
"""

from __future__ import annotations

import functools
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from .analysis import (
    bochner_report,
    concentration_profile,
    equality_residuals,
    lsi_sweep,
    sigma_composed_bound,
    spectral_gap_bound,
    tilt_grid,
)
from .expr import parse
from .geometry import hessian, laplace_beltrami
from .spectral import (
    discretize,
    eigen_smallest,
    first_nonzero_eigenvalue,
    l2_membership_diagnostic,
)
from .weighted import (
    NEG_INF,
    WeightedManifold,
    model_space,
    ric_n_direction,
    ric_n_form,
    warped_product,
    weighted_laplacian,
)

__all__ = ["Check", "SUITES", "CRITERIA", "run_suite", "format_table"]


@dataclass
class Check:
    name: str
    expected: str
    got: str
    tolerance: str
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: expected {self.expected}, got {self.got}, tol {self.tolerance}"


def _fmt(x) -> str:
    if x is NEG_INF:
        return "-inf"
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _max_check(name, expected, errors, tol) -> Check:
    worst = float(max(errors))
    return Check(name, expected, f"max err {worst:.3e}", f"{tol:g}", worst <= tol)


def _pool(jobs: Optional[int]):
    return ThreadPoolExecutor(max_workers=jobs or os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# curvature

KN_GRID = [(K, N) for K in (0.5, 1.0, 2.0) for N in (-5.0, -2.0, -1.2)]


def _constancy(tag: str, label: str) -> list[Check]:
    t0 = time.perf_counter()
    errs = []
    xs = np.linspace(-5, 5, 101)
    for K, N in KN_GRID:
        wm = model_space(tag, K=K, N=N)
        errs.extend(abs(ric_n_form(wm, [x], N)[0, 0] - K) for x in xs)
    dt = time.perf_counter() - t0
    return [
        _max_check(f"{label} Ric_N == K on 101 points x 9 (K,N)", "K", errs, 1e-8),
        Check(f"{label} curvature runtime", "< 1 s", f"{dt:.3f} s", "1 s", dt < 1.0),
    ]


def check_m1_constancy(**_) -> list[Check]:
    return _constancy("m1", "M1")


def check_m2_constancy(**_) -> list[Check]:
    return _constancy("m2", "M2")


def _monotone_cases(rng: np.random.Generator, count: int):
    makers = [
        lambda: (model_space("m1", K=rng.choice([0.5, 1, 2]), N=rng.choice([-5, -2, -1.2])), [rng.uniform(-3, 3)]),
        lambda: (model_space("m2", K=rng.choice([0.5, 1, 2]), N=rng.choice([-5, -2])), [rng.uniform(-3, 3)]),
        lambda: (model_space("gauss", K=rng.choice([0.5, 1, 2])), [rng.uniform(-3, 3)]),
        lambda: (model_space("hyperbolic", N=rng.choice([-5, -2, -1.2])), [rng.uniform(-2, 2), rng.uniform(0.3, 3)]),
        lambda: (model_space("flat-product", dim=2, slope=rng.uniform(0.2, 2)), rng.uniform(-2, 2, 2).tolist()),
        lambda: (model_space("flat-product", dim=3, slope=rng.uniform(0.2, 2)), rng.uniform(-2, 2, 3).tolist()),
        lambda: (warped_product(model_space("circle"), 1.0, -2.0), [rng.uniform(-2, 2), rng.uniform(-3, 3)]),
    ]
    for i in range(count):
        wm, p = makers[i % len(makers)]()
        yield i, wm, np.asarray(p, dtype=float)


def monotonicity_violations(seed: int = 0, count: int = 200, tol: float = 1e-9) -> tuple[float, int]:
    """Largest violation of the ordering of Ric_N in N over random tuples."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    checked = 0
    for i, wm, p in _monotone_cases(rng, count):
        n = wm.dim
        g = wm.chart.metric_at(p)
        v = rng.normal(size=n)
        if n >= 2 and i % 2:
            # a direction in the kernel of dpsi, so that Ric_n is finite
            dpsi = wm.psi.jet(p).gradient
            v = np.zeros(n)
            v[0], v[1] = -dpsi[1], dpsi[0]
            if not np.any(v):
                v[0] = 1.0
        v = v / math.sqrt(float(v @ g @ v))
        N1, N2 = sorted(rng.uniform(-10, -0.05, 2))
        Nbig = rng.uniform(n, 50)
        if Nbig == n:
            Nbig += 1
        chain = [
            ric_n_direction(wm, p, v, n),
            ric_n_direction(wm, p, v, Nbig),
            ric_n_direction(wm, p, v, math.inf),
            ric_n_direction(wm, p, v, N1),
            ric_n_direction(wm, p, v, N2),
        ]
        for a, b in zip(chain, chain[1:]):
            if a is NEG_INF:
                continue
            worst = max(worst, (a - b) / (1 + abs(b)))
        checked += 1
    return worst, checked


def check_monotonicity(seed: int = 0, **_) -> list[Check]:
    worst, count = monotonicity_violations(seed)
    return [Check(f"Ric_N non-decreasing in N ({count} tuples)", "no violation",
                  f"worst {worst:.3e}", "1e-09", worst <= 1e-9)]


# ---------------------------------------------------------------------------
# spectral

def check_sharp_eigenvalue(**_) -> list[Check]:
    t0 = time.perf_counter()
    r = first_nonzero_eigenvalue(model_space("m1", K=1, N=-2), L=30, M=4001)
    dt = time.perf_counter() - t0
    target = 2 / 3
    return [
        Check("M1(1,-2) lambda_1", "2/3", f"{r.lambda1:.9f}", "1e-3", abs(r.lambda1 - target) <= 1e-3),
        Check("M1(1,-2) Richardson lambda_1", "2/3", f"{r.extrapolated:.9f}", "1e-5",
              abs(r.extrapolated - target) <= 1e-5),
        Check("M1(1,-2) spectrum runtime", "< 5 s", f"{dt:.3f} s", "5 s", dt < 5.0),
    ]


def check_gauss_gap(**_) -> list[Check]:
    r = first_nonzero_eigenvalue(model_space("gauss", K=1), L=8, M=2001)
    return [Check("gauss_line(1) lambda_1", "1", f"{r.lambda1:.9f}", "1e-3", abs(r.lambda1 - 1) <= 1e-3)]


GAP_SWEEP = [(K, N) for K in (0.5, 1.0, 2.0) for N in (-5.0, -3.0, -2.0, -1.2)]


def gap_sweep(jobs: Optional[int] = None) -> list[tuple[float, float, float, float]]:
    def cell(kn):
        K, N = kn
        lam = first_nonzero_eigenvalue(model_space("m1", K=K, N=N), extrapolate=False).lambda1
        return K, N, lam, spectral_gap_bound(K, N)

    with _pool(jobs) as ex:
        return list(ex.map(cell, GAP_SWEEP))


def check_gap_sweep(jobs: Optional[int] = None, **_) -> list[Check]:
    rows = gap_sweep(jobs)
    worst = min(lam - b for _, _, lam, b in rows)
    return [Check("lambda_1 >= KN/(N-1) on M1 sweep (12 cells)", ">= -5e-3 margin",
                  f"min margin {worst:.3e}", "5e-3", worst >= -5e-3)]


def eigenfunction_cosine(K: float = 1.0, N: float = -2.0, L: float = 30.0, M: int = 4001) -> float:
    wm = model_space("m1", K=K, N=N)
    r = first_nonzero_eigenvalue(wm, L=L, M=M, extrapolate=False)
    mass = discretize(wm, L, M).mass
    s = wm.extras["eigenfunction"](r.x)
    v = r.eigenfunction
    return float((v * mass * s).sum() / math.sqrt((v * mass * v).sum() * (s * mass * s).sum()))


def check_eigenfunction_shape(**_) -> list[Check]:
    c = eigenfunction_cosine()
    return [Check("M1(1,-2) eigenfunction vs sinh", "cosine >= 0.999", f"{c:.9f}", "0.999", c >= 0.999)]


def check_l2_dichotomy(**_) -> list[Check]:
    out = []
    for N, want in ((-2.0, "convergent"), (-0.5, "divergent")):
        wm = model_space("m1", K=1, N=N)
        d = l2_membership_diagnostic(wm, wm.extras["eigenfunction"], (10, 20, 40, 80))
        out.append(Check(f"sinh candidate in L^2(M1(1,{N:g}))", want, d.classification, "exact",
                         d.classification == want))
    return out


def green_identity_error(seed: int = 0, count: int = 100) -> float:
    rng = np.random.default_rng(seed)
    op = discretize(model_space("m1", K=1, N=-2), 20.0, 801)
    worst = 0.0
    ones = op.apply(np.ones(op.grid.nodes))
    if np.any(ones != 0):
        return math.inf
    for _ in range(count):
        u = rng.normal(size=op.grid.nodes)
        v = rng.normal(size=op.grid.nodes)
        lhs = float(u @ op.apply(v))
        terms = op.conductance * np.diff(u) * np.diff(v)
        rhs = float(terms.sum())
        worst = max(worst, abs(lhs - rhs) / float(np.abs(terms).sum()))
    return worst


def check_green_identity(seed: int = 0, **_) -> list[Check]:
    err = green_identity_error(seed)
    return [Check("discrete Green identity u^T A v = sum c du dv", "0", f"rel err {err:.3e}", "1e-13",
                  err <= 1e-13)]


# ---------------------------------------------------------------------------
# hyperbolic / Obata

def hyperbolic_errors(seed: int = 0, count: int = 50, N: float = -2.0) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    wm = model_space("hyperbolic", N=N)
    u = wm.extras["eigenfunction"]
    psi1 = parse("(2-N)*log(sqrt(x^2+y^2)/y)", ("x", "y"), {"N": N})
    psi2 = parse("-(2-N)*log(sqrt(x^2+y^2))", ("x", "y"), {"N": N})
    errs = {"hess": 0.0, "lap": 0.0, "ric": 0.0, "psi2": 0.0, "psi1": 0.0}
    for _ in range(count):
        p = np.array([rng.uniform(-3, 3), rng.uniform(0.25, 4)])
        g = wm.chart.metric_at(p)
        uv = u(p)
        errs["hess"] = max(errs["hess"], np.abs(hessian(wm.chart, u, p) - uv * g).max())
        errs["lap"] = max(errs["lap"], abs(weighted_laplacian(wm, u, p) - N * uv))
        ric_expected = (1 - N) / p[1] ** 2 * np.eye(2)
        errs["ric"] = max(errs["ric"], np.abs(ric_n_form(wm, p, N) - ric_expected).max())
        ginv = np.linalg.inv(g)
        du = u.jet(p).gradient
        errs["psi2"] = max(errs["psi2"], abs(du @ ginv @ psi2.jet(p).gradient))
        errs["psi1"] = max(errs["psi1"], abs(du @ ginv @ psi1.jet(p).gradient - (2 - N) * uv))
    return errs


def check_hyperbolic(seed: int = 0, **_) -> list[Check]:
    e = hyperbolic_errors(seed)
    return [
        _max_check("half-plane Hess u == u g (50 pts)", "0", [e["hess"]], 1e-6),
        _max_check("half-plane Delta_m u == N u (50 pts)", "0", [e["lap"]], 1e-6),
        _max_check("half-plane Ric_N == (1-N)/y^2 I (50 pts)", "0", [e["ric"]], 1e-6),
        _max_check("half-plane <grad u, grad psi2> == 0", "0", [e["psi2"]], 1e-6),
        _max_check("half-plane <grad u, grad psi1> == (2-N) u", "0", [e["psi1"]], 1e-6),
    ]


def check_obata(seed: int = 0, **_) -> list[Check]:
    rng = np.random.default_rng(seed)
    wm = model_space("sphere", radius=1.0)
    errs = []
    for _ in range(20):
        p = np.array([rng.uniform(0.05, math.pi - 0.05), rng.uniform(-math.pi, math.pi)])
        c = math.cos(p[0])
        errs.append(abs(laplace_beltrami(wm.chart, "cos(theta)", p) + 2 * c))
    bound = spectral_gap_bound(1.0, 2.0)
    return [
        _max_check("unit sphere Delta cos(theta) == -2 cos(theta) (20 pts)", "0", errs, 1e-6),
        Check("Obata constant Kn/(n-1), K=1, n=2", "2", _fmt(bound), "exact", bound == 2.0),
    ]


# ---------------------------------------------------------------------------
# Bochner

_U_LINE = ["x^3", "sin(x)", "exp(0.3*x)", "cosh(x/2)", "x^2-x"]


def random_triples(seed: int = 0, count: int = 100):
    """Random (manifold, u, point) triples across the model catalog."""
    rng = np.random.default_rng(seed)

    def line(tag, **kw):
        wm = model_space(tag, **kw)
        u = rng.choice(_U_LINE + ([wm.extras["eigenfunction"].text] if "eigenfunction" in wm.extras else []))
        return wm, str(u), [rng.uniform(-2, 2)]

    makers = [
        lambda: line("m1", K=float(rng.choice([0.5, 1, 2])), N=float(rng.choice([-5, -2, -1.2]))),
        lambda: line("m2", K=float(rng.choice([0.5, 1, 2])), N=float(rng.choice([-5, -2, -1.2]))),
        lambda: line("gauss", K=float(rng.choice([0.5, 1, 2]))),
        lambda: (model_space("hyperbolic", N=float(rng.choice([-5, -2, -1.2]))),
                 str(rng.choice(["x/y", "x^2+y", "sin(x)*y", "log(y)+x"])),
                 [rng.uniform(-2, 2), rng.uniform(0.5, 3)]),
        lambda: (model_space("sphere", radius=float(rng.choice([1, 2]))),
                 str(rng.choice(["cos(theta)", "sin(theta)*cos(phi)", "theta^2+phi"])),
                 [rng.uniform(0.3, math.pi - 0.3), rng.uniform(-3, 3)]),
        lambda: (model_space("flat-product", dim=2, slope=float(rng.choice([0.5, 1]))),
                 str(rng.choice(["x*y", "sin(x)+y^2", "exp(x-y)"])),
                 rng.uniform(-1.5, 1.5, 2).tolist()),
        lambda: (warped_product(model_space("circle"), 1.0, -2.0),
                 str(rng.choice(["sinh(0.5773502691896258*t)", "t*x", "cos(x)+t^2"])),
                 [rng.uniform(-1.5, 1.5), rng.uniform(-3, 3)]),
    ]
    for i in range(count):
        yield makers[i % len(makers)]()


@functools.lru_cache(maxsize=8)
def bochner_sweep(seed: int = 0, count: int = 100) -> tuple[float, float]:
    """Worst |BW residual| and most negative Bochner gap over random triples."""
    worst_res = 0.0
    worst_gap = math.inf
    for wm, u, p in random_triples(seed, count):
        n = wm.dim
        Ns = [-5.0, -2.0, -1.2, math.inf]
        if wm.label in ("sphere", "circle"):
            Ns.append(float(n))
        for N in Ns:
            r = bochner_report(wm, u, p, N)
            worst_res = max(worst_res, abs(r.residual))
            worst_gap = min(worst_gap, r.gap_N)
    return worst_res, worst_gap


def check_bochner(seed: int = 0, **_) -> list[Check]:
    res, gap = bochner_sweep(seed)
    return [
        Check("Bochner-Weitzenboeck residual (100 triples)", "0", f"max |res| {res:.3e}", "1e-4", res <= 1e-4),
        Check("Bochner inequality gap (100 triples x N)", ">= 0", f"min gap {gap:.3e}", "1e-4", gap >= -1e-4),
    ]


def equality_case(seed: int = 0, count: int = 20) -> tuple[float, float, float]:
    rng = np.random.default_rng(seed)
    wm = model_space("m1", K=1.0, N=-2.0)
    u = wm.extras["eigenfunction"]
    K, N = 1.0, -2.0
    gap = prop = eq42 = 0.0
    for _ in range(count):
        p = [rng.uniform(-3, 3)]
        gap = max(gap, abs(bochner_report(wm, u, p, N).gap_N))
        dev, f, r42 = equality_residuals(wm, u, p, N)
        prop = max(prop, dev, abs(f + K * u(p) / (N - 1)))
        eq42 = max(eq42, abs(r42))
    return gap, prop, eq42


def check_equality_case(seed: int = 0, **_) -> list[Check]:
    gap, prop, eq42 = equality_case(seed)
    return [
        Check("M1 eigenfunction Bochner equality (20 pts)", "0", f"max |gap| {gap:.3e}", "1e-4", gap <= 1e-4),
        Check("M1 Hess u == -K u/(N-1) g", "0", f"max err {prop:.3e}", "1e-8", prop <= 1e-8),
        Check("M1 Delta_m u/N + <grad u, grad psi>/(N-n) == 0", "0", f"max err {eq42:.3e}", "1e-8", eq42 <= 1e-8),
    ]


# ---------------------------------------------------------------------------
# concentration / LSI

def check_concentration(**_) -> list[Check]:
    wm = model_space("m1", K=1, N=-2)
    pts = concentration_profile(wm, [0.0, 0.5, 1.0, 2.0, 4.0, 8.0])
    worst = max(p.half_line_alpha - p.bound for p in pts[1:])
    return [
        Check("M1(1,-2) half-line alpha(0)", "0.5", repr(pts[0].half_line_alpha), "exact",
              pts[0].half_line_alpha == 0.5),
        Check("M1(1,-2) half-line alpha <= exp(-sqrt(KN/(N-1)) r/3)", "<= bound",
              f"max(alpha - bound) {worst:.3e}", "0", worst <= 0),
    ]


def check_lsi(**_) -> list[Check]:
    m1 = model_space("m1", K=1, N=-2)
    sw = lsi_sweep(m1, 1.0, -2.0, tilt_grid(m1.extras["decay_rate"]), L=30.0)
    best = max(d for _, d in sw)
    g = model_space("gauss", K=1)
    sg = lsi_sweep(g, 1.0, math.inf, tilt_grid(2.0), L=12.0)
    worst = max(d for _, d in sg)
    return [
        Check("LSI fails on M1(1,-2) for some tilt", "deficit > 0", f"max deficit {best:.4g}", "0", best > 0),
        Check("Gaussian LSI holds for all tilts", "deficit <= 0", f"max deficit {worst:.3e}", "1e-6",
              worst <= 1e-6),
    ]


# ---------------------------------------------------------------------------
# warped product

def warped_errors(seed: int = 0, count: int = 50, K: float = 1.0, N: float = -2.0) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    w = warped_product(model_space("circle", radius=1.0), K, N)
    a = math.sqrt(K / (1 - N))
    radial = ratio = 0.0
    for _ in range(count):
        t, x = rng.uniform(-3, 3), rng.uniform(-3, 3)
        radial = max(radial, abs(ric_n_direction(w, [t, x], [1.0, 0.0], N) - K))
        got = w.density([t, x]) / w.density([0.0, x])
        ratio = max(ratio, abs(got - math.cosh(a * t) ** (N - 1)))
    return {"radial": radial, "ratio": ratio}


def check_warped(seed: int = 0, **_) -> list[Check]:
    e = warped_errors(seed)
    threshold, composed = sigma_composed_bound(1.0, -2.0)
    return [
        _max_check("warped Ric_N(d_t) == K (50 pts)", "1", [e["radial"]], 1e-6),
        _max_check("warped density ratio == cosh(at)^(N-1)", "0", [e["ratio"]], 1e-10),
        Check("base threshold K(2-N)/(1-N)", "4/3", _fmt(threshold), "1e-12", abs(threshold - 4 / 3) <= 1e-12),
        Check("composed base gap", "K = 1", _fmt(composed), "1e-12", abs(composed - 1.0) <= 1e-12),
    ]


# ---------------------------------------------------------------------------

CRITERIA: dict[int, Callable[..., list[Check]]] = {
    1: check_m1_constancy,
    2: check_m2_constancy,
    3: check_sharp_eigenvalue,
    4: check_gauss_gap,
    5: check_gap_sweep,
    6: check_eigenfunction_shape,
    7: check_hyperbolic,
    8: check_obata,
    9: lambda **kw: check_bochner(**kw)[:1],
    10: lambda **kw: check_bochner(**kw)[1:] + check_equality_case(**kw),
    11: check_monotonicity,
    12: check_l2_dichotomy,
    13: check_concentration,
    14: check_lsi,
    15: check_warped,
    16: check_green_identity,
}

SUITES: dict[str, list[Callable[..., list[Check]]]] = {
    "curvature": [check_m1_constancy, check_m2_constancy, check_monotonicity],
    "spectral": [check_sharp_eigenvalue, check_gauss_gap, check_gap_sweep, check_eigenfunction_shape,
                 check_l2_dichotomy, check_green_identity],
    "hyperbolic": [check_hyperbolic, check_obata],
    "bochner": [check_bochner, check_equality_case],
    "concentration": [check_concentration, check_lsi],
    "warped": [check_warped],
}


def run_suite(name: str, seed: int = 0, jobs: Optional[int] = None) -> list[Check]:
    if name == "all":
        funcs: Iterable = [f for fs in SUITES.values() for f in fs]
    elif name in SUITES:
        funcs = SUITES[name]
    else:
        raise ValueError(f"unknown suite {name!r}; choose from all, {', '.join(SUITES)}")
    out = []
    for f in funcs:
        out.extend(f(seed=seed, jobs=jobs))
    return out


def format_table(checks: list[Check]) -> str:
    headers = ("check", "expected", "got", "tolerance", "status")
    rows = [(c.name, c.expected, c.got, c.tolerance, "PASS" if c.passed else "FAIL") for c in checks]
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows)
    return "\n".join(lines)
