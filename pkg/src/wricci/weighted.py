"""Weighted manifolds: Ric_N in every admissible range of N, the weighted
Laplacian, a catalog of model spaces, and the cosh-warped product."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from .expr import Expression, parse
from .geometry import (
    Chart,
    GeometryError,
    ScalarField,
    _field_jet,
    _hessian_from,
    as_field,
    circle_chart,
    flat_chart,
    half_plane_chart,
    laplace_beltrami,
    line_chart,
    ricci_tensor,
    sphere_chart,
)

__all__ = [
    "NEG_INF",
    "ORTHO_TOL",
    "WeightedManifold",
    "CurvatureReport",
    "SigmaReport",
    "check_dimension",
    "parse_dimension",
    "ric_n_form",
    "ric_n_direction",
    "ric_n_min",
    "curvature_report",
    "weighted_laplacian",
    "model_space",
    "MODEL_TAGS",
    "warped_product",
    "sigma_curvature_check",
    "generalized_eigh_min",
]

# relative cutoff for <grad psi, v> = 0 in the N = n branch
ORTHO_TOL = 1e-10


class _NegInfinity:
    """Marker for Ric_n(v) = -infinity.

    Compares below every real number and refuses arithmetic, so it can never
    leak a NaN into a report.
    """

    __slots__ = ()

    def __repr__(self) -> str:
        return "NEG_INF"

    def __str__(self) -> str:
        return "-inf"

    def __lt__(self, other):
        return other is not self

    def __le__(self, other):
        return True

    def __gt__(self, other):
        return False

    def __ge__(self, other):
        return other is self

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("NEG_INF")

    def __reduce__(self):
        return "NEG_INF"


NEG_INF = _NegInfinity()


def check_dimension(N: float, n: int) -> float:
    """Validate an effective dimension; ``math.inf`` is the infinity marker."""
    N = float(N)
    if math.isnan(N) or N == -math.inf:
        raise ValueError(f"invalid effective dimension {N}")
    if 0 <= N < n:
        raise ValueError(f"effective dimension N={N:g} lies in the excluded range [0, {n})")
    return N


def parse_dimension(text: str) -> float:
    t = str(text).strip().lower()
    if t in ("inf", "+inf", "infinity", "oo"):
        return math.inf
    return float(t)


@dataclass(frozen=True)
class WeightedManifold:
    """A chart with weight ``psi``; the measure is ``exp(-psi) vol_g``.

    ``params`` holds family labels such as ``K`` and ``N``; ``extras`` holds
    auxiliary objects (known eigenfunctions, the base of a warped product).
    """

    chart: Chart
    psi: ScalarField
    label: Optional[str] = None
    params: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.chart.dim

    def density(self, p) -> float:
        """``exp(-psi) sqrt(det g)`` at ``p``."""
        g = self.chart.metric_at(p)
        d = math.exp(-self.psi.value(np.atleast_1d(np.asarray(p, dtype=float)))) * math.sqrt(np.linalg.det(g))
        if not (math.isfinite(d) and d > 0):
            raise GeometryError(f"measure density {d} is not finite and positive at {p}")
        return d

    def density_values(self, xs: np.ndarray) -> np.ndarray:
        """Vectorised density on a 1-D chart, evaluated at nodes ``xs``."""
        if self.dim != 1:
            raise ValueError("density_values is defined for 1-D charts only")
        xs = np.asarray(xs, dtype=float)
        psi = self.psi.values(xs)
        g = self.chart.metric[0][0](xs) if self.chart.symbolic else np.array(
            [self.chart.metric_func(np.array([x]))[0, 0] for x in xs]
        )
        with np.errstate(over="ignore", under="ignore"):
            return np.exp(-psi) * np.sqrt(np.broadcast_to(g, xs.shape))

    def with_params(self, **kw) -> "WeightedManifold":
        return WeightedManifold(self.chart, self.psi, self.label, {**self.params, **kw}, self.extras)


# ---------------------------------------------------------------------------
# Ric_N

def _pieces(wm: WeightedManifold, p):
    p, jet = _field_jet(wm.chart, wm.psi, p)
    ric = ricci_tensor(wm.chart, p)
    hpsi = _hessian_from(wm.chart, jet, p)
    return p, ric, hpsi, np.asarray(jet.gradient, dtype=float)


def ric_n_form(wm: WeightedManifold, p, N: float) -> np.ndarray:
    """Ric_N as a symmetric matrix: ``Ric + Hess psi - dpsi (x) dpsi / (N - n)``.

    ``N = math.inf`` drops the last term.  ``N = n`` has a tensor form only
    where ``dpsi`` vanishes; elsewhere use :func:`ric_n_direction`.
    """
    n = wm.dim
    N = check_dimension(N, n)
    p, ric, hpsi, dpsi = _pieces(wm, p)
    form = ric + hpsi
    if N == n:
        if _grad_norm(wm, p, dpsi) > ORTHO_TOL:
            raise ValueError("Ric_n is only defined direction-wise where dpsi != 0; use ric_n_direction")
    elif N != math.inf:
        form = form - np.outer(dpsi, dpsi) / (N - n)
    return 0.5 * (form + form.T)


def _grad_norm(wm: WeightedManifold, p, dpsi: np.ndarray) -> float:
    g = wm.chart.metric_at(p)
    return math.sqrt(float(dpsi @ np.linalg.solve(g, dpsi)))


def ric_n_direction(wm: WeightedManifold, p, v, N: float):
    """Ric_N(v) for a tangent vector ``v`` (coordinate components).

    Returns a float, or :data:`NEG_INF` in the ``N = n`` branch when ``v`` is
    not orthogonal to ``grad psi``.  Homogeneous of degree 2 in ``v``.
    """
    n = wm.dim
    N = check_dimension(N, n)
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.shape != (n,) or not np.all(np.isfinite(v)):
        raise ValueError(f"tangent vector must be finite with {n} components")
    if N != n:
        return float(v @ ric_n_form(wm, p, N) @ v)
    p, ric, hpsi, dpsi = _pieces(wm, p)
    g = wm.chart.metric_at(p)
    pairing = abs(float(dpsi @ v))
    grad_norm = _grad_norm(wm, p, dpsi)
    v_norm = math.sqrt(float(v @ g @ v))
    if pairing > ORTHO_TOL * grad_norm * v_norm:
        return NEG_INF
    return float(v @ (ric + hpsi) @ v)


def generalized_eigh_min(form: np.ndarray, g: np.ndarray) -> tuple[float, np.ndarray]:
    """Smallest root of ``det(form - lam g) = 0`` and a g-unit eigenvector.

    Closed form for n <= 3 after a Cholesky reduction.
    """
    n = g.shape[0]
    L = np.linalg.cholesky(g)
    Linv = np.linalg.inv(L)
    c = Linv @ form @ Linv.T
    c = 0.5 * (c + c.T)
    lam, w = _sym_eig_min(c)
    v = Linv.T @ w
    v = v / math.sqrt(float(v @ g @ v))
    # deterministic sign: first non-negligible component positive
    k = int(np.argmax(np.abs(v) > 1e-12 * np.abs(v).max()))
    if v[k] < 0:
        v = -v
    return lam, v


def _sym_eig_min(c: np.ndarray) -> tuple[float, np.ndarray]:
    n = c.shape[0]
    if n == 1:
        return float(c[0, 0]), np.array([1.0])
    if n == 2:
        a, b, d = c[0, 0], c[0, 1], c[1, 1]
        mid = 0.5 * (a + d)
        rad = math.hypot(0.5 * (a - d), b)
        lam = mid - rad
        v1 = np.array([b, lam - a])
        v2 = np.array([lam - d, b])
        w = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
        if np.linalg.norm(w) <= 1e-14 * max(1.0, abs(mid)):
            w = np.array([1.0, 0.0])
        return float(lam), w / np.linalg.norm(w)
    # trigonometric solution of the symmetric 3x3 characteristic cubic
    p1 = c[0, 1] ** 2 + c[0, 2] ** 2 + c[1, 2] ** 2
    q = np.trace(c) / 3.0
    if p1 == 0.0:
        i = int(np.argmin(np.diag(c)))
        w = np.zeros(3)
        w[i] = 1.0
        return float(c[i, i]), w
    p2 = (c[0, 0] - q) ** 2 + (c[1, 1] - q) ** 2 + (c[2, 2] - q) ** 2 + 2 * p1
    p = math.sqrt(p2 / 6.0)
    B = (c - q * np.eye(3)) / p
    r = min(1.0, max(-1.0, np.linalg.det(B) / 2.0))
    phi = math.acos(r) / 3.0
    lam = q + 2 * p * math.cos(phi + 2 * math.pi / 3)
    m = c - lam * np.eye(3)
    crosses = [np.cross(m[0], m[1]), np.cross(m[0], m[2]), np.cross(m[1], m[2])]
    norms = [np.linalg.norm(x) for x in crosses]
    scale = max(1.0, float(np.abs(c).max()))
    k = int(np.argmax(norms))
    if norms[k] > 1e-10 * scale * scale:
        w = crosses[k]
    else:
        # repeated smallest eigenvalue: anything orthogonal to the dominant row
        row = m[int(np.argmax(np.linalg.norm(m, axis=1)))]
        if np.linalg.norm(row) <= 1e-12 * scale:
            w = np.array([1.0, 0.0, 0.0])
        else:
            e = np.zeros(3)
            e[int(np.argmin(np.abs(row)))] = 1.0
            w = np.cross(row, e)
    return float(lam), w / np.linalg.norm(w)


def ric_n_min(wm: WeightedManifold, p, N: float) -> tuple[float, np.ndarray]:
    """Minimum of Ric_N over g-unit directions at ``p`` and a minimiser.

    For ``N = n`` with ``dpsi != 0`` the infimum is :data:`NEG_INF`, attained
    along ``grad psi``.
    """
    lam, v, _ = _min_with_form(wm, p, N)
    return lam, v


def _min_with_form(wm: WeightedManifold, p, N: float):
    n = wm.dim
    N = check_dimension(N, n)
    p = np.atleast_1d(np.asarray(p, dtype=float))
    g = wm.chart.metric_at(p)
    if N == n:
        _, _, _, dpsi = _pieces(wm, p)
        norm = _grad_norm(wm, p, dpsi)
        if norm > ORTHO_TOL:
            return NEG_INF, np.linalg.solve(g, dpsi) / norm, None
    form = ric_n_form(wm, p, N)
    lam, v = generalized_eigh_min(form, g)
    return lam, v, form


@dataclass
class CurvatureReport:
    points: list
    forms: list
    minima: list
    directions: list
    N: float

    @property
    def summary_min(self):
        m = min(self.minima)
        return m if m is NEG_INF else float(m)

    @property
    def summary_max(self):
        m = max(self.minima)
        return m if m is NEG_INF else float(m)


def curvature_report(wm: WeightedManifold, points: Sequence, N: float) -> CurvatureReport:
    forms, minima, dirs, pts = [], [], [], []
    for p in points:
        p = np.atleast_1d(np.asarray(p, dtype=float))
        lam, v, form = _min_with_form(wm, p, N)
        pts.append(p)
        forms.append(form)
        minima.append(lam)
        dirs.append(v)
    return CurvatureReport(pts, forms, minima, dirs, N)


def weighted_laplacian(wm: WeightedManifold, u, p) -> float:
    """``Delta u - <grad u, grad psi>``."""
    u = as_field(u, wm.chart)
    p, ujet = _field_jet(wm.chart, u, p)
    _, pjet = _field_jet(wm.chart, wm.psi, p)
    g = wm.chart.metric_at(p)
    ginv = np.linalg.inv(g)
    lap = float(np.einsum("ij,ij->", ginv, _hessian_from(wm.chart, ujet, p)))
    return lap - float(ujet.gradient @ ginv @ pjet.gradient)


# ---------------------------------------------------------------------------
# Model spaces

MODEL_TAGS = ("m1", "m2", "gauss", "hyperbolic", "sphere", "circle", "flat-product", "flat")


def _norm_tag(tag: str) -> str:
    t = tag.strip().lower().replace("_", "-")
    aliases = {"gauss-line": "gauss", "gaussian": "gauss", "hyperbolic-example": "hyperbolic"}
    return aliases.get(t, t)


def _need_kn(K, N):
    if K is None or N is None:
        raise ValueError("this model needs K and N")
    K, N = float(K), float(N)
    if not K > 0:
        raise ValueError(f"K must be positive, got {K}")
    if not N < 0:
        raise ValueError(f"N must be negative, got {N}")
    return K, N


def model_space(tag: str, **params: Any) -> WeightedManifold:
    """Construct a named model space.

    ``m1`` (K, N): line with density ``cosh(sqrt(K/(1-N)) x)^(N-1)``.
    ``m2`` (K, N): line with density ``exp(-sqrt(K(1-N)) x)``.
    ``gauss`` (K): line with density ``exp(-K x^2/2)``.
    ``hyperbolic`` (N): half-plane with ``psi = -(2-N) log y``.
    ``sphere`` (radius), ``circle`` (radius): unweighted.
    ``flat-product`` (dim, slope): ``R^n`` with ``psi = slope*(x1+...+xn)``.
    ``flat`` (dim): unweighted Euclidean space.
    """
    t = _norm_tag(tag)
    K = params.get("K")
    N = params.get("N")
    if t == "m1":
        K, N = _need_kn(K, N)
        chart = line_chart()
        psi = parse("(1-N)*log(cosh(sqrt(K/(1-N))*x))", chart.coordinates, {"K": K, "N": N})
        a = math.sqrt(K / (1 - N))
        u = parse(f"sinh({a!r}*x)", chart.coordinates)
        return WeightedManifold(chart, ScalarField(psi), "m1", {"K": K, "N": N},
                                {"eigenfunction": u, "decay_rate": math.sqrt(K * (1 - N))})
    if t == "m2":
        K, N = _need_kn(K, N)
        chart = line_chart()
        psi = parse("sqrt(K*(1-N))*x", chart.coordinates, {"K": K, "N": N})
        return WeightedManifold(chart, ScalarField(psi), "m2", {"K": K, "N": N},
                                {"infinite_volume": True})
    if t == "gauss":
        K = float(params.get("K", 1.0))
        if not K > 0:
            raise ValueError(f"K must be positive, got {K}")
        chart = line_chart()
        psi = parse("K*x^2/2", chart.coordinates, {"K": K})
        return WeightedManifold(chart, ScalarField(psi), "gauss", {"K": K, "N": math.inf},
                                {"eigenfunction": parse("x", chart.coordinates)})
    if t == "hyperbolic":
        if N is None:
            raise ValueError("hyperbolic model needs N")
        N = float(N)
        if not N < 0:
            raise ValueError(f"N must be negative, got {N}")
        chart = half_plane_chart()
        psi = parse("-(2-N)*log(y)", chart.coordinates, {"N": N})
        return WeightedManifold(chart, ScalarField(psi), "hyperbolic", {"K": 1 - N, "N": N},
                                {"eigenfunction": parse("x/y", chart.coordinates)})
    if t == "sphere":
        r = float(params.get("radius", 1.0))
        chart = sphere_chart(r)
        return WeightedManifold(chart, ScalarField(parse("0", chart.coordinates)), "sphere",
                                {"K": 1 / (r * r), "N": 2.0, "radius": r},
                                {"eigenfunction": parse("cos(theta)", chart.coordinates)})
    if t == "circle":
        r = float(params.get("radius", 1.0))
        chart = circle_chart(r)
        return WeightedManifold(chart, ScalarField(parse("0", chart.coordinates)), "circle",
                                {"radius": r})
    if t in ("flat-product", "flat"):
        n = int(params.get("dim", params.get("n", 2)))
        slope = float(params.get("slope", 1.0)) if t == "flat-product" else 0.0
        chart = flat_chart(n)
        text = "+".join(chart.coordinates)
        psi = parse(f"s*({text})", chart.coordinates, {"s": slope})
        return WeightedManifold(chart, ScalarField(psi), t, {"dim": n, "slope": slope})
    raise ValueError(f"unknown model {tag!r}; known: {', '.join(MODEL_TAGS)}")


def custom_line(weight: str, **params: Any) -> WeightedManifold:
    """Euclidean line with weight formula ``weight`` in ``x``."""
    chart = line_chart()
    psi = parse(weight, chart.coordinates, {k: v for k, v in params.items() if k in ("K", "N")})
    return WeightedManifold(chart, ScalarField(psi), "custom",
                            {k: float(v) for k, v in params.items() if v is not None})


# ---------------------------------------------------------------------------
# Warped products

def warped_product(sigma: WeightedManifold, K: float, N: float) -> WeightedManifold:
    """``R x_cosh(a t) sigma`` with ``a = sqrt(K/(1-N))``.

    Metric ``dt^2 + cosh(a t)^2 g_sigma`` and weight
    ``(2-N) log cosh(a t) + psi_sigma``, so that the measure is
    ``cosh(a t)^(N-1) dt m_sigma``.
    """
    K, N = float(K), float(N)
    if not K > 0:
        raise ValueError(f"K must be positive, got {K}")
    if not N < -1:
        raise ValueError(f"warped product needs N < -1, got {N}")
    if sigma.dim != 1:
        raise ValueError("only 1-dimensional bases are supported")
    if not sigma.chart.symbolic or not sigma.psi.is_expression:
        raise ValueError("base must have expression metric and weight")
    (s,) = sigma.chart.coordinates
    if s == "t":
        raise ValueError("base coordinate must not be named 't'")
    coords = ("t", s)
    a = math.sqrt(K / (1 - N))
    gs = sigma.chart.metric[0][0].text
    metric = (
        (parse("1", coords), parse("0", coords)),
        (parse("0", coords), parse(f"cosh({a!r}*t)^2*({gs})", coords)),
    )
    chart = Chart(
        coordinates=coords,
        domain=((-math.inf, math.inf), sigma.chart.domain[0]),
        metric=metric,
        name=f"warped({sigma.chart.name})",
    )
    psi = parse(f"({2 - N!r})*log(cosh({a!r}*t))+({sigma.psi.expr.text})", coords)
    return WeightedManifold(chart, ScalarField(psi), "warped", {"K": K, "N": N},
                            {"sigma": sigma, "warp_rate": a})


@dataclass
class SigmaReport:
    threshold: float
    points: list
    values: list
    margins: list

    @property
    def satisfied(self) -> bool:
        return min(self.margins) >= -1e-8


def sigma_curvature_check(warped: WeightedManifold, points: Sequence) -> SigmaReport:
    """Compare Ric_{N-1} of the base against ``K(2-N)/(1-N)``.

    A negative margin means the base does not satisfy the bound; it is
    reported, not raised.
    """
    sigma = warped.extras.get("sigma")
    if sigma is None:
        raise ValueError("not the output of warped_product")
    K, N = warped.params["K"], warped.params["N"]
    threshold = K * (2 - N) / (1 - N)
    values = [ric_n_min(sigma, p, N - 1)[0] for p in points]
    return SigmaReport(threshold, list(points), values, [v - threshold for v in values])
