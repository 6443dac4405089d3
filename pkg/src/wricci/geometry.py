"""Coordinate-chart Riemannian calculus in dimension 1 to 3.

Metric components are :class:`~wricci.expr.Expression` objects whenever
possible, in which case first and second metric derivatives come from the
jet evaluator and Christoffel symbols, their derivatives and the Ricci tensor
are exact up to rounding.  A chart may instead carry a plain callable for the
metric; then derivatives fall back to central differences with step
``H_GAMMA``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .expr import Expression, Jet2, eval_jet2, parse

__all__ = [
    "GeometryError",
    "Chart",
    "ScalarField",
    "as_field",
    "christoffel",
    "christoffel_derivative",
    "hessian",
    "gradient",
    "laplace_beltrami",
    "ricci_tensor",
    "hs_norm_sq",
    "flat_chart",
    "line_chart",
    "half_plane_chart",
    "sphere_chart",
    "circle_chart",
    "H_GAMMA",
]

H_GAMMA = 1e-4
COMPOSITE_STEP = 1e-4


class GeometryError(ValueError):
    """Invalid chart, point outside the domain, or degenerate metric."""


@dataclass(frozen=True)
class Chart:
    """Coordinate box with a metric.

    ``metric`` is an ``n x n`` nested tuple of expressions over
    ``coordinates``; alternatively ``metric_func`` maps a point to the metric
    matrix.  ``exact_christoffel`` is an optional closed form used to
    cross-check the generic path.
    """

    coordinates: tuple[str, ...]
    domain: tuple[tuple[float, float], ...]
    metric: Optional[tuple[tuple[Expression, ...], ...]] = None
    metric_func: Optional[Callable[[np.ndarray], np.ndarray]] = None
    exact_christoffel: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "chart"

    def __post_init__(self):
        n = len(self.coordinates)
        if n not in (1, 2, 3):
            raise GeometryError(f"chart dimension must be 1, 2 or 3, got {n}")
        if len(self.domain) != n:
            raise GeometryError("domain box must have one interval per coordinate")
        for lo, hi in self.domain:
            if not lo < hi:
                raise GeometryError(f"empty coordinate interval ({lo}, {hi})")
        if (self.metric is None) == (self.metric_func is None):
            raise GeometryError("give exactly one of metric expressions or metric_func")
        if self.metric is not None:
            if len(self.metric) != n or any(len(row) != n for row in self.metric):
                raise GeometryError(f"metric must be {n}x{n}")
            for i in range(n):
                for j in range(i + 1, n):
                    if self.metric[i][j].text != self.metric[j][i].text:
                        raise GeometryError(f"metric entries ({i},{j}) and ({j},{i}) differ")

    @property
    def dim(self) -> int:
        return len(self.coordinates)

    @property
    def symbolic(self) -> bool:
        return self.metric is not None

    def require_inside(self, p, margin: float | np.ndarray = 0.0) -> np.ndarray:
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if p.shape != (self.dim,):
            raise GeometryError(f"point must have {self.dim} coordinates, got shape {p.shape}")
        m = np.broadcast_to(np.asarray(margin, dtype=float), (self.dim,))
        for x, (lo, hi), mi, name in zip(p, self.domain, m, self.coordinates):
            if not (lo + mi < x < hi - mi):
                raise GeometryError(
                    f"{name}={x!r} is not inside ({lo}, {hi}) with margin {mi:g}"
                )
        return p

    def metric_at(self, p) -> np.ndarray:
        p = self.require_inside(p)
        if self.metric is not None:
            g = np.array([[e(p) for e in row] for row in self.metric], dtype=float)
        else:
            g = np.asarray(self.metric_func(p), dtype=float).reshape(self.dim, self.dim)
        _check_metric(g, p)
        return g

    def metric_jets(self, p) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Metric, first and second derivatives at ``p``.

        Returns ``g[i,j]``, ``dg[k,i,j] = d_k g_ij`` and
        ``ddg[k,l,i,j] = d_k d_l g_ij``.
        """
        p = self.require_inside(p)
        n = self.dim
        if self.metric is None:
            raise GeometryError("metric_jets requires expression metric entries")
        g = np.empty((n, n))
        dg = np.empty((n, n, n))
        ddg = np.empty((n, n, n, n))
        for i in range(n):
            for j in range(i, n):
                jet = eval_jet2(self.metric[i][j], p)
                for (a, b) in ((i, j), (j, i)):
                    g[a, b] = jet.value
                    dg[:, a, b] = jet.gradient
                    ddg[:, :, a, b] = jet.hessian
        _check_metric(g, p)
        return g, dg, ddg

    def metric_derivative_fd(self, p, h: float = H_GAMMA) -> tuple[np.ndarray, np.ndarray]:
        p = self.require_inside(p, 2 * h)
        n = self.dim
        g = self.metric_at(p)
        dg = np.empty((n, n, n))
        for k in range(n):
            e = np.zeros(n)
            e[k] = h
            dg[k] = (self.metric_at(p + e) - self.metric_at(p - e)) / (2 * h)
        return g, dg


def _check_metric(g: np.ndarray, p) -> None:
    if not np.all(np.isfinite(g)):
        raise GeometryError(f"non-finite metric at {p}")
    if not np.array_equal(g, g.T):
        raise GeometryError(f"metric not symmetric at {p}")
    for k in range(1, g.shape[0] + 1):
        if np.linalg.det(g[:k, :k]) <= 0:
            raise GeometryError(f"metric not positive definite at {p}")


class ScalarField:
    """A function on a chart, either an expression or a composite callable.

    Composite fields are differentiated by central differences.  The default
    step per axis is ``COMPOSITE_STEP * (1 + |x_i|)``; a fixed ``step`` can be
    given, optionally refined by one Richardson extrapolation (``h`` and
    ``h/2``).
    """

    def __init__(
        self,
        expr: Optional[Expression] = None,
        func: Optional[Callable[[np.ndarray], float]] = None,
        *,
        step: Optional[float] = None,
        richardson: bool = False,
        name: Optional[str] = None,
    ):
        if (expr is None) == (func is None):
            raise ValueError("give exactly one of expr or func")
        self.expr = expr
        self.func = func
        self.step = step
        self.richardson = richardson
        self.name = name or (expr.text if expr is not None else "composite")

    def __repr__(self) -> str:
        kind = "expr" if self.expr is not None else "composite"
        return f"ScalarField({kind}: {self.name})"

    @property
    def is_expression(self) -> bool:
        return self.expr is not None

    def value(self, p) -> float:
        if self.expr is not None:
            return float(self.expr(np.asarray(p, dtype=float)))
        return float(self.func(np.asarray(p, dtype=float)))

    def values(self, points: np.ndarray) -> np.ndarray:
        """Vectorised values on a batch of points (shape ``(P,)`` or ``(P, n)``)."""
        points = np.asarray(points, dtype=float)
        if self.expr is not None:
            return np.asarray(self.expr(points), dtype=float).reshape(len(points))
        if points.ndim == 1:
            points = points[:, None]
        return np.array([self.func(q) for q in points], dtype=float)

    def steps(self, p: np.ndarray) -> np.ndarray:
        if self.step is not None:
            return np.full(p.shape, float(self.step))
        return COMPOSITE_STEP * (1.0 + np.abs(p))

    def fd_margin(self, p: np.ndarray) -> np.ndarray:
        return 2.0 * self.steps(p) + 1e-300

    def jet(self, p) -> Jet2:
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if self.expr is not None:
            return eval_jet2(self.expr, p)
        h = self.steps(p)
        j1 = _fd_jet(self.func, p, h)
        if not self.richardson:
            return j1
        j2 = _fd_jet(self.func, p, h / 2)
        return Jet2(
            j2.value,
            (4 * j2.gradient - j1.gradient) / 3,
            (4 * j2.hessian - j1.hessian) / 3,
        )


def _fd_jet(f, p: np.ndarray, h: np.ndarray) -> Jet2:
    n = p.size
    f0 = float(f(p))
    grad = np.empty(n)
    hess = np.empty((n, n))
    fp = np.empty(n)
    fm = np.empty(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = h[i]
        fp[i] = f(p + e)
        fm[i] = f(p - e)
        grad[i] = (fp[i] - fm[i]) / (2 * h[i])
        hess[i, i] = (fp[i] - 2 * f0 + fm[i]) / (h[i] * h[i])
    for i in range(n):
        for j in range(i + 1, n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h[i]
            ej[j] = h[j]
            v = (f(p + ei + ej) - f(p + ei - ej) - f(p - ei + ej) + f(p - ei - ej)) / (4 * h[i] * h[j])
            hess[i, j] = hess[j, i] = v
    if not (np.all(np.isfinite(grad)) and np.all(np.isfinite(hess))):
        raise GeometryError(f"non-finite finite-difference result at {p}")
    return Jet2(f0, grad, hess)


def as_field(u, chart: Chart) -> ScalarField:
    """Coerce text, an Expression or a callable into a :class:`ScalarField`."""
    if isinstance(u, ScalarField):
        return u
    if isinstance(u, Expression):
        return ScalarField(u.rebind(chart.coordinates))
    if isinstance(u, str):
        return ScalarField(parse(u, chart.coordinates))
    if callable(u):
        return ScalarField(func=u)
    raise TypeError(f"cannot interpret {u!r} as a scalar field")


def _field_jet(chart: Chart, u: ScalarField, p) -> tuple[np.ndarray, Jet2]:
    if u.is_expression:
        p = chart.require_inside(p)
    else:
        p = np.atleast_1d(np.asarray(p, dtype=float))
        p = chart.require_inside(p, u.fd_margin(p))
    return p, u.jet(p)


def christoffel(chart: Chart, p) -> np.ndarray:
    """Christoffel symbols ``G[k, i, j]`` of the second kind at ``p``."""
    if chart.symbolic:
        g, dg, _ = chart.metric_jets(p)
    else:
        g, dg = chart.metric_derivative_fd(p)
    return _gamma_from(g, dg)


def _gamma_from(g: np.ndarray, dg: np.ndarray) -> np.ndarray:
    ginv = np.linalg.inv(g)
    # first kind: G_l,ij = (d_i g_jl + d_j g_il - d_l g_ij) / 2
    first = 0.5 * (np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg)
    gam = np.einsum("kl,lij->kij", ginv, first)
    # exact symmetry in (i, j)
    n = g.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            gam[:, j, i] = gam[:, i, j]
    return gam


def christoffel_derivative(chart: Chart, p, h: float = H_GAMMA) -> np.ndarray:
    """``dG[m, k, i, j] = d_m G^k_ij``.

    Exact for expression metrics, central differences of step ``h``
    otherwise.
    """
    n = chart.dim
    if chart.symbolic:
        g, dg, ddg = chart.metric_jets(p)
        ginv = np.linalg.inv(g)
        first = 0.5 * (np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg)
        # d_m of the first-kind symbols
        dfirst = 0.5 * (
            np.einsum("mijl->mlij", ddg) + np.einsum("mjil->mlij", ddg) - np.einsum("mlij->mlij", ddg)
        )
        dginv = -np.einsum("ka,mab,bl->mkl", ginv, dg, ginv)
        return np.einsum("mkl,lij->mkij", dginv, first) + np.einsum("kl,mlij->mkij", ginv, dfirst)
    p = chart.require_inside(p, 4 * h)
    out = np.empty((n, n, n, n))
    for m in range(n):
        e = np.zeros(n)
        e[m] = h
        out[m] = (christoffel(chart, p + e) - christoffel(chart, p - e)) / (2 * h)
    if not np.all(np.isfinite(out)):
        raise GeometryError(f"non-finite Christoffel derivative at {p}")
    return out


def gradient(chart: Chart, u, p) -> np.ndarray:
    """Gradient vector ``g^{ij} d_j u`` (index raised)."""
    u = as_field(u, chart)
    p, jet = _field_jet(chart, u, p)
    return np.linalg.solve(chart.metric_at(p), jet.gradient)


def hessian(chart: Chart, u, p) -> np.ndarray:
    """Covariant Hessian ``d_i d_j u - G^k_ij d_k u`` as an ``n x n`` array."""
    u = as_field(u, chart)
    p, jet = _field_jet(chart, u, p)
    return _hessian_from(chart, jet, p)


def _hessian_from(chart: Chart, jet: Jet2, p) -> np.ndarray:
    gam = christoffel(chart, p)
    hess = jet.hessian - np.einsum("kij,k->ij", gam, jet.gradient)
    return 0.5 * (hess + hess.T)


def laplace_beltrami(chart: Chart, u, p) -> float:
    """Trace of the Hessian with respect to the metric."""
    u = as_field(u, chart)
    p, jet = _field_jet(chart, u, p)
    ginv = np.linalg.inv(chart.metric_at(p))
    return float(np.einsum("ij,ij->", ginv, _hessian_from(chart, jet, p)))


def hs_norm_sq(chart: Chart, form: np.ndarray, p) -> float:
    """Squared Hilbert-Schmidt norm of a bilinear form with respect to g."""
    ginv = np.linalg.inv(chart.metric_at(p))
    m = ginv @ form
    return float(np.trace(m @ m))


def ricci_tensor(chart: Chart, p) -> np.ndarray:
    """Ricci tensor ``R_ij`` at ``p``; identically zero in dimension 1."""
    p = chart.require_inside(p)
    n = chart.dim
    if n == 1:
        return np.zeros((1, 1))
    gam = christoffel(chart, p)
    dgam = christoffel_derivative(chart, p)
    ric = (
        np.einsum("kkij->ij", dgam)
        - np.einsum("ikkj->ij", dgam)
        + np.einsum("kkl,lij->ij", gam, gam)
        - np.einsum("kil,lkj->ij", gam, gam)
    )
    if not np.all(np.isfinite(ric)):
        raise GeometryError(f"non-finite Ricci tensor at {p}")
    return 0.5 * (ric + ric.T)


# ---------------------------------------------------------------------------
# Built-in charts

_INF = float("inf")


def _metric_exprs(rows: Sequence[Sequence[str]], coords: Sequence[str], params=None):
    return tuple(tuple(parse(t, coords, params) for t in row) for row in rows)


def flat_chart(n: int, names: Optional[Sequence[str]] = None) -> Chart:
    names = tuple(names or ("x", "y", "z")[:n])
    rows = [["1" if i == j else "0" for j in range(n)] for i in range(n)]
    return Chart(
        coordinates=names,
        domain=((-_INF, _INF),) * n,
        metric=_metric_exprs(rows, names),
        exact_christoffel=lambda p: np.zeros((n, n, n)),
        name=f"flat{n}",
    )


def line_chart(name: str = "x") -> Chart:
    return flat_chart(1, (name,))


def half_plane_chart() -> Chart:
    """Upper half-plane ``(dx^2 + dy^2) / y^2``, curvature -1."""

    def exact(p):
        y = p[1]
        gam = np.zeros((2, 2, 2))
        gam[0, 0, 1] = gam[0, 1, 0] = -1.0 / y
        gam[1, 0, 0] = 1.0 / y
        gam[1, 1, 1] = -1.0 / y
        return gam

    return Chart(
        coordinates=("x", "y"),
        domain=((-_INF, _INF), (0.0, _INF)),
        metric=_metric_exprs([["1/y^2", "0"], ["0", "1/y^2"]], ("x", "y")),
        exact_christoffel=exact,
        name="half-plane",
    )


def sphere_chart(radius: float = 1.0) -> Chart:
    """Polar chart ``r^2 (dtheta^2 + sin^2(theta) dphi^2)`` of a round sphere."""
    if not radius > 0:
        raise GeometryError("radius must be positive")

    def exact(p):
        th = p[0]
        gam = np.zeros((2, 2, 2))
        gam[0, 1, 1] = -np.sin(th) * np.cos(th)
        gam[1, 0, 1] = gam[1, 1, 0] = np.cos(th) / np.sin(th)
        return gam

    r2 = {"r2": radius * radius}
    return Chart(
        coordinates=("theta", "phi"),
        domain=((0.0, np.pi), (-_INF, _INF)),
        metric=_metric_exprs([["r2", "0"], ["0", "r2*sin(theta)^2"]], ("theta", "phi"), r2),
        exact_christoffel=exact,
        name=f"sphere(r={radius:g})",
    )


def circle_chart(radius: float = 1.0, name: str = "x") -> Chart:
    """Angle coordinate on a circle of the given radius (metric ``radius^2``)."""
    if not radius > 0:
        raise GeometryError("radius must be positive")
    return Chart(
        coordinates=(name,),
        domain=((-_INF, _INF),),
        metric=((parse(repr(float(radius * radius)), (name,)),),),
        exact_christoffel=lambda p: np.zeros((1, 1, 1)),
        name=f"circle(r={radius:g})",
    )
