"""Functional-inequality checks: Bochner formula and inequality, spectral-gap
constants, concentration profiles and log-Sobolev deficits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .expr import Expression, eval_jet2, parse
from .geometry import ScalarField, _field_jet, _hessian_from, as_field, hs_norm_sq
from .spectral import default_half_width, simpson_integral, _simpson_grid
from .weighted import (
    NEG_INF,
    WeightedManifold,
    check_dimension,
    ric_n_direction,
    ric_n_form,
    weighted_laplacian,
)

__all__ = [
    "BochnerReport",
    "ConcentrationPoint",
    "LSITerms",
    "bochner_report",
    "bw_residual",
    "bochner_gap",
    "equality_residuals",
    "spectral_gap_bound",
    "sigma_composed_bound",
    "concentration_profile",
    "concentration_bound",
    "lsi_terms",
    "lsi_deficit",
    "tilt_grid",
    "lsi_sweep",
    "BOCHNER_STEP",
]

BOCHNER_STEP = 1e-3


@dataclass
class BochnerReport:
    point: np.ndarray
    N: float
    lhs: float
    rhs_N: object  # float, or NEG_INF when Ric_n(grad u) = -inf
    rhs_inf: float
    gap_N: float
    gap_inf: float
    hs_slack: float  # ||Hess u||^2 - (Delta u)^2 / n
    quad_slack: float  # N(N-n)/n (p/N + q/(N-n))^2
    p: float  # Delta_m u
    q: float  # <grad u, grad psi>

    @property
    def residual(self) -> float:
        return self.lhs - self.rhs_inf


def _bochner_core(wm: WeightedManifold, u: ScalarField, p, step: float):
    chart = wm.chart
    if not u.is_expression:
        raise ValueError("Bochner checks need u as an expression (exact inner derivatives)")
    p = chart.require_inside(np.atleast_1d(np.asarray(p, dtype=float)), 4 * step)

    def half_grad_sq(q):
        jet = u.jet(q)
        return 0.5 * float(jet.gradient @ np.linalg.solve(chart.metric_at(q), jet.gradient))

    def lap_m(q):
        return weighted_laplacian(wm, u, q)

    f1 = ScalarField(func=half_grad_sq, step=step, richardson=True, name="|grad u|^2/2")
    f2 = ScalarField(func=lap_m, step=step, richardson=True, name="Delta_m u")
    g = chart.metric_at(p)
    ginv = np.linalg.inv(g)
    _, ujet = _field_jet(chart, u, p)
    _, pjet = _field_jet(chart, wm.psi, p)
    lap_m_f1 = weighted_laplacian(wm, f1, p)
    dlap = f2.jet(p).gradient
    lhs = lap_m_f1 - float(dlap @ ginv @ ujet.gradient)
    hess_u = _hessian_from(chart, ujet, p)
    grad_u = ginv @ ujet.gradient
    return p, g, ginv, ujet, pjet, hess_u, grad_u, lhs


def bochner_report(wm: WeightedManifold, u, p, N: float = math.inf, step: float = BOCHNER_STEP) -> BochnerReport:
    """Both sides of the Bochner formula and inequality at ``p``.

    The composite fields ``|grad u|^2/2`` and ``Delta_m u`` are
    differentiated by central differences with step ``step`` and one
    Richardson refinement.
    """
    n = wm.dim
    N = check_dimension(N, n)
    u = as_field(u, wm.chart)
    p, g, ginv, ujet, pjet, hess_u, grad_u, lhs = _bochner_core(wm, u, p, step)
    ric_inf = ric_n_form(wm, p, math.inf)
    hs = hs_norm_sq(wm.chart, hess_u, p)
    rhs_inf = float(grad_u @ ric_inf @ grad_u) + hs
    lap = float(np.einsum("ij,ij->", ginv, hess_u))
    qv = float(ujet.gradient @ ginv @ pjet.gradient)
    pv = lap - qv
    hs_slack = hs - lap * lap / n
    if N == math.inf:
        ric_val = float(grad_u @ ric_inf @ grad_u)
        rhs_n = ric_val
        quad = lap * lap / n
    elif N == n:
        ric_val = ric_n_direction(wm, p, grad_u, N)
        rhs_n = NEG_INF if ric_val is NEG_INF else ric_val + pv * pv / N
        quad = 0.0
    else:
        ric_val = ric_n_direction(wm, p, grad_u, N)
        rhs_n = ric_val + pv * pv / N
        quad = N * (N - n) / n * (pv / N + qv / (N - n)) ** 2
    gap_n = math.inf if rhs_n is NEG_INF else lhs - rhs_n
    return BochnerReport(p, N, lhs, rhs_n, rhs_inf, gap_n, lhs - rhs_inf, hs_slack, quad, pv, qv)


def bw_residual(wm: WeightedManifold, u, p, step: float = BOCHNER_STEP) -> float:
    """``Delta_m(|grad u|^2/2) - <grad Delta_m u, grad u> - Ric_inf(grad u) - ||Hess u||^2``."""
    return bochner_report(wm, u, p, math.inf, step).residual


def bochner_gap(wm: WeightedManifold, u, p, N: float, step: float = BOCHNER_STEP) -> float:
    """Left side minus ``Ric_N(grad u) + (Delta_m u)^2 / N``; nonnegative in theory."""
    return bochner_report(wm, u, p, N, step).gap_N


def equality_residuals(wm: WeightedManifold, u, p, N: float) -> tuple[float, float, float]:
    """Residuals of the equality conditions at ``p``.

    Returns ``(max |Hess u - f g|, f, Delta_m u / N + <grad u, grad psi>/(N-n))``
    with ``f = tr_g Hess u / n``.
    """
    n = wm.dim
    u = as_field(u, wm.chart)
    p, ujet = _field_jet(wm.chart, u, p)
    _, pjet = _field_jet(wm.chart, wm.psi, p)
    g = wm.chart.metric_at(p)
    ginv = np.linalg.inv(g)
    hess_u = _hessian_from(wm.chart, ujet, p)
    f = float(np.einsum("ij,ij->", ginv, hess_u)) / n
    q = float(ujet.gradient @ ginv @ pjet.gradient)
    lap_m = f * n - q
    return float(np.abs(hess_u - f * g).max()), f, lap_m / N + q / (N - n)


# ---------------------------------------------------------------------------
# Spectral-gap constants

def spectral_gap_bound(K: float, N: float) -> float:
    """``K N / (N - 1)``, or ``K`` for ``N = inf``."""
    K, N = float(K), float(N)
    if not K > 0:
        raise ValueError(f"K must be positive, got {K}")
    if N == math.inf:
        return K
    if math.isnan(N) or 0 <= N <= 1:
        raise ValueError(f"no spectral-gap constant for N={N}")
    return K * N / (N - 1)


def sigma_composed_bound(K: float, N: float) -> tuple[float, float]:
    """Curvature threshold ``K(2-N)/(1-N)`` of the base and the gap it implies.

    The implied gap, ``spectral_gap_bound(threshold, N - 1)``, equals ``K``
    and beats ``K N / (N - 1)``.
    """
    K, N = float(K), float(N)
    if not K > 0 or not N < -1:
        raise ValueError(f"needs K > 0 and N < -1, got K={K}, N={N}")
    threshold = K * (2 - N) / (1 - N)
    composed = spectral_gap_bound(threshold, N - 1)
    if not composed > spectral_gap_bound(K, N):
        raise ArithmeticError("composed bound does not improve on K N/(N-1)")
    return threshold, composed


# ---------------------------------------------------------------------------
# Concentration

@dataclass(frozen=True)
class ConcentrationPoint:
    r: float
    half_line_alpha: float
    bound: float

    @property
    def exceeds(self) -> bool:
        return self.half_line_alpha > self.bound


def concentration_bound(K: float, N: float, r: float) -> float:
    return math.exp(-math.sqrt(spectral_gap_bound(K, N)) * r / 3)


class _LineMeasure:
    """Normalised measure on ``[-L, L]`` with Simpson sub-integrals."""

    def __init__(self, wm: WeightedManifold, L: float, h: float):
        self.wm = wm
        self.L = L
        self.h = h
        self.total = self.mass(-L, L, normalized=False)
        if not (self.total > 0 and math.isfinite(self.total)):
            raise ValueError("measure cannot be normalised")

    def mass(self, a: float, b: float, normalized: bool = True) -> float:
        a, b = max(a, -self.L), min(b, self.L)
        if b <= a:
            return 0.0
        x = _simpson_grid(a, b, self.h)
        val = simpson_integral(self.wm.density_values(x), x)
        return val / self.total if normalized else val

    def median(self) -> float:
        return brentq(lambda t: self.mass(-self.L, t) - 0.5, -self.L, self.L, xtol=1e-13)


def concentration_profile(
    wm: WeightedManifold,
    r_values: Sequence[float],
    L: Optional[float] = None,
    h: float = 1e-3,
) -> list[ConcentrationPoint]:
    """Half-line lower estimates of the concentration function.

    Only sets ``A`` of the form ``(-inf, a]`` or ``[a, inf)`` with
    ``m(A) >= 1/2`` are scanned, so the values are lower estimates of the
    true supremum; the supremum over each family is attained at the median.
    The bound needs ``K`` and ``N`` labels on ``wm``.
    """
    if wm.dim != 1:
        raise ValueError("concentration_profile is implemented on the line")
    K, N = wm.params.get("K"), wm.params.get("N")
    if K is None or N is None:
        raise ValueError("K and N labels are required for the bound")
    L = default_half_width(wm) if L is None else float(L)
    meas = _LineMeasure(wm, L, h)
    med = meas.median()
    out = []
    for r in r_values:
        r = float(r)
        if r < 0:
            raise ValueError("r must be nonnegative")
        if r == 0:
            alpha = 0.5
        else:
            alpha = max(meas.mass(med + r, L), meas.mass(-L, med - r))
        alpha = min(1.0, max(0.0, alpha))
        out.append(ConcentrationPoint(r, alpha, concentration_bound(K, N, r)))
    return out


# ---------------------------------------------------------------------------
# Log-Sobolev

@dataclass
class LSITerms:
    entropy: float
    fisher: float
    constant: float
    normalization: float

    @property
    def deficit(self) -> float:
        return self.entropy - self.constant * self.fisher


def _lsi_constant(K: float, N: float) -> float:
    if N == math.inf:
        return 1.0 / (2 * K)
    return (N - 1) / (2 * K * N)


def lsi_terms(
    wm: WeightedManifold,
    f,
    K: float,
    N: float,
    L: Optional[float] = None,
    h: float = 2e-3,
    tol: float = 1e-12,
) -> LSITerms:
    """Entropy and Fisher information of ``f`` against the normalised measure.

    ``f`` is renormalised to unit mass on the truncated grid; the factor is
    reported as ``normalization``.
    """
    if wm.dim != 1:
        raise ValueError("lsi_terms is implemented on the line")
    K = float(K)
    if not K > 0:
        raise ValueError("K must be positive")
    f = as_field(f, wm.chart)
    if not f.is_expression:
        raise ValueError("f must be an expression")
    L = default_half_width(wm) if L is None else float(L)
    x = _simpson_grid(-L, L, h)
    dens = wm.density_values(x)
    dens = dens / simpson_integral(dens, x)
    jet = eval_jet2(f.expr, x)
    fv, df = np.asarray(jet.value), np.asarray(jet.gradient)[:, 0]
    if np.any(fv < -tol * np.abs(fv).max()):
        raise ValueError("f is negative on the grid")
    c = simpson_integral(fv * dens, x)
    if not c > 0:
        raise ValueError("f has zero mass")
    fv, df = fv / c, df / c
    pos = fv > 0
    flogf = np.zeros_like(fv)
    flogf[pos] = fv[pos] * np.log(fv[pos])
    fisher_density = np.zeros_like(fv)
    fisher_density[pos] = df[pos] ** 2 / fv[pos]
    ent = simpson_integral(flogf * dens, x)
    fis = simpson_integral(fisher_density * dens, x)
    return LSITerms(ent, fis, _lsi_constant(K, float(N)), c)


def lsi_deficit(wm: WeightedManifold, f, K: float, N: float, L: Optional[float] = None,
                h: float = 2e-3) -> float:
    """``int f log f dm - C int |f'|^2/f dm``; positive means the LSI fails."""
    return lsi_terms(wm, f, K, N, L, h).deficit


def tilt_grid(beta_max: float, count: int = 64) -> np.ndarray:
    """``count`` points evenly spaced strictly inside ``(0, beta_max)``."""
    return beta_max * np.arange(1, count + 1) / (count + 1)


def lsi_sweep(
    wm: WeightedManifold,
    K: float,
    N: float,
    betas: Sequence[float],
    L: Optional[float] = None,
    h: float = 2e-3,
) -> list[tuple[float, float]]:
    """Deficits of the tilted family ``exp(beta x)``."""
    (name,) = wm.chart.coordinates
    out = []
    for b in betas:
        f = parse(f"exp({float(b)!r}*{name})", wm.chart.coordinates)
        out.append((float(b), lsi_deficit(wm, f, K, N, L, h)))
    return out
