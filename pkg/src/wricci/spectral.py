"""Finite-volume discretisation of -Delta_m on a weighted line.

The self-adjoint form ``-(w u')' = lam w u`` with ``w = exp(-psi)`` is
discretised on a uniform grid of ``[-L, L]`` with face weights at midpoints,
a lumped (diagonal) mass matrix and zero-flux ends.  Fluxes are applied as
differences, so constants lie exactly in the kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import simpson
from scipy.linalg import eigh_tridiagonal
from scipy.sparse import diags

from .geometry import ScalarField, as_field
from .weighted import WeightedManifold

__all__ = [
    "Grid1D",
    "DiscreteOperator",
    "SpectralResult",
    "FirstEigen",
    "L2Diagnostic",
    "SpectralError",
    "discretize",
    "eigen_smallest",
    "sturm_count",
    "first_nonzero_eigenvalue",
    "default_half_width",
    "l2_membership_diagnostic",
    "truncation_trajectory",
    "simpson_integral",
    "DEFAULT_NODES",
    "DIVERGENCE_DELTA",
]

DEFAULT_NODES = 4001
DIVERGENCE_DELTA = 0.05
TAIL_FRACTION = 1e-10


class SpectralError(RuntimeError):
    pass


@dataclass(frozen=True)
class Grid1D:
    half_width: float
    nodes: int

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError("half-width must be positive")
        if self.nodes < 3 or self.nodes % 2 == 0:
            raise ValueError(f"node count must be odd and >= 3, got {self.nodes}")

    @property
    def h(self) -> float:
        return 2 * self.half_width / (self.nodes - 1)

    @property
    def x(self) -> np.ndarray:
        return -self.half_width + self.h * np.arange(self.nodes)

    @property
    def midpoints(self) -> np.ndarray:
        x = self.x
        return 0.5 * (x[1:] + x[:-1])

    def refined(self) -> "Grid1D":
        return Grid1D(self.half_width, 2 * self.nodes - 1)


@dataclass(frozen=True)
class DiscreteOperator:
    """Stiffness ``A`` (tridiagonal, via face conductances) and lumped mass ``B``."""

    conductance: np.ndarray  # w_{i+1/2} / h, one per face
    mass: np.ndarray  # diagonal of B
    grid: Grid1D
    boundary: str = "reflecting"

    @property
    def diagonal(self) -> np.ndarray:
        d = np.zeros(self.grid.nodes)
        d[:-1] += self.conductance
        d[1:] += self.conductance
        return d

    @property
    def offdiagonal(self) -> np.ndarray:
        return -self.conductance

    def apply(self, u: np.ndarray) -> np.ndarray:
        """``A u`` in flux form, so that ``A 1 = 0`` exactly."""
        flux = self.conductance * (u[1:] - u[:-1])
        out = np.zeros_like(u, dtype=float)
        out[:-1] -= flux
        out[1:] += flux
        return out

    def energy(self, u: np.ndarray, v: np.ndarray) -> float:
        """``sum_f c_f (du)_f (dv)_f``, the discrete Dirichlet form."""
        return float(np.sum(self.conductance * np.diff(u) * np.diff(v)))

    def stiffness_matrix(self):
        return diags([self.offdiagonal, self.diagonal, self.offdiagonal], [-1, 0, 1], format="csr")

    def mass_matrix(self):
        return diags(self.mass, 0, format="csr")

    def total_mass(self) -> float:
        return float(self.mass.sum())


def discretize(wm: WeightedManifold, L: float, M: int) -> DiscreteOperator:
    """Assemble the operator on ``M`` nodes of ``[-L, L]``."""
    if wm.dim != 1:
        raise ValueError("discretize needs a 1-dimensional weighted manifold")
    grid = Grid1D(float(L), int(M))
    _check_euclidean(wm, grid)
    x = grid.x
    psi_nodes = wm.psi.values(x)
    psi_mid = wm.psi.values(grid.midpoints)
    if not (np.all(np.isfinite(psi_nodes)) and np.all(np.isfinite(psi_mid))):
        raise SpectralError("weight is not finite on the grid")
    with np.errstate(under="ignore", over="ignore"):
        w_nodes = np.exp(-psi_nodes)
        w_mid = np.exp(-psi_mid)
    if not np.any(w_nodes > 0) or not np.all(np.isfinite(w_nodes)) or not np.all(np.isfinite(w_mid)):
        raise SpectralError("density underflows or overflows on the whole grid")
    h = grid.h
    mass = h * w_nodes
    mass[0] *= 0.5
    mass[-1] *= 0.5
    if np.any(mass <= 0):
        raise SpectralError("density underflows to zero at some nodes; shrink L")
    return DiscreteOperator(w_mid / h, mass, grid)


def _check_euclidean(wm: WeightedManifold, grid: Grid1D) -> None:
    probe = np.array([grid.x[0], 0.0, grid.x[-1]])
    lo, hi = wm.chart.domain[0]
    if not (lo < probe[0] and probe[-1] < hi):
        raise ValueError(f"grid [-{grid.half_width}, {grid.half_width}] leaves the chart domain")
    g = [wm.chart.metric_at([q])[0, 0] for q in probe]
    if not np.allclose(g, 1.0, rtol=0, atol=1e-14):
        raise ValueError("discretize expects the Euclidean metric on the line")


@dataclass
class SpectralResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, B-orthonormal
    residuals: np.ndarray  # ||A v - lam B v|| / ||B v||
    grid: Grid1D
    extrapolated_lambda1: Optional[float] = None
    fine_lambda1: Optional[float] = None


def sturm_count(diag: np.ndarray, off: np.ndarray, shift: float) -> int:
    """Number of eigenvalues of a symmetric tridiagonal matrix below ``shift``."""
    tiny = float(np.finfo(float).tiny)
    off2 = (np.asarray(off, dtype=float) ** 2).tolist() + [0.0]
    count = 0
    q = 1.0
    prev = 0.0
    for d, e2 in zip(np.asarray(diag, dtype=float).tolist(), off2):
        q = d - shift - prev / q
        if q == 0.0:
            q = -tiny
        if q < 0:
            count += 1
        prev = e2
    return count


def _symmetric_tridiagonal(op: DiscreteOperator) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    s = 1.0 / np.sqrt(op.mass)
    d = op.diagonal * s * s
    e = op.offdiagonal * s[:-1] * s[1:]
    return d, e, s


def eigen_smallest(op: DiscreteOperator, k: int = 2) -> SpectralResult:
    """The ``k`` smallest generalised eigenpairs of ``(A, B)``.

    ``B^{-1/2} A B^{-1/2}`` is symmetric tridiagonal; its lowest eigenvalues
    come from LAPACK bisection with inverse iteration (``stebz``/``stein``),
    and the index of each eigenvalue is confirmed with an independent Sturm
    count.
    """
    M = op.grid.nodes
    if not 1 <= k <= M:
        raise ValueError(f"k must be in [1, {M}]")
    d, e, s = _symmetric_tridiagonal(op)
    try:
        lam, w = eigh_tridiagonal(d, e, select="i", select_range=(0, k - 1), lapack_driver="stebz")
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"tridiagonal eigensolver failed: {exc}") from exc
    if len(lam) < k:
        raise SpectralError(f"only {len(lam)} of {k} eigenpairs converged")
    # every computed eigenvalue must sit at its claimed index
    for i, li in enumerate(lam):
        gap = 1e-9 * max(1.0, abs(li))
        if sturm_count(d, e, li - gap) > i or sturm_count(d, e, li + gap) < i + 1:
            raise SpectralError(f"Sturm count disagrees with eigenvalue index {i}")
    vecs = w * s[:, None]
    norms = np.sqrt(np.einsum("ij,i,ij->j", vecs, op.mass, vecs))
    vecs = vecs / norms
    res = np.empty(k)
    for j in range(k):
        v = vecs[:, j]
        bv = op.mass * v
        res[j] = np.linalg.norm(op.apply(v) - lam[j] * bv) / np.linalg.norm(bv)
    return SpectralResult(lam, vecs, res, op.grid)


def richardson(coarse: float, fine: float, order: int = 2) -> float:
    f = 2 ** order
    return (f * fine - coarse) / (f - 1)


def default_half_width(wm: WeightedManifold, tail: float = TAIL_FRACTION, start: float = 4.0,
                       limit: float = 400.0) -> float:
    """Smallest ``L`` whose discarded tail mass is below ``tail`` of the total."""
    R = start
    while True:
        x = np.linspace(-R, R, 4001)
        dens = wm.density_values(x)
        peak = dens.max()
        if dens[0] < 1e-3 * tail * peak and dens[-1] < 1e-3 * tail * peak:
            break
        R *= 2
        if R > limit:
            raise SpectralError("density does not decay; no finite truncation captures the mass")
    from scipy.integrate import cumulative_trapezoid

    left = cumulative_trapezoid(dens, x, initial=0.0)
    total = left[-1]
    right = total - left
    mid = len(x) // 2
    outside = left[: mid + 1][::-1] + right[mid:]  # mass outside [-|x|, |x|], x >= 0
    ok = np.nonzero(outside < tail * total)[0]
    idx = ok[0] if len(ok) else len(outside) - 1
    return float(max(x[mid + idx], 1.0))


@dataclass
class FirstEigen:
    lambda1: float
    x: np.ndarray
    eigenfunction: np.ndarray
    bound: Optional[float]
    margin: Optional[float]
    result: SpectralResult
    flags: list = field(default_factory=list)

    @property
    def extrapolated(self) -> Optional[float]:
        return self.result.extrapolated_lambda1


def _sign_normalize(v: np.ndarray) -> np.ndarray:
    a = np.abs(v)
    top = a.max()
    # near-ties (odd eigenfunctions) resolve to the rightmost candidate
    idx = np.nonzero(a >= top * (1 - 1e-8))[0][-1]
    return v if v[idx] > 0 else -v


def first_nonzero_eigenvalue(
    wm: WeightedManifold,
    L: Optional[float] = None,
    M: int = DEFAULT_NODES,
    extrapolate: bool = True,
) -> FirstEigen:
    """First nonzero eigenvalue of ``-Delta_m`` on the truncated line.

    The constant mode is discarded.  When ``K`` and ``N`` labels are present
    the margin ``lam_1 - K N / (N - 1)`` is reported.  Spaces that fail a
    finite-volume test are flagged, since the gap bound then makes no claim.
    """
    from .analysis import spectral_gap_bound

    flags = []
    if wm.extras.get("infinite_volume") or not _finite_volume(wm):
        flags.append("infinite volume: no finite-volume spectral-gap claim")
    if L is None:
        L = default_half_width(wm) if not flags else 20.0
    op = discretize(wm, L, M)
    res = eigen_smallest(op, 2)
    if abs(res.eigenvalues[0]) > 1e-10:
        flags.append(f"lowest eigenvalue {res.eigenvalues[0]:.3e} is not the constant mode")
    if extrapolate:
        fine = eigen_smallest(discretize(wm, L, 2 * M - 1), 2).eigenvalues[1]
        res.fine_lambda1 = float(fine)
        res.extrapolated_lambda1 = float(richardson(res.eigenvalues[1], fine))
    lam1 = float(res.eigenvalues[1])
    vec = _sign_normalize(res.eigenvectors[:, 1])
    bound = margin = None
    K, N = wm.params.get("K"), wm.params.get("N")
    if K is not None and N is not None and not flags:
        try:
            bound = spectral_gap_bound(K, N)
            margin = lam1 - bound
        except ValueError:
            pass
    return FirstEigen(lam1, op.grid.x, vec, bound, margin, res, flags)


def truncation_trajectory(wm: WeightedManifold, L_values: Sequence[float], h: float = 0.02) -> list[tuple[float, float]]:
    """``(L, lambda_1)`` for growing truncations at a fixed spacing ``h``.

    Only the trajectory is reported; no limit is inferred from it.
    """
    out = []
    for L in L_values:
        M = int(round(2 * float(L) / h)) + 1
        M += 1 - M % 2
        out.append((float(L), float(eigen_smallest(discretize(wm, float(L), M), 2).eigenvalues[1])))
    return out


def _finite_volume(wm: WeightedManifold) -> bool:
    one = ScalarField(func=lambda p: 1.0)
    diag = l2_membership_diagnostic(wm, one, (10.0, 20.0, 40.0, 80.0), vectorized_one=True)
    return diag.classification == "convergent"


# ---------------------------------------------------------------------------
# Quadrature and L^2 membership

def simpson_integral(f_values: np.ndarray, x: np.ndarray) -> float:
    return float(simpson(f_values, x=x))


def _simpson_grid(a: float, b: float, h_target: float) -> np.ndarray:
    n = max(2, int(math.ceil((b - a) / h_target)))
    if n % 2:
        n += 1
    return np.linspace(a, b, n + 1)


@dataclass
class L2Diagnostic:
    schedule: tuple
    partial_norms: list
    ratios: list
    classification: str


def l2_membership_diagnostic(
    wm: WeightedManifold,
    u,
    L_schedule: Sequence[float] = (10.0, 20.0, 40.0, 80.0),
    h: float = 0.005,
    delta: float = DIVERGENCE_DELTA,
    vectorized_one: bool = False,
) -> L2Diagnostic:
    """Classify ``int u^2 dm`` as convergent or divergent from partial integrals.

    ``I(L)`` is computed by composite Simpson on ``[-L, L]``.  Divergent when
    the last ratio ``I(L_k)/I(L_{k-1})`` exceeds ``1 + delta`` or the
    increments fail to shrink.
    """
    sched = tuple(float(L) for L in L_schedule)
    if len(sched) < 3 or any(b <= a for a, b in zip(sched, sched[1:])):
        raise ValueError("schedule must be increasing with at least three entries")
    if not vectorized_one:
        u = as_field(u, wm.chart)
    norms = []
    for L in sched:
        x = _simpson_grid(-L, L, h)
        uu = np.ones_like(x) if vectorized_one else u.values(x)
        with np.errstate(over="ignore", invalid="ignore"):
            integrand = uu * uu * wm.density_values(x)
        val = simpson_integral(integrand, x)
        if not math.isfinite(val):
            raise SpectralError(f"non-finite quadrature at L={L}")
        norms.append(val)
    ratios = [b / a if a > 0 else math.inf for a, b in zip(norms, norms[1:])]
    incs = [b - a for a, b in zip(norms, norms[1:])]
    shrinking = incs[-1] <= incs[-2] or incs[-1] <= 1e-12 * norms[-1]
    convergent = ratios[-1] <= 1 + delta and shrinking
    return L2Diagnostic(sched, norms, ratios, "convergent" if convergent else "divergent")
