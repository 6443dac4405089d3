import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from wricci.spectral import (
    Grid1D,
    SpectralError,
    default_half_width,
    discretize,
    eigen_smallest,
    first_nonzero_eigenvalue,
    l2_membership_diagnostic,
    richardson,
    simpson_integral,
    sturm_count,
    truncation_trajectory,
)
from wricci.weighted import custom_line, model_space

M1 = model_space("m1", K=1, N=-2)


def test_grid_validation():
    g = Grid1D(2.0, 5)
    np.testing.assert_allclose(g.x, [-2, -1, 0, 1, 2])
    assert g.refined().nodes == 9
    for bad in (4, 1):
        with pytest.raises(ValueError):
            Grid1D(1.0, bad)
    with pytest.raises(ValueError):
        Grid1D(0.0, 5)


def test_constant_is_in_kernel_exactly():
    op = discretize(M1, 20.0, 801)
    assert np.all(op.apply(np.ones(801)) == 0.0)
    # the assembled matrix only cancels to rounding
    assert np.abs(op.stiffness_matrix() @ np.ones(801)).max() <= 1e-14 * op.diagonal.max()


def test_lumped_mass_has_half_end_weights():
    op = discretize(model_space("gauss", K=1), 3.0, 7)
    h = op.grid.h
    dens = np.exp(-op.grid.x**2 / 2)
    np.testing.assert_allclose(op.mass, h * dens * np.r_[0.5, np.ones(5), 0.5])


def test_against_dense_generalized_solver():
    op = discretize(M1, 10.0, 201)
    res = eigen_smallest(op, 4)
    A = op.stiffness_matrix().toarray()
    B = np.diag(op.mass)
    ref = scipy.linalg.eigh(A, B, eigvals_only=True)[:4]
    np.testing.assert_allclose(res.eigenvalues, ref, atol=1e-10)
    gram = res.eigenvectors.T @ B @ res.eigenvectors
    np.testing.assert_allclose(gram, np.eye(4), atol=1e-10)
    assert res.residuals.max() < 1e-9


def test_sturm_count_brackets_eigenvalues():
    d = np.array([2.0, 2.0, 2.0, 2.0])
    e = np.array([-1.0, -1.0, -1.0])
    lam = np.linalg.eigvalsh(np.diag(d) + np.diag(e, 1) + np.diag(e, -1))
    for i, li in enumerate(lam):
        assert sturm_count(d, e, li - 1e-9) == i
        assert sturm_count(d, e, li + 1e-9) == i + 1


def test_richardson():
    assert richardson(1.0 + 4e-4, 1.0 + 1e-4) == pytest.approx(1.0)


def test_second_order_convergence():
    e1 = eigen_smallest(discretize(M1, 30.0, 1001)).eigenvalues[1] - 2 / 3
    e2 = eigen_smallest(discretize(M1, 30.0, 2001)).eigenvalues[1] - 2 / 3
    assert 3.5 < e1 / e2 < 4.5


def test_sharp_eigenvalue_on_m1():
    r = first_nonzero_eigenvalue(M1, L=30, M=4001)
    assert r.lambda1 == pytest.approx(2 / 3, abs=1e-3)
    assert r.extrapolated == pytest.approx(2 / 3, abs=1e-5)
    assert r.bound == pytest.approx(2 / 3)
    assert not r.flags
    assert r.result.eigenvalues[0] == pytest.approx(0.0, abs=1e-10)
    # odd eigenfunction, positive on the right after sign normalisation
    assert r.eigenfunction[-1] > 0
    np.testing.assert_allclose(r.eigenfunction, -r.eigenfunction[::-1], atol=1e-8)


def test_default_half_width():
    assert default_half_width(M1) == pytest.approx(14.0, abs=0.5)
    assert 5.5 < default_half_width(model_space("gauss", K=1)) < 7.5


def test_infinite_volume_is_flagged():
    r = first_nonzero_eigenvalue(custom_line("sqrt(3)*x"), M=401)
    assert any("infinite volume" in f for f in r.flags)
    assert r.bound is None and r.margin is None
    r2 = first_nonzero_eigenvalue(model_space("m2", K=1, N=-2), M=401)
    assert r2.flags and r2.bound is None


def test_rejects_non_euclidean_or_bad_weight():
    with pytest.raises(ValueError):
        discretize(model_space("circle", radius=2.0), 5.0, 11)
    with pytest.raises(ValueError):
        discretize(model_space("hyperbolic", N=-2), 5.0, 11)
    with pytest.raises(SpectralError):
        discretize(custom_line("-x^2*1000"), 5.0, 11)


def test_l2_dichotomy():
    for N, want in ((-2.0, "convergent"), (-0.5, "divergent"), (-5.0, "convergent")):
        wm = model_space("m1", K=1, N=N)
        d = l2_membership_diagnostic(wm, wm.extras["eigenfunction"])
        assert d.classification == want
        assert len(d.ratios) == 3


def test_simpson_exact_for_cubics():
    x = np.linspace(-1, 2, 7)
    assert simpson_integral(x**3 - x, x) == pytest.approx(2.25)


# ---------------------------------------------------------------------------
# properties

@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_discrete_green_identity(seed):
    rng = np.random.default_rng(seed)
    op = discretize(M1, 15.0, 301)
    u, v = rng.normal(size=(2, 301))
    terms = op.conductance * np.diff(u) * np.diff(v)
    assert abs(u @ op.apply(v) - terms.sum()) <= 1e-13 * np.abs(terms).sum()
    assert u @ op.apply(v) == pytest.approx(v @ op.apply(u), rel=1e-12, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.25, 4.0))
def test_eigenvalue_scales_with_K(c):
    # M1(cK, N) is M1(K, N) with x scaled by sqrt(c); the discrete problem scales exactly
    base = eigen_smallest(discretize(model_space("m1", K=1, N=-2), 16.0, 801)).eigenvalues[1]
    scaled = eigen_smallest(discretize(model_space("m1", K=c, N=-2), 16.0 / math.sqrt(c), 801)).eigenvalues[1]
    assert scaled == pytest.approx(c * base, rel=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.3, 3.0), st.floats(-6, -1.1))
def test_gap_bound_holds_on_m1(K, N):
    r = first_nonzero_eigenvalue(model_space("m1", K=K, N=N), M=1601, extrapolate=False)
    assert r.margin >= -5e-3


def test_unweighted_stencil():
    op = discretize(custom_line("0"), math.pi, 5)
    h = op.grid.h
    np.testing.assert_allclose(op.diagonal[1:-1], 2 / h)
    np.testing.assert_allclose(op.offdiagonal, -1 / h)
    np.testing.assert_allclose(op.mass, h * np.array([0.5, 1, 1, 1, 0.5]))


def test_neumann_spectrum_of_flat_interval():
    lam = eigen_smallest(discretize(custom_line("0"), math.pi, 2001), 3).eigenvalues
    np.testing.assert_allclose(lam, [0.0, 0.25, 1.0], atol=1e-5)


def test_total_mass_matches_quadrature_oracle():
    op = discretize(M1, 20.0, 4001)
    assert op.total_mass() == pytest.approx(2.7206990463513181, rel=1e-9)


def test_truncation_insensitivity():
    # matched spacing h = 0.02
    l30 = eigen_smallest(discretize(M1, 30.0, 3001)).eigenvalues[1]
    l40 = eigen_smallest(discretize(M1, 40.0, 4001)).eigenvalues[1]
    assert abs(l30 - l40) <= 1e-6


@pytest.mark.parametrize("N", [-1.0, -0.5])
def test_trajectory_above_bound_when_candidate_not_square_integrable(N):
    wm = model_space("m1", K=1, N=N)
    traj = truncation_trajectory(wm, [10, 20, 40, 80])
    assert all(lam > N / (N - 1) for _, lam in traj)
    assert l2_membership_diagnostic(wm, wm.extras["eigenfunction"]).classification == "divergent"
