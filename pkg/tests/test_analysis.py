import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wricci.analysis import (
    bochner_report,
    bw_residual,
    concentration_bound,
    concentration_profile,
    equality_residuals,
    lsi_deficit,
    lsi_sweep,
    lsi_terms,
    sigma_composed_bound,
    spectral_gap_bound,
    tilt_grid,
)
from wricci.geometry import ScalarField
from wricci.weighted import model_space, warped_product

M1 = model_space("m1", K=1, N=-2)

# half-line tails m([r, inf)) of M1(1,-2), independent high-precision quadrature
ALPHA_ORACLE = {
    0.5: 0.32354473272172976,
    1.0: 0.1841487656008464,
    2.0: 0.044831771821870146,
    4.0: 0.0016341687621737724,
    8.0: 1.6293407666236194e-6,
}


def test_spectral_gap_bound():
    assert spectral_gap_bound(1, -2) == pytest.approx(2 / 3)
    assert spectral_gap_bound(2, math.inf) == 2
    assert spectral_gap_bound(1, 2) == pytest.approx(2.0)
    for K, N in ((1, 0.0), (1, 0.5), (1, 1.0), (0, -2), (-1, -2)):
        with pytest.raises(ValueError):
            spectral_gap_bound(K, N)


def test_bound_decreases_towards_N_minus_one():
    vals = [spectral_gap_bound(1.0, N) for N in (-100, -10, -3, -2, -1.5, -1.01)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_sigma_composed_bound():
    threshold, composed = sigma_composed_bound(1.0, -2.0)
    assert threshold == pytest.approx(4 / 3)
    assert composed == pytest.approx(1.0)
    with pytest.raises(ValueError):
        sigma_composed_bound(1.0, -0.5)


def test_concentration_matches_quadrature_oracle():
    prof = concentration_profile(M1, [0.0, *ALPHA_ORACLE])
    assert prof[0].half_line_alpha == 0.5
    for pt in prof[1:]:
        assert pt.half_line_alpha == pytest.approx(ALPHA_ORACLE[pt.r], abs=1e-8)
        assert not pt.exceeds
        assert pt.bound == pytest.approx(concentration_bound(1, -2, pt.r))
    alphas = [p.half_line_alpha for p in prof]
    assert all(a >= b for a, b in zip(alphas, alphas[1:]))


@pytest.mark.parametrize("K, N", [(1.0, -5.0), (2.0, -2.0), (0.5, -1.2)])
def test_concentration_below_bound(K, N):
    prof = concentration_profile(model_space("m1", K=K, N=N), [0.5, 1, 2, 4, 8])
    assert all(not p.exceeds for p in prof)


def test_concentration_needs_labels():
    with pytest.raises(ValueError):
        concentration_profile(model_space("circle"), [1.0])


def test_tilt_grid():
    g = tilt_grid(1.3)
    assert len(g) == 64
    assert 0 < g[0] and g[-1] < 1.3
    np.testing.assert_allclose(np.diff(g), 1.3 / 65)


def test_gaussian_lsi_is_sharp_for_exponentials():
    # f = e^{beta x}: entropy beta^2/2, Fisher beta^2, constant 1/2
    g = model_space("gauss", K=1)
    t = lsi_terms(g, "exp(0.8*x)", 1.0, math.inf, L=12.0)
    assert t.entropy == pytest.approx(0.32, rel=1e-8)
    assert t.fisher == pytest.approx(0.64, rel=1e-8)
    assert max(d for _, d in lsi_sweep(g, 1.0, math.inf, tilt_grid(2.0), L=12.0)) <= 1e-6


def test_m1_lsi_deficit_oracle():
    assert lsi_deficit(M1, "exp(0.5*x)", 1.0, -2.0, L=30.0) == pytest.approx(0.0012713530194093637, abs=1e-7)


def test_m1_lsi_fails_for_some_tilt():
    sweep = lsi_sweep(M1, 1.0, -2.0, tilt_grid(M1.extras["decay_rate"]), L=30.0)
    assert max(d for _, d in sweep) > 0


def test_lsi_rejects_negative_functions():
    with pytest.raises(ValueError):
        lsi_terms(M1, "x", 1.0, -2.0, L=5.0)


# ---------------------------------------------------------------------------
# Bochner

@pytest.mark.parametrize(
    "wm, u, p",
    [
        (M1, "x^3", [0.4]),
        (model_space("gauss", K=2), "sin(x)", [1.1]),
        (model_space("hyperbolic", N=-2), "x^2+y", [0.3, 1.2]),
        (model_space("sphere", radius=1.5), "sin(theta)*cos(phi)", [1.0, 0.4]),
        (model_space("flat-product", dim=3, slope=0.5), "x*y+z^2", [0.1, 0.2, -0.3]),
        (warped_product(model_space("circle"), 1.0, -2.0), "t*x", [0.5, 0.7]),
    ],
)
def test_bochner_identity_and_decomposition(wm, u, p):
    assert abs(bw_residual(wm, u, p)) <= 1e-6
    for N in (-5.0, -1.2, math.inf):
        r = bochner_report(wm, u, p, N)
        assert r.gap_N >= -1e-6
        assert r.gap_N == pytest.approx(r.hs_slack + r.quad_slack + r.residual, abs=1e-9)
        assert r.hs_slack >= -1e-12 and r.quad_slack >= 0


def test_bochner_equality_for_eigenfunction():
    u = M1.extras["eigenfunction"]
    for x in (-2.0, 0.0, 0.3, 2.5):
        assert abs(bochner_report(M1, u, [x], -2.0).gap_N) <= 1e-6
        dev, f, eq = equality_residuals(M1, u, [x], -2.0)
        assert dev <= 1e-12
        assert f == pytest.approx(u([x]) / 3, abs=1e-12)
        assert abs(eq) <= 1e-12


def test_bochner_N_equals_n_on_unweighted_sphere():
    sphere = model_space("sphere")
    r = bochner_report(sphere, "cos(theta)", [1.0, 0.0], 2.0)
    # cos(theta) attains equality on the unit sphere
    assert abs(r.gap_N) <= 1e-6


def test_bochner_needs_expression():
    with pytest.raises(ValueError):
        bochner_report(M1, ScalarField(func=lambda p: float(p[0] ** 2)), [0.0])


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=4, max_size=4), st.floats(-2, 2), st.floats(-8, -1.05))
def test_bochner_inequality_random_polynomials(c, x, N):
    u = f"({c[0]!r})*x+({c[1]!r})*x^2+({c[2]!r})*x^3+({c[3]!r})*sin(x)"
    r = bochner_report(M1, u, [x], N)
    assert abs(r.residual) <= 1e-4
    assert r.gap_N >= -1e-4
