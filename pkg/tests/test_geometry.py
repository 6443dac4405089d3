import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wricci.expr import parse
from wricci.geometry import (
    Chart,
    GeometryError,
    ScalarField,
    christoffel,
    christoffel_derivative,
    flat_chart,
    gradient,
    half_plane_chart,
    hessian,
    hs_norm_sq,
    laplace_beltrami,
    ricci_tensor,
    sphere_chart,
)
from wricci.geometry import _metric_exprs

XY = ("x", "y")
R2 = ((-math.inf, math.inf),) * 2


def expr_chart(rows, params=None):
    return Chart(XY, R2, metric=_metric_exprs(rows, XY, params))


def test_half_plane_christoffel_values():
    gam = christoffel(half_plane_chart(), [1.0, 2.0])
    expected = np.zeros((2, 2, 2))
    expected[0, 0, 1] = expected[0, 1, 0] = -0.5
    expected[1, 0, 0] = 0.5
    expected[1, 1, 1] = -0.5
    np.testing.assert_allclose(gam, expected, atol=1e-15)


@pytest.mark.parametrize("chart, p", [(half_plane_chart(), [0.3, 0.7]), (sphere_chart(2.0), [1.1, 0.4])])
def test_generic_christoffel_matches_closed_form(chart, p):
    np.testing.assert_allclose(christoffel(chart, p), chart.exact_christoffel(np.asarray(p)), atol=1e-13)


def test_christoffel_symmetric_in_lower_indices():
    chart = expr_chart([["1+x^2", "x*y/3"], ["x*y/3", "2+sin(y)"]])
    gam = christoffel(chart, [0.4, -0.8])
    np.testing.assert_array_equal(gam, np.swapaxes(gam, 1, 2))


def test_christoffel_derivative_exact_matches_fd():
    chart = expr_chart([["1+x^2", "x*y/3"], ["x*y/3", "2+sin(y)"]])
    func_chart = Chart(XY, R2, metric_func=chart.metric_at)
    p = [0.4, -0.8]
    np.testing.assert_allclose(christoffel_derivative(chart, p), christoffel_derivative(func_chart, p),
                               atol=1e-7)


def test_half_plane_ricci_is_minus_metric():
    chart = half_plane_chart()
    for p in ([0.0, 1.0], [2.0, 0.5], [-1.0, 3.0]):
        np.testing.assert_allclose(ricci_tensor(chart, p), -chart.metric_at(p), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("r", [1.0, 2.5])
def test_sphere_ricci(r):
    chart = sphere_chart(r)
    p = [0.9, 0.2]
    np.testing.assert_allclose(ricci_tensor(chart, p), chart.metric_at(p) / r**2, atol=1e-12)


def test_ricci_of_exponential_metric():
    # dx^2 + e^{2x} dy^2 has Ric = -g (oracle: symbolic computation)
    chart = expr_chart([["1", "0"], ["0", "exp(2*x)"]])
    p = [0.4, -0.2]
    np.testing.assert_allclose(ricci_tensor(chart, p), -chart.metric_at(p), atol=1e-12)


def test_ricci_callable_metric_matches_expression_metric():
    chart = expr_chart([["1", "0"], ["0", "exp(2*x)"]])
    func_chart = Chart(XY, R2, metric_func=chart.metric_at)
    p = [0.4, -0.2]
    np.testing.assert_allclose(ricci_tensor(func_chart, p), ricci_tensor(chart, p), atol=1e-6)


def test_ricci_is_zero_on_a_line():
    assert ricci_tensor(flat_chart(1), [0.3]).shape == (1, 1)
    assert ricci_tensor(flat_chart(1), [0.3])[0, 0] == 0.0


def test_hessian_of_x_over_y():
    chart = half_plane_chart()
    u = parse("x/y", XY)
    for p in ([0.5, 1.5], [-2.0, 0.3]):
        np.testing.assert_allclose(hessian(chart, u, p), u(p) * chart.metric_at(p), atol=1e-12)


def test_laplace_beltrami():
    assert laplace_beltrami(flat_chart(2), "x^2+y^2", [0.3, 0.1]) == pytest.approx(4.0)
    sphere = sphere_chart(1.0)
    th = 0.77
    assert laplace_beltrami(sphere, "cos(theta)", [th, 0.0]) == pytest.approx(-2 * math.cos(th), abs=1e-14)


def test_gradient_raises_index():
    chart = half_plane_chart()
    # g^{ij} = y^2 delta, d(x) = (1, 0)
    np.testing.assert_allclose(gradient(chart, "x", [0.0, 3.0]), [9.0, 0.0])


def test_hs_norm():
    chart = half_plane_chart()
    p = [0.0, 2.0]
    g = chart.metric_at(p)
    assert hs_norm_sq(chart, g, p) == pytest.approx(2.0)


def test_metric_validation():
    with pytest.raises(GeometryError):
        expr_chart([["1", "x"], ["y", "1"]])
    with pytest.raises(GeometryError):
        Chart(XY, R2)
    bad = expr_chart([["1", "2"], ["2", "1"]])
    with pytest.raises(GeometryError):
        bad.metric_at([0.0, 0.0])
    with pytest.raises(GeometryError):
        half_plane_chart().metric_at([0.0, -1.0])


def test_composite_field_jet_matches_expression_jet():
    u = parse("sin(x)*exp(y/2)", XY)
    chart = flat_chart(2)
    p = np.array([0.3, -0.4])
    exact = u.jet(p)
    plain = ScalarField(func=lambda q: float(u(q)))
    rich = ScalarField(func=lambda q: float(u(q)), step=1e-3, richardson=True)
    for field, tol in ((plain, 1e-6), (rich, 1e-8)):
        j = field.jet(p)
        np.testing.assert_allclose(j.gradient, exact.gradient, atol=tol)
        np.testing.assert_allclose(j.hessian, exact.hessian, atol=tol * 10)
    assert hessian(chart, plain, p)[0, 1] == hessian(chart, plain, p)[1, 0]


# ---------------------------------------------------------------------------
# properties

coef = st.floats(-1.0, 1.0, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(coef, coef, coef, coef, st.floats(-1, 1), st.floats(-1, 1))
def test_conformal_flat_curvature(a, b, c, d, x, y):
    # g = e^{2f} delta  =>  Ric = -(lap_0 f) delta
    f = f"({a!r})*x+({b!r})*y+({c!r})*x^2+({d!r})*y^2"
    chart = expr_chart([[f"exp(2*({f}))", "0"], ["0", f"exp(2*({f}))"]])
    ric = ricci_tensor(chart, [x, y])
    np.testing.assert_allclose(ric, -(2 * c + 2 * d) * np.eye(2), atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(-1, 1), st.floats(0.3, 2))
def test_ricci_scale_invariant(lam, x, y):
    base = [["1+x^2/4", "x*y/5"], ["x*y/5", "1+y^2"]]
    scaled = [[f"{lam * lam!r}*({t})" for t in row] for row in base]
    np.testing.assert_allclose(ricci_tensor(expr_chart(scaled), [x, y]), ricci_tensor(expr_chart(base), [x, y]),
                               atol=1e-10)
