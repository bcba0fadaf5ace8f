import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cutlab.geometry import (GeometryError, ImplicitSurface, PeriodicChart,
                             ZERO_FIELD, ambient_scalar_field,
                             chart_metric_field, chart_scalar_field,
                             conformal_family, level_surface, linear_blend,
                             metric_eval, same_backend_family)

from oracles import diag_metric_christoffel_action, warped_curvature

pts2 = st.tuples(st.floats(0, 1), st.floats(0, 1)).map(np.array)
vecs2 = st.tuples(st.floats(-2, 2), st.floats(-2, 2)).map(np.array)


def flat():
    return PeriodicChart((1.0, 1.0), chart_metric_field("flat", (1.0, 1.0)))


def warped(a=0.2):
    return PeriodicChart((1.0, 1.0),
                         chart_metric_field("warped-diag", (1.0, 1.0),
                                            amplitude=a))


def sphere(r=1.0, psi=ZERO_FIELD):
    return ImplicitSurface(level_surface("sphere", radius=r), psi=psi)


# -- metric evaluation ------------------------------------------------------

def test_flat_orthonormal_pairing():
    b = flat()
    p = np.array([0.3, 0.7])
    assert metric_eval(b, p, np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0
    assert metric_eval(b, p, np.array([3.0, 4.0]), np.array([3.0, 4.0])) == 25.0


def test_sphere_induced_metric_is_ambient_dot():
    b = sphere()
    p = np.array([1.0, 0.0, 0.0])
    v = np.array([0.0, 1.0, 0.0])
    assert metric_eval(b, p, v, v) == pytest.approx(1.0, abs=1e-14)


@settings(max_examples=25, deadline=None)
@given(p=pts2, v=vecs2, w=vecs2)
def test_metric_symmetric_bilinear(p, v, w):
    b = warped()
    gvw = metric_eval(b, p, v, w)
    assert gvw == pytest.approx(metric_eval(b, p, w, v), abs=1e-12)
    assert metric_eval(b, p, 2 * v, w) == pytest.approx(2 * gvw, rel=1e-12,
                                                        abs=1e-12)


def test_metric_periodicity_at_identified_boundary():
    b = warped()
    g0 = b.metric(np.array([[0.0, 0.3]]))
    g1 = b.metric(np.array([[1.0, 0.3]]))
    assert np.max(np.abs(g0 - g1)) <= 1e-12


def test_metric_spd_rejects_bad_field():
    bad = chart_metric_field("warped-diag-g22", (1.0, 1.0), amplitude=2.0)
    b = PeriodicChart((1.0, 1.0), bad)
    with pytest.raises(GeometryError):
        b.metric(np.array([[0.75, 0.0]]))  # g22 = 1 - 2 < 0 there


# -- Christoffel action -----------------------------------------------------

def test_flat_christoffels_vanish():
    b = flat()
    v = np.array([[0.3, -1.2]])
    assert np.max(np.abs(b.gamma2(np.array([[0.2, 0.9]]), v))) <= 1e-10


@pytest.mark.parametrize("x", [0.1, 0.25, 0.6, 0.9])
def test_warped_christoffels_match_closed_form(x):
    a = 0.2
    b = warped(a)
    w = 2 * np.pi
    bx = 1 + a * np.sin(w * x)
    dbx = a * w * np.cos(w * x)
    v = np.array([0.7, -0.4])
    want = diag_metric_christoffel_action(1.0, 0.0, bx ** 2, 2 * bx * dbx, v)
    got = b.gamma2(np.array([[x, 0.33]]), v[None, :])[0]
    assert np.max(np.abs(got - want)) <= 1e-6


def test_christoffel_mixed_polarization():
    b = warped()
    p = np.array([[0.37, 0.11]])
    u = np.array([[0.5, 1.0]])
    w = np.array([[-1.0, 0.25]])
    lhs = b.christoffel_mixed(p, u, w)
    quad = lambda vv: b.gamma2(p, vv)
    rhs = 0.5 * (quad(u + w) - quad(u) - quad(w))
    assert np.max(np.abs(lhs - rhs)) <= 1e-9


# -- Gauss curvature --------------------------------------------------------

def test_flat_curvature_zero():
    assert abs(float(flat().gauss_curvature(np.array([[0.4, 0.8]]))[0])) <= 1e-7


@pytest.mark.parametrize("r", [1.0, 2.0])
def test_sphere_curvature(r):
    b = sphere(r)
    p = b.project(np.array([[0.3, -0.5, 0.7]]))
    assert float(b.gauss_curvature(p)[0]) == pytest.approx(1 / r ** 2, abs=2e-4)


@pytest.mark.parametrize("x", [0.1, 0.25, 0.5, 0.75])
def test_warped_curvature_closed_form(x):
    b = warped(0.2)
    got = float(b.gauss_curvature(np.array([[x, 0.2]]))[0])
    assert got == pytest.approx(warped_curvature(0.2, x), abs=5e-3)


def test_conformal_curvature_relation():
    # g_tau = e^{2 tau phi} delta on the torus: K_tau = -tau * Lap(phi)
    # * e^{-2 tau phi}; with phi = sin(2 pi x) sin(2 pi y), Lap(phi) =
    # -8 pi^2 phi.
    tau = 0.1
    phi = chart_scalar_field("bump-xy", (1.0, 1.0), amplitude=1.0)
    b = conformal_family(flat(), phi, tau)
    p = np.array([[0.2, 0.35]])
    ph = float(phi(p)[0])
    want = tau * 8 * np.pi ** 2 * ph * np.exp(-2 * tau * ph)
    assert float(b.gauss_curvature(p)[0]) == pytest.approx(want, rel=2e-2)


# -- families ---------------------------------------------------------------

def test_conformal_family_tau_zero_is_same_object():
    b = flat()
    phi = chart_scalar_field("sine-x", (1.0, 1.0))
    assert conformal_family(b, phi, 0.0) is b


def test_homothety_scales_metric():
    phi = chart_scalar_field("constant", (1.0, 1.0), value=1.0)
    b = conformal_family(flat(), phi, 0.3)
    p = np.array([0.5, 0.5])
    v = np.array([1.0, 0.0])
    assert metric_eval(b, p, v, v) == pytest.approx(np.exp(0.6), rel=1e-12)


def test_linear_blend_endpoints_and_midpoint():
    b0, b1 = flat(), warped()
    assert linear_blend(b0, b1, 0.0) is b0
    assert linear_blend(b0, b1, 1.0) is b1
    bm = linear_blend(b0, b1, 0.5)
    p = np.array([[0.25, 0.0]])
    want = 0.5 * (b0.metric(p) + b1.metric(p))
    assert np.max(np.abs(bm.metric(p) - want)) <= 1e-14


def test_conformal_family_on_surface():
    phi = ambient_scalar_field("linear-z", amplitude=1.0)
    b = conformal_family(sphere(), phi, 0.2)
    p = np.array([0.0, 0.0, 1.0])
    v = np.array([1.0, 0.0, 0.0])
    assert metric_eval(b, p, v, v) == pytest.approx(np.exp(0.4), rel=1e-12)


# -- auxiliary distance and constraints -------------------------------------

def test_chart_aux_distance_wraparound():
    b = flat()
    d = float(b.aux_distance(np.array([0.95, 0.1]), np.array([0.05, 0.9])))
    assert d == pytest.approx(np.hypot(0.1, 0.2), abs=1e-14)


@settings(max_examples=25, deadline=None)
@given(p=pts2, q=pts2, r=pts2)
def test_chart_aux_triangle_inequality(p, q, r):
    b = flat()
    dpq = float(b.aux_distance(p, q))
    assert dpq <= float(b.aux_distance(p, r)) + float(b.aux_distance(r, q)) + 1e-12


def test_implicit_projection_invariant():
    b = sphere(2.0)
    x = b.project(np.array([[1.0, 2.0, -0.5], [3.0, 0.1, 0.1]]))
    assert np.max(np.abs(b.surface.h(x))) <= b.proj_tol


def test_implicit_tangency_after_constrain():
    b = sphere()
    p = b.project(np.array([[0.5, 0.5, 0.5]]))
    v = b.constrain_velocity(p, np.array([[1.0, 0.2, -0.3]]))
    n = b.unit_surface_normal(p)
    assert abs(float(np.sum(v * n))) <= 1e-12


def test_same_backend_family():
    assert same_backend_family(flat(), warped())
    assert same_backend_family(sphere(), sphere(2.0))
    assert not same_backend_family(flat(), sphere())
