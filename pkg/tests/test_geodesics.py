import numpy as np
import pytest

from cutlab.geodesics import (IntegrationError, exp_map, hermite_sample,
                              integrate_batch, integrate_geodesic, normal_exp,
                              normal_exp_jacobian)
from cutlab.submanifold import curve_submanifold, chart_curve, frame_fn_for, \
    unit_normal

from oracles import great_circle


def test_flat_torus_geodesics_are_straight(flat_backend):
    path = integrate_geodesic(flat_backend, [0.1, 0.2], [0.6, 0.8], 1.0, 1e-3)
    want = np.array([0.1, 0.2]) + 0.7 * np.array([0.6, 0.8])
    np.testing.assert_allclose(path.sample_at(0.7)[0], want, atol=1e-12)
    assert path.drift <= 1e-12


def test_great_circle_closed_form(sphere_backend):
    b = sphere_backend
    p0 = np.array([1.0, 0.0, 0.0])
    v0 = np.array([0.0, 0.6, 0.8])
    path = integrate_geodesic(b, p0, v0, 6.0, 1e-3)
    for t in (0.5, 2.0, np.pi, 5.5):
        got, vel = path.sample_at(t)
        np.testing.assert_allclose(got, great_circle(p0, v0, t), atol=1e-7)
        assert abs(np.linalg.norm(vel) - 1.0) <= 1e-7
    assert abs(b.surface.h(path.pos).max()) <= 1e-10


def test_unit_speed_drift_budget(warped_backend):
    path = integrate_geodesic(warped_backend, [0.3, 0.1], [1.0, 0.0], 1.0,
                              1e-3)
    assert path.drift <= 1e-6


def test_oversized_step_trips_drift_audit(sphere_backend):
    with pytest.raises(IntegrationError):
        integrate_geodesic(sphere_backend, [1.0, 0.0, 0.0],
                           [0.0, 1.0, 0.0], 3.0, 0.75)


def test_rk4_refinement_order(warped_backend):
    # endpoint error should fall ~2^4 per halving; accept [12, 20]
    b = warped_backend
    p0, v0 = [0.1, 0.2], [0.8, 0.6]
    ref = integrate_geodesic(b, p0, v0, 1.0, 1e-4).endpoint()
    e = {dt: np.linalg.norm(integrate_geodesic(b, p0, v0, 1.0, dt).endpoint()
                            - ref)
         for dt in (4e-3, 2e-3)}
    ratio = e[4e-3] / e[2e-3]
    assert 12.0 <= ratio <= 20.0


def test_batch_matches_single(warped_backend):
    b = warped_backend
    p0 = np.array([[0.1, 0.2], [0.5, 0.9]])
    v0 = np.array([[1.0, 0.0], [0.0, 1.0]])
    batch = integrate_batch(b, p0, v0, 0.8, 1e-3)
    for i in range(2):
        single = integrate_geodesic(b, p0[i], v0[i], 0.8, 1e-3)
        np.testing.assert_array_equal(batch.pos[i], single.pos)


def test_final_grid_point_is_exactly_t_max(flat_backend):
    path = integrate_geodesic(flat_backend, [0, 0], [1, 0], 0.7771, 1e-3)
    assert path.t[-1] == 0.7771


def test_hermite_sample_reproduces_grid_and_interpolates():
    t = np.linspace(0.0, 1.0, 11)
    pos = np.stack([np.sin(t), np.cos(t)], axis=-1)
    vel = np.stack([np.cos(t), -np.sin(t)], axis=-1)
    p, v = hermite_sample(t, pos, vel, t[4])
    np.testing.assert_allclose(p, pos[4], atol=1e-15)
    p, _ = hermite_sample(t, pos, vel, 0.437)
    np.testing.assert_allclose(p, [np.sin(0.437), np.cos(0.437)], atol=1e-6)


def test_exp_map_zero_vector(flat_backend):
    p = np.array([0.3, 0.4])
    np.testing.assert_array_equal(exp_map(flat_backend, p, np.zeros(2)), p)


def test_exp_map_scales_with_vector_length(flat_backend):
    got = exp_map(flat_backend, np.array([0.0, 0.0]), np.array([0.3, 0.4]))
    np.testing.assert_allclose(got, [0.3, 0.4], atol=1e-12)


def test_normal_exp_flat_line(flat_backend):
    N = curve_submanifold(chart_curve("horizontal-circle", (1.0, 1.0), y0=0.0))
    f = unit_normal(flat_backend, N, 0.25, "+")
    got = normal_exp(flat_backend, f, 0.3)
    np.testing.assert_allclose(got, [0.25, 0.3], atol=1e-10)


# -- normal-exponential Jacobian --------------------------------------------

def test_jacobian_det_positive_before_focal_flat(flat_backend):
    N = curve_submanifold(chart_curve("horizontal-circle", (1.0, 1.0), y0=0.0))
    jac = normal_exp_jacobian(flat_backend, frame_fn_for(flat_backend, N),
                              0.25, 1, 0.9, 1e-3)
    assert np.all(jac.det > 0.0)
    assert jac.first_zero() is None


def test_jacobian_first_zero_sphere_equator(sphere_backend):
    from cutlab.submanifold import surface_curve
    N = curve_submanifold(surface_curve("equator", radius=1.0))
    jac = normal_exp_jacobian(sphere_backend,
                              frame_fn_for(sphere_backend, N),
                              0.125, 1, 2.0, 1e-3)
    assert jac.first_zero() == pytest.approx(np.pi / 2, abs=1e-6)
    assert not jac.fd_warning


def test_jacobian_richardson_consistency(sphere_backend):
    # halving the s-step changes the FD derivative ~4x less (2nd order)
    from cutlab.submanifold import surface_curve
    N = curve_submanifold(surface_curve("equator", radius=1.0))
    fn = frame_fn_for(sphere_backend, N)
    j1 = normal_exp_jacobian(sphere_backend, fn, 0.1, 1, 1.0, 1e-3, fd=2e-4)
    j2 = normal_exp_jacobian(sphere_backend, fn, 0.1, 1, 1.0, 1e-3, fd=1e-4)
    # det = |c'(s)| cos t = 2 pi cos t on the unit sphere equator
    ref = 2.0 * np.pi * np.cos(np.linspace(0, 1.0, len(j1.det)))
    e1 = np.max(np.abs(j1.det - ref))
    e2 = np.max(np.abs(j2.det - ref))
    assert e2 <= e1 + 1e-9
