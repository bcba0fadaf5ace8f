import numpy as np
import pytest

from cutlab.submanifold import chart_curve, curve_submanifold, \
    point_submanifold
from cutlab.wavefront import (CoverageError, build_atlas, distance,
                              eikonal_residual, validation_grid)

from oracles import flat_torus_line_distance, flat_torus_point_distance


@pytest.fixture(scope="module")
def flat_line_atlas(flat_backend):
    N = curve_submanifold(chart_curve("horizontal-circle", (1.0, 1.0), y0=0.0))
    return build_atlas(flat_backend, N, 64, 0.8, 1e-3)


@pytest.fixture(scope="module")
def flat_point_atlas(flat_backend):
    return build_atlas(flat_backend, point_submanifold([0.25, 0.25]), 128,
                       0.9, 1e-3)


def test_distance_flat_line_matches_closed_form(flat_line_atlas, rng):
    for _ in range(40):
        q = rng.random(2)
        if min(q[1], 1.0 - q[1]) > 0.45:    # skip the cut locus itself
            continue
        r = distance(flat_line_atlas, q)
        assert r.d == pytest.approx(flat_torus_line_distance(q), abs=2e-3)
        assert abs(r.d - flat_torus_line_distance(q)) <= r.err


def test_distance_flat_point_matches_closed_form(flat_point_atlas, rng):
    p = np.array([0.25, 0.25])
    for _ in range(40):
        q = rng.random(2)
        want = flat_torus_point_distance(p, q)
        if want < 0.02 or want > 0.62:
            continue
        r = distance(flat_point_atlas, q)
        assert r.d == pytest.approx(want, abs=2e-3)


def test_distance_err_and_metadata(flat_line_atlas):
    r = distance(flat_line_atlas, [0.4, 0.2])
    assert r.err > 0.0
    assert 0 <= r.dir_idx < len(flat_line_atlas.frames)
    assert 0.0 <= r.t <= flat_line_atlas.t_max


def test_certificate_shrinks_with_more_directions(flat_backend):
    N = curve_submanifold(chart_curve("horizontal-circle", (1.0, 1.0), y0=0.0))
    c64 = build_atlas(flat_backend, N, 64, 0.8, 1e-3).certificate
    c256 = build_atlas(flat_backend, N, 256, 0.8, 1e-3).certificate
    assert c256 < c64


def test_coverage_error_past_front(flat_backend):
    N = curve_submanifold(chart_curve("horizontal-circle", (1.0, 1.0), y0=0.0))
    short = build_atlas(flat_backend, N, 64, 0.3, 1e-3)
    with pytest.raises(CoverageError):
        distance(short, [0.1, 0.5])   # true distance 0.5 > front extent 0.3


def test_small_direction_count_rejected(flat_backend):
    with pytest.raises(ValueError):
        build_atlas(flat_backend,
                    point_submanifold([0.5, 0.5]), 8, 0.5, 1e-3)


def test_tie_break_is_deterministic(flat_line_atlas):
    # equidistant from both sides of the line: repeated queries must agree
    base = distance(flat_line_atlas, [0.3, 0.2])
    for _ in range(5):
        r = distance(flat_line_atlas, [0.3, 0.2])
        assert (r.d, r.dir_idx, r.t) == (base.d, base.dir_idx, base.t)


def test_thread_count_does_not_change_atlas(flat_backend):
    N = curve_submanifold(chart_curve("horizontal-circle", (1.0, 1.0), y0=0.0))
    a1 = build_atlas(flat_backend, N, 64, 0.8, 1e-3, threads=1)
    a8 = build_atlas(flat_backend, N, 64, 0.8, 1e-3, threads=8)
    np.testing.assert_array_equal(a1.sample_pos, a8.sample_pos)
    np.testing.assert_array_equal(a1.sample_t, a8.sample_t)
    assert a1.certificate == a8.certificate


def test_validation_grid_chart(flat_backend):
    grid = validation_grid(flat_backend, 0.25)
    assert grid.shape == (16, 2)
    assert np.all((grid >= 0.0) & (grid < 1.0))


def test_validation_grid_surface_on_surface(sphere_backend):
    grid = validation_grid(sphere_backend, 0.3)
    assert np.max(np.abs(sphere_backend.surface.h(grid))) <= 1e-10


def test_eikonal_residual_flat_line(flat_line_atlas):
    cut = np.stack([np.linspace(0, 1, 41), np.full(41, 0.5)], axis=-1)
    rep = eikonal_residual(flat_line_atlas, 0.05, cut_points=cut)
    assert rep["count"] > 100
    assert rep["frac_below_1e2"] >= 0.95
