"""Points and closed embedded curves: unit normal frames, shape operator,
principal-curvature bound, foot-point projection, embedding families."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import Backend, GeometryError, ImplicitSurface, PeriodicChart

_DS = 1e-5          # parameter step for curve/normal-field derivatives
_ROT = np.array([[0.0, -1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class CurveSpec:
    """Closed-curve parametrization c : [0, 1) -> M, smooth and periodic."""

    name: str
    params: dict
    fn: Callable[[np.ndarray], np.ndarray]

    def __call__(self, s):
        return self.fn(np.mod(np.asarray(s, dtype=float), 1.0))

    def velocity(self, s):
        # differentiate the raw representative: chart curves like (L1 s, y0)
        # are smooth in s but jump under the mod-1 reduction of __call__
        s = np.asarray(s, dtype=float)
        return (self.fn(s + _DS) - self.fn(s - _DS)) / (2.0 * _DS)


def chart_curve(name: str, periods, **params) -> CurveSpec:
    L1, L2 = float(periods[0]), float(periods[1])
    if name == "horizontal-circle":
        y0 = float(params.get("y0", 0.0))

        def fn(s):
            return np.stack([L1 * s, np.full_like(s, y0)], axis=-1)
    elif name == "chart-circle":
        cx, cy = (float(v) for v in params.get("center", (0.5, 0.5)))
        r = float(params.get("r", 0.2))

        def fn(s):
            a = 2.0 * np.pi * s
            return np.stack([cx + r * np.cos(a), cy + r * np.sin(a)], axis=-1)
    else:
        raise GeometryError(f"unknown chart curve {name!r}")
    return CurveSpec(name, dict(params), fn)


def surface_curve(name: str, **params) -> CurveSpec:
    r = float(params.get("radius", 1.0))
    if name == "equator":
        z0 = 0.0
    elif name == "latitude":
        z0 = float(params.get("z0", 0.0))
        if abs(z0) >= r:
            raise GeometryError("latitude z0 must satisfy |z0| < radius")
    else:
        raise GeometryError(f"unknown surface curve {name!r}")
    rho = np.sqrt(r * r - z0 * z0)

    def fn(s):
        a = 2.0 * np.pi * s
        return np.stack([rho * np.cos(a), rho * np.sin(a),
                         np.full_like(s, z0)], axis=-1)

    return CurveSpec(name, dict(params), fn)


@dataclass(frozen=True)
class SubmanifoldSpec:
    """N as a point (dim 0) or a closed curve (dim 1) with sampling count."""

    dim: int
    point: np.ndarray | None = None
    curve: CurveSpec | None = None
    m_N: int = 256

    def __post_init__(self):
        if self.dim == 0 and self.point is None:
            raise GeometryError("dim-0 submanifold needs a point")
        if self.dim == 1 and self.curve is None:
            raise GeometryError("dim-1 submanifold needs a curve")

    def sample_params(self, m: int | None = None) -> np.ndarray:
        m = self.m_N if m is None else m
        return np.arange(m) / m

    def sample_points(self, m: int | None = None) -> np.ndarray:
        if self.dim == 0:
            return self.point[None, :]
        return self.curve(self.sample_params(m))


def point_submanifold(p, m_N: int = 256) -> SubmanifoldSpec:
    return SubmanifoldSpec(0, point=np.asarray(p, dtype=float), m_N=m_N)


def curve_submanifold(curve: CurveSpec, m_N: int = 256) -> SubmanifoldSpec:
    return SubmanifoldSpec(1, curve=curve, m_N=m_N)


@dataclass(frozen=True)
class NormalFrame:
    """Unit normal at c(s) (or direction angle s at a point), with side."""

    s: float
    side: int
    base: np.ndarray
    n: np.ndarray


def _side_int(side) -> int:
    if side in (1, +1, "+", "plus"):
        return 1
    if side in (-1, "-", "minus"):
        return -1
    raise GeometryError(f"invalid side {side!r}")


def unit_normal(b: Backend, N: SubmanifoldSpec, s: float, side) -> NormalFrame:
    """g-unit normal to the curve at c(s); side + is the chart/ambient-oriented
    left of c'(s)."""
    if N.dim != 1:
        raise GeometryError("unit_normal needs a curve; use direction_circle")
    sgn = _side_int(side)
    s_arr = np.array([float(s)])
    base = N.curve(s_arr)[0]
    tan = N.curve.velocity(s_arr)[0]
    tnorm = float(b.norm(base, tan))
    if tnorm < 1e-10:
        raise GeometryError(f"degenerate curve velocity at s={s}")
    if isinstance(b, PeriodicChart):
        g = b.metric(base[None, :])[0]
        raw = _ROT @ (g @ tan)
    else:
        raw = np.cross(b.unit_surface_normal(base), tan)
    nrm = float(b.norm(base, raw))
    if nrm < 1e-14:
        raise GeometryError(f"degenerate normal at s={s}")
    return NormalFrame(float(np.mod(s, 1.0)), sgn, base, sgn * raw / nrm)


def direction_frame(b: Backend, p, angle: float) -> NormalFrame:
    """g-unit vector at a point p, at the given chart/tangent-plane angle."""
    p = np.asarray(p, dtype=float)
    if isinstance(b, PeriodicChart):
        raw = np.array([np.cos(angle), np.sin(angle)])
    else:
        from .geometry import _tangent_frame
        e1, e2 = _tangent_frame(b.unit_surface_normal(p[None, :]))
        raw = np.cos(angle) * e1[0] + np.sin(angle) * e2[0]
    nrm = float(b.norm(p, raw))
    return NormalFrame(float(angle), 1, p, raw / nrm)


def direction_circle(b: Backend, p, m: int) -> list[NormalFrame]:
    """m g-unit directions at p, at equal chart/tangent angles from (1, 0)."""
    return [direction_frame(b, p, 2.0 * np.pi * j / m) for j in range(m)]


def frames_for(b: Backend, N: SubmanifoldSpec, m: int) -> list[NormalFrame]:
    """Direction set driving atlases and profiles: m parameters x both sides
    for a curve, m circle directions for a point (fixed ordering)."""
    if N.dim == 0:
        return direction_circle(b, N.point, m)
    out = []
    for side in (1, -1):
        for s in N.sample_params(m):
            out.append(unit_normal(b, N, float(s), side))
    return out


def frame_fn_for(b: Backend, N: SubmanifoldSpec):
    """(s, side) -> NormalFrame, smooth in s; s is the angle for a point."""
    if N.dim == 0:
        return lambda s, side: direction_frame(b, N.point, s)
    return lambda s, side: unit_normal(b, N, s, side)


# ---------------------------------------------------------------------------
# shape operator and curvature bound
# ---------------------------------------------------------------------------

def shape_operator(b: Backend, N: SubmanifoldSpec, s: float, side) -> float:
    """Scalar shape operator kappa = g(S_n e, e) for the g-unit tangent e,
    via a finite-difference covariant derivative of the unit normal field.

    Sign convention: traveling along n, the focal ODE uses y(0) = 1,
    y'(0) = kappa directly.  On a flat chart this makes the inward normal of
    a circle of radius r give kappa = -1/r (focal at the center at t = r).
    """
    if N.dim != 1:
        raise GeometryError("shape_operator needs a curve")
    s = float(s)
    f0 = unit_normal(b, N, s, side)
    fp = unit_normal(b, N, s + _DS, side)
    fm = unit_normal(b, N, s - _DS, side)
    dn = (fp.n - fm.n) / (2.0 * _DS)
    base = f0.base
    tan = N.curve.velocity(np.array([s]))[0]
    if isinstance(b, PeriodicChart):
        Dn = dn + b.christoffel_mixed(base[None, :], tan[None, :],
                                      f0.n[None, :])[0]
    else:
        Dn = b.tangent_project(base[None, :], dn[None, :])[0]
        from .geometry import ZERO_FIELD
        if b.psi is not ZERO_FIELD:
            dpsi = b.psi_gradient(base[None, :])[0]
            Dn = Dn + np.dot(dpsi, tan) * f0.n + np.dot(dpsi, f0.n) * tan
    t2 = float(b.inner(base, tan, tan))
    return float(b.inner(base, Dn, tan)) / t2


def principal_curvature_bound(b: Backend, N: SubmanifoldSpec,
                              safety: float = 1.1) -> float:
    """Delta: max |kappa| over m_N samples and both sides, times a safety
    factor.  A point has no shape operator; the bound is 0."""
    if N.dim == 0:
        return 0.0
    kmax = 0.0
    for s in N.sample_params():
        for side in (1, -1):
            kmax = max(kmax, abs(shape_operator(b, N, float(s), side)))
    return safety * kmax


# ---------------------------------------------------------------------------
# foot point
# ---------------------------------------------------------------------------

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class FootPoint:
    s: float
    d_est: float
    coarse: bool    # aux estimate beyond the tubular radius, not metric-polished


def foot_point(b: Backend, N: SubmanifoldSpec, q,
               tube_radius: float = 0.1, tol: float = 1e-8) -> FootPoint:
    """Nearest-parameter projection of q onto N in the auxiliary distance,
    golden-section polished; d_est is a first-order g-length inside the
    tubular radius, otherwise the raw auxiliary value flagged coarse."""
    q = np.asarray(q, dtype=float)
    if N.dim == 0:
        d_aux = float(b.aux_distance(N.point, q))
        return _foot_result(b, N.point, q, 0.0, d_aux, tube_radius)
    pts = N.sample_points()
    m = pts.shape[0]
    j = int(b.aux_distance(pts, q[None, :]).argmin())
    lo, hi = (j - 1) / m, (j + 1) / m

    def f(s):
        return float(b.aux_distance(N.curve(np.array([s]))[0], q))

    a_, b_ = lo, hi
    c_ = b_ - _GOLDEN * (b_ - a_)
    d_ = a_ + _GOLDEN * (b_ - a_)
    fc, fd = f(c_), f(d_)
    while (b_ - a_) > tol:
        if fc < fd:
            b_, d_, fd = d_, c_, fc
            c_ = b_ - _GOLDEN * (b_ - a_)
            fc = f(c_)
        else:
            a_, c_, fc = c_, d_, fd
            d_ = a_ + _GOLDEN * (b_ - a_)
            fd = f(d_)
    s_star = float(np.mod(0.5 * (a_ + b_), 1.0))
    foot = N.curve(np.array([s_star]))[0]
    return _foot_result(b, foot, q, s_star, f(0.5 * (a_ + b_)), tube_radius)


def _foot_result(b: Backend, foot, q, s_star, d_aux, tube_radius) -> FootPoint:
    if d_aux > tube_radius:
        return FootPoint(s_star, d_aux, True)
    gap = b.aux_gap(foot, q)
    mid = foot + 0.5 * gap if not isinstance(b, ImplicitSurface) else foot
    d_g = float(np.sqrt(max(b.inner(mid, gap, gap), 0.0)))
    return FootPoint(s_star, d_g, False)


# ---------------------------------------------------------------------------
# embedding families
# ---------------------------------------------------------------------------

def embedding_family(b: Backend, N0: SubmanifoldSpec, N1: SubmanifoldSpec,
                     tau: float) -> SubmanifoldSpec:
    """Interpolated embedding: chart-linear with the wraparound choice that
    minimizes displacement; ambient-linear then projected on surfaces."""
    if N0.dim != N1.dim:
        raise GeometryError("embedding_family needs matching dimensions")
    if tau == 0.0:
        return N0
    if N0.dim == 0:
        if isinstance(b, PeriodicChart):
            p = N0.point + tau * b.aux_gap(N0.point, N1.point)
        else:
            p = b.project((1.0 - tau) * N0.point + tau * N1.point)
        return SubmanifoldSpec(0, point=p, m_N=N0.m_N)
    c0, c1 = N0.curve, N1.curve
    if isinstance(b, PeriodicChart):
        def fn(s):
            a = c0.fn(s)
            return a + tau * b.aux_gap(a, c1.fn(s))
    else:
        def fn(s):
            return b.project((1.0 - tau) * c0.fn(s) + tau * c1.fn(s))
    spec = CurveSpec(f"family({c0.name},{c1.name})", {"tau": tau}, fn)
    return SubmanifoldSpec(1, curve=spec, m_N=N0.m_N)
