"""Cut times, cut locus, separating points, focal times (scalar Jacobi and
exponential-Jacobian routes), N-geodesic loops, injectivity radii, and the
focal-free comparison bound."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geodesics import hermite_sample, normal_exp_jacobian
from .geometry import Backend
from .submanifold import SubmanifoldSpec, frame_fn_for, shape_operator
from .wavefront import WavefrontAtlas, distance


@dataclass
class LoopReturn:
    t: float            # loop length (unit-speed return time)
    s_return: float     # curve parameter (or unused for a point) at the return
    angle_residual: float
    d_min: float


@dataclass
class CutProfile:
    """Per-normal-direction record of cut, focal and loop data."""

    dir_idx: int
    s: float
    side: int
    rho: float
    cut_point: np.ndarray
    no_cut: bool
    focal_t: float              # +inf when no focal point before t_max
    loop: LoopReturn | None
    flags: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# cut time
# ---------------------------------------------------------------------------

def excess(atlas: WavefrontAtlas, dir_idx: int, t: float) -> float:
    """e(t) = t - d(N, gamma_n(t)); nondecreasing, zero before the cut."""
    p, _ = atlas.path_point(dir_idx, t)
    return t - distance(atlas, p).d


def cut_time(atlas: WavefrontAtlas, dir_idx: int, tol: float = 1e-3) -> tuple[float, dict]:
    """sup{t | d(N, gamma_n(t)) = t} via bisection on the excess function.

    The threshold theta = max(3*err_step, tol) marks the {e <= theta} /
    {e > theta} boundary; a short extrapolation of e back to its pre-kink
    baseline removes the O(theta) bias of the raw crossing.
    """
    tg = atlas.batch.t
    theta = max(2.0 * atlas.dt, tol)
    flags = {"theta": theta, "no_cut": False, "method": "kink"}
    # probe below the coverage edge: a still-minimizing direction has d = t,
    # which the distance query refuses within its margin of t_max
    margin = max(5.0 * atlas.dt, 2.0 * atlas.median_gap)
    edge = atlas.t_max - margin - 5.0 * atlas.dt
    # monotone binary search for the first grid point with e > theta
    lo_i = 0
    edge_i = max(int(np.searchsorted(tg, edge, side="right")) - 1, 1)
    hi_i = edge_i
    if excess(atlas, dir_idx, float(tg[hi_i])) <= theta:
        flags["no_cut"] = True
        flags["method"] = "none"
        return float(tg[hi_i]), flags
    while hi_i - lo_i > 1:
        mid = (lo_i + hi_i) // 2
        if excess(atlas, dir_idx, float(tg[mid])) > theta:
            hi_i = mid
        else:
            lo_i = mid
    lo, hi = float(tg[lo_i]), float(tg[hi_i])
    # continuous bisection of the theta-crossing to width tol
    while hi - lo > 0.25 * tol:
        mid = 0.5 * (lo + hi)
        if excess(atlas, dir_idx, mid) > theta:
            hi = mid
        else:
            lo = mid
    t_cross = hi
    # extrapolate the kink: quadratic through e at t_cross, +D, +2D down to
    # the pre-kink baseline
    D = max(4.0 * tol, 2.0 * atlas.dt)
    t_end = float(tg[edge_i])
    base_t = max(t_cross - 3.0 * D, 0.0)
    baseline = max(0.0, excess(atlas, dir_idx, base_t)) if base_t > 0 else 0.0
    if t_cross + 2.0 * D <= t_end:
        e0 = theta
        e1 = excess(atlas, dir_idx, t_cross + D)
        e2 = excess(atlas, dir_idx, t_cross + 2.0 * D)
        rho = _kink_root(t_cross, D, e0, e1, e2, baseline)
    else:
        rho = t_cross - theta  # assume unit slope near the coverage edge
        flags["method"] = "edge"
    rho = float(np.clip(rho, t_cross - 6.0 * theta, t_cross))
    return rho, flags


def _kink_root(t0: float, D: float, e0: float, e1: float, e2: float,
               base: float) -> float:
    """Root of the quadratic through (t0, e0), (t0+D, e1), (t0+2D, e2) at
    level ``base``, taking the branch just below t0; falls back to the secant
    slope when the fit is degenerate."""
    a = (e2 - 2.0 * e1 + e0) / (2.0 * D * D)
    bq = (e1 - e0) / D - a * D          # derivative at t0 of the fit
    c = e0 - base
    slope_fallback = max((e1 - e0) / D, 0.25)
    if abs(a) < 1e-12:
        return t0 - c / max(bq, 0.25)
    disc = bq * bq - 4.0 * a * c
    if disc < 0.0:
        return t0 - c / slope_fallback
    r = (-bq + math.sqrt(disc)) / (2.0 * a)   # delta with t = t0 + delta
    if not (-6.0 * c / slope_fallback <= r <= 0.0):
        r2 = (-bq - math.sqrt(disc)) / (2.0 * a)
        r = r2 if (-6.0 * c / slope_fallback <= r2 <= 0.0) else -c / slope_fallback
    return t0 + r


# ---------------------------------------------------------------------------
# focal times: scalar Jacobi route
# ---------------------------------------------------------------------------

def focal_times_batch(b: Backend, N: SubmanifoldSpec, atlas: WavefrontAtlas,
                      zero_tol: float = 1e-8) -> np.ndarray:
    """First zero of y'' + K(gamma(t)) y = 0 along every atlas direction.

    Initial data: curve case y(0) = 1, y'(0) = kappa(s, side); point case
    y(0) = 0, y'(0) = 1.  Returns +inf where y has no zero before t_max.
    """
    batch = atlas.batch
    k, n, d = batch.pos.shape
    K = b.gauss_curvature(batch.pos.reshape(-1, d)).reshape(k, n)
    y = np.empty((k, n))
    yp = np.empty((k, n))
    if N.dim == 0:
        y[:, 0], yp[:, 0] = 0.0, 1.0
    else:
        y[:, 0] = 1.0
        yp[:, 0] = [shape_operator(b, N, f.s, f.side) for f in atlas.frames]
    tg = batch.t
    for i in range(n - 1):
        h = tg[i + 1] - tg[i]
        K0, K1 = K[:, i], K[:, i + 1]
        Km = 0.5 * (K0 + K1)
        y0, v0 = y[:, i], yp[:, i]
        k1y, k1v = v0, -K0 * y0
        k2y, k2v = v0 + 0.5 * h * k1v, -Km * (y0 + 0.5 * h * k1y)
        k3y, k3v = v0 + 0.5 * h * k2v, -Km * (y0 + 0.5 * h * k2y)
        k4y, k4v = v0 + h * k3v, -K1 * (y0 + h * k3y)
        y[:, i + 1] = y0 + (h / 6.0) * (k1y + 2 * k2y + 2 * k3y + k4y)
        yp[:, i + 1] = v0 + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
    out = np.full(k, np.inf)
    start = 1 if N.dim == 0 else 0
    for j in range(k):
        tf = _first_zero(tg, y[j], yp[j], start, zero_tol)
        if tf is not None:
            out[j] = tf
    return out


def _first_zero(tg, y, yp, start, tol):
    sgn = np.sign(y[start:])
    flips = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]
    if not flips.size:
        return None
    i = int(flips[0]) + start
    t = float(tg[i] - y[i] * (tg[i + 1] - tg[i]) / (y[i + 1] - y[i]))
    # Newton polish on the cubic Hermite interpolant of y
    for _ in range(8):
        yt = _h_val(tg, y, yp, i, t)
        dyt = _h_der(tg, y, yp, i, t)
        if dyt == 0.0:
            break
        step = yt / dyt
        t -= step
        if abs(step) < tol:
            break
    return float(np.clip(t, tg[i], tg[i + 1]))


def _h_val(tg, y, yp, i, t):
    h = tg[i + 1] - tg[i]
    s = (t - tg[i]) / h
    return ((2 * s**3 - 3 * s**2 + 1) * y[i] + (s**3 - 2 * s**2 + s) * h * yp[i]
            + (-2 * s**3 + 3 * s**2) * y[i + 1] + (s**3 - s**2) * h * yp[i + 1])


def _h_der(tg, y, yp, i, t):
    h = tg[i + 1] - tg[i]
    s = (t - tg[i]) / h
    return ((6 * s**2 - 6 * s) * y[i] / h + (3 * s**2 - 4 * s + 1) * yp[i]
            + (-6 * s**2 + 6 * s) * y[i + 1] / h + (3 * s**2 - 2 * s) * yp[i + 1])


def focal_time(b: Backend, N: SubmanifoldSpec, atlas: WavefrontAtlas,
               dir_idx: int) -> float:
    return float(focal_times_batch(b, N, atlas)[dir_idx])


def focal_bracket_jacobian(b: Backend, N: SubmanifoldSpec, frame,
                           t_max: float, dt: float, fd: float = 1e-4):
    """Secondary focal oracle: first sign change of det d(exp^nu) along the
    direction of ``frame``; None if the determinant never changes sign."""
    jac = normal_exp_jacobian(b, frame_fn_for(b, N), frame.s, frame.side,
                              t_max, dt, fd)
    return jac.first_zero(), jac


# ---------------------------------------------------------------------------
# loops
# ---------------------------------------------------------------------------

def loop_scan(b: Backend, N: SubmanifoldSpec, atlas: WavefrontAtlas,
              capture_radius: float = 1e-2, angle_tol: float = 1e-3,
              n_scan: int = 128) -> tuple[float, list[LoopReturn | None]]:
    """Detect N-geodesic loops: returns to N with g-orthogonal velocity.

    A candidate return must first leave a 3x capture tube around N.  The
    coarse return detector uses at most n_scan samples of N (the polish
    stage is exact).  Returns (half the minimal loop length, per-direction
    first loop or None).
    """
    N_pts = N.sample_points(min(N.m_N, n_scan) if N.dim == 1 else None)
    if N.dim == 1:
        spacing = float(np.max(b.aux_distance(
            N_pts, N_pts[np.roll(np.arange(len(N_pts)), -1)])))
    else:
        spacing = 0.0
    batch = atlas.batch
    tg = batch.t
    per_dir: list[LoopReturn | None] = []
    best = np.inf
    for j in range(batch.n_paths):
        d_series = np.min(b.aux_distance(batch.pos[j][:, None, :],
                                         N_pts[None, :, :]), axis=1)
        esc = np.nonzero(d_series > 3.0 * capture_radius)[0]
        if not esc.size:
            per_dir.append(None)
            continue
        first = None
        i0 = int(esc[0])
        thresh = capture_radius + 0.6 * spacing
        interior = d_series[1:-1]
        mins = np.nonzero((interior <= d_series[:-2])
                          & (interior <= d_series[2:])
                          & (interior < thresh))[0] + 1
        for i in mins[mins > i0]:
            ret = _polish_return(b, N, batch, j, float(tg[i]), capture_radius)
            if ret is None or ret.d_min > capture_radius:
                continue
            if ret.angle_residual <= angle_tol:
                first = ret
                best = min(best, ret.t)
                break
        per_dir.append(first)
    return (0.5 * best if np.isfinite(best) else np.inf), per_dir


def _polish_return(b, N, batch, j, t0, capture):
    """Joint (s, t) polish of a capture event by alternating golden sections."""
    from .submanifold import foot_point
    dt = batch.dt
    lo, hi = max(t0 - 2 * dt, 0.0), min(t0 + 2 * dt, float(batch.t[-1]))
    t = t0
    s_ret = 0.0
    for _ in range(3):
        p, _v = batch.sample_at(j, t)
        fp = foot_point(b, N, b.wrap(p), tube_radius=10 * capture)
        s_ret = fp.s

        def f(tt):
            pp, _ = batch.sample_at(j, tt)
            target = N.point if N.dim == 0 else N.curve(np.array([s_ret]))[0]
            return float(b.aux_distance(target, b.wrap(pp)))

        t = _golden_min(f, lo, hi, 1e-9)
    p, v = batch.sample_at(j, t)
    pw = b.wrap(p)
    if N.dim == 0:
        d_min = float(b.aux_distance(N.point, pw))
        return LoopReturn(float(t), 0.0, 0.0, d_min)
    fp = foot_point(b, N, pw, tube_radius=10 * capture)
    d_min = fp.d_est
    tan = N.curve.velocity(np.array([fp.s]))[0]
    base = N.curve(np.array([fp.s]))[0]
    vn = v / max(float(b.norm(pw, v)), 1e-300)
    tn = tan / max(float(b.norm(base, tan)), 1e-300)
    res = abs(float(b.inner(base, vn, tn)))
    return LoopReturn(float(t), fp.s, res, d_min)


def _golden_min(f, a, b_, tol):
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c = b_ - g * (b_ - a)
    d = a + g * (b_ - a)
    fc, fd = f(c), f(d)
    while b_ - a > tol:
        if fc < fd:
            b_, d, fd = d, c, fc
            c = b_ - g * (b_ - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b_ - a)
            fd = f(d)
    return 0.5 * (a + b_)


# ---------------------------------------------------------------------------
# profiles and injectivity radii
# ---------------------------------------------------------------------------

def compute_profiles(b: Backend, N: SubmanifoldSpec, atlas: WavefrontAtlas,
                     tol: float = 1e-3, capture_radius: float = 1e-2,
                     angle_tol: float = 1e-3,
                     loops: list | None = None) -> list[CutProfile]:
    focal = focal_times_batch(b, N, atlas)
    if loops is None:
        _, loops = loop_scan(b, N, atlas, capture_radius, angle_tol)
    profiles = []
    for j, f in enumerate(atlas.frames):
        rho, flags = cut_time(atlas, j, tol)
        # a geodesic never minimizes past its first focal point; the excess
        # crossing lands late at focal-type cuts (cubic growth), so the focal
        # time is both a hard bound and the sharper estimate there
        if focal[j] < rho:
            rho = float(focal[j])
            flags["focal_clipped"] = True
            flags["no_cut"] = False
        p, _ = atlas.path_point(j, rho)
        profiles.append(CutProfile(j, f.s, f.side, rho, b.wrap(p),
                                   flags["no_cut"], float(focal[j]),
                                   loops[j], flags))
    return profiles


def tangential_cut_locus(atlas: WavefrontAtlas, tol: float = 1e-3):
    """(frame, cut time) over the full direction set, in direction order."""
    out = []
    for j, f in enumerate(atlas.frames):
        rho, _flags = cut_time(atlas, j, tol)
        out.append((f, rho))
    return out


@dataclass
class PointCloud:
    """Compact subset sample with provenance and dedup radius."""

    backend: Backend
    points: np.ndarray
    dir_idx: np.ndarray
    dedup_radius: float


def cut_locus_cloud(b: Backend, profiles: list[CutProfile],
                    dedup_radius: float = 1e-6) -> PointCloud:
    pts = np.array([p.cut_point for p in profiles if not p.no_cut])
    dirs = np.array([p.dir_idx for p in profiles if not p.no_cut], dtype=int)
    if not len(pts):
        return PointCloud(b, np.empty((0, b.dim)), dirs, dedup_radius)
    keep = np.ones(len(pts), dtype=bool)
    for i in range(len(pts)):
        if not keep[i]:
            continue
        d = b.aux_distance(pts[i + 1:], pts[i])
        keep[i + 1:] &= d > dedup_radius
    return PointCloud(b, pts[keep], dirs[keep], dedup_radius)


@dataclass
class SepPoint:
    point: np.ndarray
    dir_idx: list[int]
    multiplicity: int
    flag: str   # "sep", "focal", or "both"


def separating_points(b: Backend, N: SubmanifoldSpec,
                      profiles: list[CutProfile], pair_tol: float,
                      frame_tol: float = 1e-3, focal_tol: float = 5e-3
                      ) -> list[SepPoint]:
    """Cluster cut points; clusters reached by >= 2 distinct initial frames
    are separating candidates, with the non-exclusive focal dichotomy flag."""
    prof = [p for p in profiles if not p.no_cut]
    n = len(prof)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            di = float(b.aux_distance(prof[i].cut_point, prof[j].cut_point))
            if di <= pair_tol:
                parent[find(i)] = find(j)
    clusters: dict[int, list[int]] = {}
    for i in range(n):
        clusters.setdefault(find(i), []).append(i)
    out = []
    for members in clusters.values():
        frames = [(prof[i].s, prof[i].side) for i in members]
        distinct = _distinct_frames(N, frames, frame_tol)
        focal = any(np.isfinite(prof[i].focal_t)
                    and abs(prof[i].focal_t - prof[i].rho) <= focal_tol
                    for i in members)
        if distinct >= 2:
            flag = "both" if focal else "sep"
        elif focal:
            flag = "focal"
        else:
            continue
        pts = np.array([prof[i].cut_point for i in members])
        out.append(SepPoint(np.mean(pts, axis=0),
                            [prof[i].dir_idx for i in members],
                            distinct, flag))
    return out


def _distinct_frames(N, frames, frame_tol):
    distinct = []
    for s, side in frames:
        new = True
        for s2, side2 in distinct:
            if N.dim == 1 and side != side2:
                continue
            ds = abs(s - s2)
            period = 1.0 if N.dim == 1 else 2.0 * np.pi
            ds = min(ds % period, period - ds % period)
            if ds <= frame_tol and (N.dim == 0 or side == side2):
                new = False
                break
        if new:
            distinct.append((s, side))
    return len(distinct)


def f_min(focal: np.ndarray) -> float:
    return float(np.min(focal)) if len(focal) else np.inf


def injectivity_radius_direct(profiles: list[CutProfile]) -> float:
    """Inf of cut times over the direction set."""
    return float(min(p.rho for p in profiles))


def injectivity_radius_char(fmin: float, l_half: float,
                            tie_tol: float = 5e-3) -> tuple[float, str]:
    """min(first focal distance, half shortest loop), with branch label."""
    if not np.isfinite(fmin) and not np.isfinite(l_half):
        return np.inf, "inconclusive: increase t_max"
    value = min(fmin, l_half)
    if abs(fmin - l_half) <= tie_tol:
        branch = "both"
    elif fmin < l_half:
        branch = "focal"
    else:
        branch = "loop"
    return float(value), branch


def warner_bound(K_bound: float, Delta: float) -> dict:
    """Focal-free length bounds from curvature and principal-curvature data.

    Returns the printed variant arctan(K/Delta)/sqrt(K) and the standard
    comparison form arctan(sqrt(K)/Delta)/sqrt(K); both tend to
    pi/(2 sqrt(K)) as Delta -> 0.
    """
    if K_bound <= 0.0:
        raise ValueError("warner_bound needs K_bound > 0; flat or negatively "
                         "curved cases have no focal points from kappa >= 0")
    rk = math.sqrt(K_bound)
    if Delta <= 0.0:
        lim = 0.5 * math.pi / rk
        return {"eps_paper": lim, "eps_std": lim}
    return {"eps_paper": math.atan(K_bound / Delta) / rk,
            "eps_std": math.atan(rk / Delta) / rk}
