"""Geodesic integration: RK4 on the geodesic ODE, exponential maps,
and the finite-difference Jacobian of the normal exponential map."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .geometry import Backend, ImplicitSurface, PeriodicChart


class IntegrationError(Exception):
    """Raised when a geodesic integration violates its drift budget."""

    def __init__(self, msg, t=None):
        super().__init__(msg)
        self.t = t


DRIFT_BUDGET = 1e-6  # unit-speed drift allowance per unit length


@dataclass
class BatchPaths:
    """Time-sampled batch of geodesics sharing one grid.

    pos/vel have shape (k, n, d); t has shape (n,).
    """

    backend: Backend
    t: np.ndarray
    pos: np.ndarray
    vel: np.ndarray
    dt: float
    termination: str
    drift: np.ndarray  # per-path max speed drift

    @property
    def n_paths(self) -> int:
        return self.pos.shape[0]

    def path(self, i: int) -> "GeodesicPath":
        return GeodesicPath(self.backend, self.t.copy(), self.pos[i].copy(),
                            self.vel[i].copy(), self.dt, self.termination,
                            float(self.drift[i]))

    def sample_at(self, i: int, t: float):
        """Cubic-Hermite position/velocity of path i at arbitrary time t."""
        return hermite_sample(self.t, self.pos[i], self.vel[i], t)


@dataclass
class GeodesicPath:
    """Single time-sampled geodesic with step metadata."""

    backend: Backend
    t: np.ndarray
    pos: np.ndarray
    vel: np.ndarray
    dt: float
    termination: str
    drift: float

    def sample_at(self, t: float):
        return hermite_sample(self.t, self.pos, self.vel, t)

    def endpoint(self) -> np.ndarray:
        return self.pos[-1]

    def write_csv(self, fh) -> None:
        d = self.pos.shape[1]
        w = csv.writer(fh)
        w.writerow(["t"] + [f"x{i+1}" for i in range(d)]
                   + [f"v{i+1}" for i in range(d)] + ["speed"])
        speed = self.backend.norm(self.pos, self.vel)
        for k in range(len(self.t)):
            row = ([self.t[k]] + list(self.pos[k]) + list(self.vel[k])
                   + [speed[k]])
            w.writerow([f"{x:.17g}" for x in row])


def hermite_sample(tg: np.ndarray, pos: np.ndarray, vel: np.ndarray, t: float):
    """Cubic Hermite interpolation of (pos, vel) at time t on grid tg."""
    t = float(t)
    if t <= tg[0]:
        return pos[0].copy(), vel[0].copy()
    if t >= tg[-1]:
        return pos[-1].copy(), vel[-1].copy()
    i = int(np.searchsorted(tg, t, side="right")) - 1
    h = tg[i + 1] - tg[i]
    s = (t - tg[i]) / h
    p0, p1 = pos[i], pos[i + 1]
    m0, m1 = vel[i] * h, vel[i + 1] * h
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    p = h00 * p0 + h10 * m0 + h01 * p1 + h11 * m1
    d00 = (6 * s**2 - 6 * s) / h
    d10 = (3 * s**2 - 4 * s + 1) / h
    d01 = (-6 * s**2 + 6 * s) / h
    d11 = (3 * s**2 - 2 * s) / h
    v = d00 * p0 + d10 * m0 + d01 * p1 + d11 * m1
    return p, v


def _rhs(b: Backend, x: np.ndarray, v: np.ndarray):
    return v, -b.gamma2(x, v)


def integrate_batch(b: Backend, p0: np.ndarray, v0: np.ndarray,
                    t_max: float, dt: float,
                    drift_budget: float = DRIFT_BUDGET) -> BatchPaths:
    """Classical fixed-step RK4 on (x' = v, v' = -Gamma(x)(v, v)).

    Implicit surfaces are re-projected onto {h = 0} after every step and the
    velocity is re-tangentialized with its pre-projection norm restored.
    """
    if t_max <= 0.0 or dt <= 0.0:
        raise ValueError("t_max and dt must be positive")
    p0 = np.atleast_2d(np.asarray(p0, dtype=float))
    v0 = np.atleast_2d(np.asarray(v0, dtype=float))
    n_steps = int(np.ceil(t_max / dt - 1e-12))
    tg = np.empty(n_steps + 1)
    tg[:-1] = dt * np.arange(n_steps)
    tg[-1] = t_max
    k, d = p0.shape
    pos = np.empty((k, n_steps + 1, d))
    vel = np.empty((k, n_steps + 1, d))
    pos[:, 0] = p0
    vel[:, 0] = v0
    implicit = isinstance(b, ImplicitSurface)
    x, v = p0.copy(), v0.copy()
    for i in range(n_steps):
        h = tg[i + 1] - tg[i]
        k1x, k1v = _rhs(b, x, v)
        k2x, k2v = _rhs(b, x + 0.5 * h * k1x, v + 0.5 * h * k1v)
        k3x, k3v = _rhs(b, x + 0.5 * h * k2x, v + 0.5 * h * k2v)
        k4x, k4v = _rhs(b, x + h * k3x, v + h * k3v)
        x = x + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
        v = v + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
        if implicit:
            speed = b.norm(x, v)
            x = b.project(x)
            v = b.tangent_project(x, v)
            new_speed = b.norm(x, v)
            scale = np.where(new_speed > 0.0, speed / np.maximum(new_speed, 1e-300), 1.0)
            v = v * scale[..., None]
        pos[:, i + 1] = x
        vel[:, i + 1] = v
    speeds = b.norm(pos, vel)
    drift = np.max(np.abs(speeds - speeds[:, :1]), axis=1)
    budget = drift_budget * max(1.0, t_max) * max(1.0, float(np.max(speeds[:, 0])) if k else 1.0)
    if k and np.max(drift) > budget:
        j = int(np.argmax(drift))
        t_bad = float(tg[int(np.argmax(np.abs(speeds[j] - speeds[j, 0])))])
        raise IntegrationError(
            f"speed drift {np.max(drift):.3e} exceeds budget {budget:.3e}",
            t=t_bad)
    return BatchPaths(b, tg, pos, vel, dt, "t_max", drift)


def integrate_geodesic(b: Backend, p, v, t_max: float, dt: float,
                       drift_budget: float = DRIFT_BUDGET) -> GeodesicPath:
    batch = integrate_batch(b, np.asarray(p, float)[None, :],
                            np.asarray(v, float)[None, :], t_max, dt,
                            drift_budget)
    return batch.path(0)


def exp_map(b: Backend, p, v, dt: float = 1e-3) -> np.ndarray:
    """exp_p(v): integrate to t = 1 with ||v||_g-scaled steps."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    speed = float(b.norm(p, v))
    if speed == 0.0:
        return p.copy()
    vhat = v / speed
    return integrate_geodesic(b, p, vhat, speed, dt).endpoint()


def normal_exp(b: Backend, frame, t: float, dt: float = 1e-3) -> np.ndarray:
    """gamma_n(t) for a unit normal frame produced by the submanifold module."""
    if t == 0.0:
        return np.asarray(frame.base, dtype=float).copy()
    return integrate_geodesic(b, frame.base, frame.n, t, dt).endpoint()


# ---------------------------------------------------------------------------
# Jacobian of the normal exponential map
# ---------------------------------------------------------------------------

@dataclass
class NormalExpJacobian:
    """det d(s, r) -> exp^nu(r n(s)) along one normal direction, on a t-grid."""

    t: np.ndarray
    det: np.ndarray
    fd: float
    fd_warning: bool

    def sign_change_brackets(self):
        s = np.sign(self.det)
        idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
        return [(float(self.t[i]), float(self.t[i + 1])) for i in idx]

    def first_zero(self, refine: bool = True):
        br = self.sign_change_brackets()
        if not br:
            return None
        lo, hi = br[0]
        if not refine:
            return 0.5 * (lo + hi)
        # linear (secant) zero inside the bracket
        dlo = float(np.interp(lo, self.t, self.det))
        dhi = float(np.interp(hi, self.t, self.det))
        if dhi == dlo:
            return 0.5 * (lo + hi)
        return lo - dlo * (hi - lo) / (dhi - dlo)


def normal_exp_jacobian(b: Backend, frame_fn, s0: float, side,
                        t_max: float, dt: float, fd: float = 1e-4
                        ) -> NormalExpJacobian:
    """Finite-difference Jacobian determinant of (s, r) -> exp^nu(r n(s)).

    ``frame_fn(s, side)`` must return a unit normal frame; for a point
    submanifold s is the direction angle.  The r-derivative is the exact
    geodesic velocity; the s-derivative is a central difference of whole
    geodesics, so one call integrates three paths and evaluates det on the
    full t-grid.  A Richardson disagreement above 10% between fd and 2*fd
    sets ``fd_warning``.
    """
    frames = [frame_fn(s0 - 2 * fd, side), frame_fn(s0 - fd, side),
              frame_fn(s0, side), frame_fn(s0 + fd, side),
              frame_fn(s0 + 2 * fd, side)]
    p0 = np.stack([f.base for f in frames])
    v0 = np.stack([f.n for f in frames])
    batch = integrate_batch(b, p0, v0, t_max, dt)
    ds1 = (batch.pos[3] - batch.pos[1]) / (2.0 * fd)
    ds2 = (batch.pos[4] - batch.pos[0]) / (4.0 * fd)
    dr = batch.vel[2]
    det1 = _pair_det(b, batch.pos[2], ds1, dr)
    det2 = _pair_det(b, batch.pos[2], ds2, dr)
    scale = np.maximum(np.max(np.abs(det1)), 1e-30)
    warn = bool(np.max(np.abs(det1 - det2)) > 0.10 * scale)
    return NormalExpJacobian(batch.t.copy(), det1, fd, warn)


def _pair_det(b: Backend, base: np.ndarray, a: np.ndarray, c: np.ndarray):
    """2D determinant of the pair (a, c) in chart or ambient-tangent coords."""
    if isinstance(b, PeriodicChart):
        return a[:, 0] * c[:, 1] - a[:, 1] * c[:, 0]
    n = b.unit_surface_normal(base)
    cross = np.cross(a, c)
    return np.sum(cross * n, axis=-1)
