"""Surface backends: periodic-chart metrics and implicit surfaces in 3-space.

Points and tangent vectors are plain numpy arrays (shape (2,) for chart
backends, (3,) for implicit surfaces).  All backend methods accept batched
inputs with the coordinate axis last.  Backends are immutable; every
operation is a pure function of its inputs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class GeometryError(Exception):
    """Raised for degenerate metric data (non-SPD, non-finite, mismatch)."""


# ---------------------------------------------------------------------------
# scalar fields (conformal exponents, perturbation bumps)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalarField:
    """Named smooth scalar field with the parameters that built it."""

    name: str
    params: dict
    fn: Callable[[np.ndarray], np.ndarray]

    def __call__(self, pts):
        return self.fn(np.asarray(pts, dtype=float))


def chart_scalar_field(name: str, periods, **params) -> ScalarField:
    """Built-in periodic scalar fields on a chart with the given periods."""
    L1, L2 = float(periods[0]), float(periods[1])
    if name == "constant":
        c = float(params.get("value", 0.0))
        fn = lambda p: np.full(p.shape[:-1], c)
    elif name == "sine-x":
        a = float(params.get("amplitude", 1.0))
        k = int(params.get("harmonic", 1))
        fn = lambda p: a * np.sin(2.0 * np.pi * k * p[..., 0] / L1)
    elif name == "sine-y":
        a = float(params.get("amplitude", 1.0))
        k = int(params.get("harmonic", 1))
        fn = lambda p: a * np.sin(2.0 * np.pi * k * p[..., 1] / L2)
    elif name == "bump-xy":
        a = float(params.get("amplitude", 1.0))
        fn = lambda p: (a * np.sin(2.0 * np.pi * p[..., 0] / L1)
                        * np.sin(2.0 * np.pi * p[..., 1] / L2))
    else:
        raise GeometryError(f"unknown chart scalar field {name!r}")
    return ScalarField(name, dict(params), fn)


def ambient_scalar_field(name: str, **params) -> ScalarField:
    """Built-in scalar fields on 3-space (conformal exponents for surfaces)."""
    if name == "constant":
        c = float(params.get("value", 0.0))
        fn = lambda p: np.full(p.shape[:-1], c)
    elif name == "linear-z":
        a = float(params.get("amplitude", 1.0))
        fn = lambda p: a * p[..., 2]
    elif name == "sine-z":
        a = float(params.get("amplitude", 1.0))
        k = float(params.get("wavenumber", 1.0))
        fn = lambda p: a * np.sin(k * p[..., 2])
    else:
        raise GeometryError(f"unknown ambient scalar field {name!r}")
    return ScalarField(name, dict(params), fn)


ZERO_FIELD = ScalarField("constant", {"value": 0.0},
                         lambda p: np.zeros(p.shape[:-1]))


# ---------------------------------------------------------------------------
# chart metric fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChartMetricField:
    """Map from chart points (n, 2) to symmetric 2x2 tensors (n, 2, 2)."""

    name: str
    params: dict
    fn: Callable[[np.ndarray], np.ndarray]

    def __call__(self, pts):
        return self.fn(np.asarray(pts, dtype=float))


def chart_metric_field(name: str, periods, **params) -> ChartMetricField:
    L1, L2 = float(periods[0]), float(periods[1])

    def _diag(f11, f22):
        def fn(p):
            g = np.zeros(p.shape[:-1] + (2, 2))
            g[..., 0, 0] = f11(p)
            g[..., 1, 1] = f22(p)
            return g
        return fn

    if name == "flat":
        fn = _diag(lambda p: np.ones(p.shape[:-1]),
                   lambda p: np.ones(p.shape[:-1]))
    elif name == "warped-diag":
        a = float(params.get("amplitude", 0.2))
        k = int(params.get("harmonic", 1))
        b = lambda p: 1.0 + a * np.sin(2.0 * np.pi * k * p[..., 0] / L1)
        fn = _diag(lambda p: np.ones(p.shape[:-1]), lambda p: b(p) ** 2)
    elif name == "warped-diag-g22":
        # diag(1, 1 + a sin 2pi k x): g22 itself perturbed, not its square root
        a = float(params.get("amplitude", 0.1))
        k = int(params.get("harmonic", 1))
        fn = _diag(lambda p: np.ones(p.shape[:-1]),
                   lambda p: 1.0 + a * np.sin(2.0 * np.pi * k * p[..., 0] / L1))
    elif name == "conformal-bump":
        a = float(params.get("amplitude", 0.1))
        phi = chart_scalar_field("bump-xy", (L1, L2), amplitude=a)

        def fn(p):
            g = np.zeros(p.shape[:-1] + (2, 2))
            w = np.exp(2.0 * phi(p))
            g[..., 0, 0] = w
            g[..., 1, 1] = w
            return g
    else:
        raise GeometryError(f"unknown chart metric field {name!r}")
    return ChartMetricField(name, dict(params), fn)


def conformal_chart_field(base: ChartMetricField, phi: ScalarField,
                          tau: float) -> ChartMetricField:
    def fn(p):
        w = np.exp(2.0 * tau * phi(p))
        return base(p) * w[..., None, None]
    return ChartMetricField(f"conformal({base.name})",
                            {"base": base.params, "phi": phi.name, "tau": tau},
                            fn)


def blended_chart_field(g0: ChartMetricField, g1: ChartMetricField,
                        tau: float) -> ChartMetricField:
    def fn(p):
        return (1.0 - tau) * g0(p) + tau * g1(p)
    return ChartMetricField(f"blend({g0.name},{g1.name})", {"tau": tau}, fn)


# ---------------------------------------------------------------------------
# periodic chart backend
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PeriodicChart:
    """Torus-like chart [0, L1) x [0, L2) with a smooth periodic metric field.

    Chart coordinates stay unwrapped during integration (the metric field is
    periodic); only ``wrap``/``aux_gap`` reduce modulo the periods.
    """

    periods: tuple[float, float]
    metric_field: ChartMetricField
    fd_step: float = 1e-4       # Christoffel finite differences
    curv_step: float = 1e-3     # second differences for Gauss curvature
    kind: str = field(default="PeriodicChart", init=False)

    @property
    def dim(self) -> int:
        return 2

    # -- metric ------------------------------------------------------------

    def metric(self, pts, check: bool = True) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        g = self.metric_field(pts)
        if check:
            if not np.all(np.isfinite(g)):
                bad = pts[~np.all(np.isfinite(g), axis=(-2, -1))]
                raise GeometryError(f"non-finite metric entries at {bad[:1]}")
            det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]
            if np.any(det <= 1e-12) or np.any(g[..., 0, 0] <= 0.0):
                bad = pts[(det <= 1e-12) | (g[..., 0, 0] <= 0.0)]
                raise GeometryError(f"metric not positive definite at {bad[:1]}")
        return g

    def inner(self, pts, v, w) -> np.ndarray:
        g = self.metric(pts)
        return np.einsum("...ij,...i,...j->...", g, v, w)

    def norm(self, pts, v) -> np.ndarray:
        return np.sqrt(np.maximum(self.inner(pts, v, v), 0.0))

    def lam_sqrt_max(self, pts) -> np.ndarray:
        """sqrt of the largest metric eigenvalue (chart-gap -> g-length bound)."""
        g = self.metric(pts, check=False)
        a, b2, c = g[..., 0, 0], g[..., 0, 1], g[..., 1, 1]
        lam = 0.5 * (a + c + np.sqrt((a - c) ** 2 + 4.0 * b2 ** 2))
        return np.sqrt(lam)

    # -- Christoffel action ------------------------------------------------

    def _metric_jet(self, pts):
        h = self.fd_step
        e1 = np.array([h, 0.0])
        e2 = np.array([0.0, h])
        g = self.metric(pts)
        dg = np.empty(pts.shape[:-1] + (2, 2, 2))   # dg[..., l, i, j] = d_l g_ij
        dg[..., 0, :, :] = (self.metric(pts + e1, check=False)
                            - self.metric(pts - e1, check=False)) / (2.0 * h)
        dg[..., 1, :, :] = (self.metric(pts + e2, check=False)
                            - self.metric(pts - e2, check=False)) / (2.0 * h)
        return g, dg

    def gamma2(self, pts, v) -> np.ndarray:
        """Gamma^k_ij v^i v^j, the quadratic Christoffel action on v."""
        pts = np.asarray(pts, dtype=float)
        v = np.asarray(v, dtype=float)
        g, dg = self._metric_jet(pts)
        det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]
        if np.any(np.abs(det) <= 1e-12):
            raise GeometryError("singular metric in christoffel_apply")
        ginv = np.empty_like(g)
        ginv[..., 0, 0] = g[..., 1, 1] / det
        ginv[..., 1, 1] = g[..., 0, 0] / det
        ginv[..., 0, 1] = -g[..., 0, 1] / det
        ginv[..., 1, 0] = -g[..., 1, 0] / det
        # cov_l = d_i g_jl v^i v^j - 1/2 d_l g_ij v^i v^j, with dg[l, i, j] = d_l g_ij
        a = np.einsum("...ijl,...i,...j->...l", dg, v, v)
        b = np.einsum("...lij,...i,...j->...l", dg, v, v)
        cov = a - 0.5 * b
        return np.einsum("...kl,...l->...k", ginv, cov)

    def christoffel_mixed(self, pts, u, w) -> np.ndarray:
        """Bilinear Christoffel action Gamma(u, w) via polarization."""
        up = self.gamma2(pts, u + w)
        um = self.gamma2(pts, u - w)
        return 0.25 * (up - um)

    # -- curvature ---------------------------------------------------------

    def gauss_curvature(self, pts) -> np.ndarray:
        """Gauss curvature via the Brioschi formula with central differences."""
        pts = np.asarray(pts, dtype=float)
        h = self.curv_step
        e1 = np.array([h, 0.0])
        e2 = np.array([0.0, h])

        def comp(p):
            g = self.metric_field(p)
            return g[..., 0, 0], g[..., 0, 1], g[..., 1, 1]

        E, F, G = comp(pts)
        Eu_p, Fu_p, Gu_p = comp(pts + e1)
        Eu_m, Fu_m, Gu_m = comp(pts - e1)
        Ev_p, Fv_p, Gv_p = comp(pts + e2)
        Ev_m, Fv_m, Gv_m = comp(pts - e2)
        E_u = (Eu_p - Eu_m) / (2 * h)
        F_u = (Fu_p - Fu_m) / (2 * h)
        G_u = (Gu_p - Gu_m) / (2 * h)
        E_v = (Ev_p - Ev_m) / (2 * h)
        F_v = (Fv_p - Fv_m) / (2 * h)
        G_v = (Gv_p - Gv_m) / (2 * h)
        E_vv = (Ev_p - 2 * E + Ev_m) / h ** 2
        G_uu = (Gu_p - 2 * G + Gu_m) / h ** 2
        Fpp = comp(pts + e1 + e2)[1]
        Fpm = comp(pts + e1 - e2)[1]
        Fmp = comp(pts - e1 + e2)[1]
        Fmm = comp(pts - e1 - e2)[1]
        F_uv = (Fpp - Fpm - Fmp + Fmm) / (4 * h ** 2)

        def det3(a11, a12, a13, a21, a22, a23, a31, a32, a33):
            return (a11 * (a22 * a33 - a23 * a32)
                    - a12 * (a21 * a33 - a23 * a31)
                    + a13 * (a21 * a32 - a22 * a31))

        m1 = det3(-0.5 * E_vv + F_uv - 0.5 * G_uu, 0.5 * E_u, F_u - 0.5 * E_v,
                  F_v - 0.5 * G_u, E, F,
                  0.5 * G_v, F, G)
        m2 = det3(0.0, 0.5 * E_v, 0.5 * G_u,
                  0.5 * E_v, E, F,
                  0.5 * G_u, F, G)
        det = E * G - F ** 2
        return (m1 - m2) / det ** 2

    # -- auxiliary (Hausdorff) distance -------------------------------------

    def wrap(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        L = np.array(self.periods)
        return np.mod(pts, L)

    def aux_gap(self, p, q) -> np.ndarray:
        """Wraparound chart displacement q - p, each component in [-L/2, L/2)."""
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        L = np.array(self.periods)
        d = np.mod(q - p + 0.5 * L, L) - 0.5 * L
        return d

    def aux_distance(self, p, q) -> np.ndarray:
        return np.sqrt(np.sum(self.aux_gap(p, q) ** 2, axis=-1))

    # integration hooks (no constraint for charts)
    def constrain_point(self, pts):
        return pts

    def constrain_velocity(self, pts, v):
        return v


# ---------------------------------------------------------------------------
# implicit surface backend
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LevelSurface:
    """Level function h with analytic gradient and Hessian."""

    name: str
    params: dict
    h: Callable
    grad: Callable
    hess: Callable


def level_surface(name: str, **params) -> LevelSurface:
    if name == "sphere":
        r = float(params.get("radius", 1.0))

        def h(p):
            return np.sum(p * p, axis=-1) - r * r

        def grad(p):
            return 2.0 * p

        def hess(p):
            return np.broadcast_to(2.0 * np.eye(3), p.shape[:-1] + (3, 3)).copy()
    elif name == "ellipsoid":
        ax = np.array([float(a) for a in params.get("semi_axes", (1, 1, 1))])

        def h(p):
            return np.sum((p / ax) ** 2, axis=-1) - 1.0

        def grad(p):
            return 2.0 * p / ax ** 2

        def hess(p):
            return np.broadcast_to(np.diag(2.0 / ax ** 2),
                                   p.shape[:-1] + (3, 3)).copy()
    else:
        raise GeometryError(f"unknown implicit surface {name!r}")
    return LevelSurface(name, dict(params), h, grad, hess)


@dataclass(frozen=True)
class ImplicitSurface:
    """Surface {h = 0} in 3-space with metric e^{2 psi} * (induced)."""

    surface: LevelSurface
    psi: ScalarField = ZERO_FIELD
    fd_step: float = 1e-5       # psi gradient differences
    curv_step: float = 1e-3     # surface Laplacian of psi
    proj_tol: float = 1e-11
    kind: str = field(default="ImplicitSurface", init=False)

    @property
    def dim(self) -> int:
        return 3

    @property
    def periods(self):
        return None

    # -- constraint --------------------------------------------------------

    def project(self, pts) -> np.ndarray:
        """Newton projection onto {h = 0} along grad h."""
        x = np.array(pts, dtype=float)
        for _ in range(30):
            hv = self.surface.h(x)
            if np.all(np.abs(hv) <= self.proj_tol):
                break
            g = self.surface.grad(x)
            x = x - (hv / np.sum(g * g, axis=-1))[..., None] * g
        else:
            raise GeometryError("implicit projection did not converge")
        return x

    def unit_surface_normal(self, pts) -> np.ndarray:
        g = self.surface.grad(np.asarray(pts, dtype=float))
        return g / np.linalg.norm(g, axis=-1, keepdims=True)

    def tangent_project(self, pts, v) -> np.ndarray:
        n = self.unit_surface_normal(pts)
        return v - np.sum(v * n, axis=-1, keepdims=True) * n

    # -- metric ------------------------------------------------------------

    def conformal_weight(self, pts) -> np.ndarray:
        return np.exp(2.0 * self.psi(pts))

    def inner(self, pts, v, w) -> np.ndarray:
        return self.conformal_weight(pts) * np.sum(
            np.asarray(v, float) * np.asarray(w, float), axis=-1)

    def norm(self, pts, v) -> np.ndarray:
        return np.sqrt(np.maximum(self.inner(pts, v, v), 0.0))

    def lam_sqrt_max(self, pts) -> np.ndarray:
        return np.exp(self.psi(pts))

    def psi_gradient(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        h = self.fd_step
        out = np.empty_like(pts)
        for i in range(3):
            e = np.zeros(3)
            e[i] = h
            out[..., i] = (self.psi(pts + e) - self.psi(pts - e)) / (2.0 * h)
        return out

    # -- geodesic acceleration ----------------------------------------------

    def gamma2(self, pts, v) -> np.ndarray:
        """Quadratic acceleration term: x'' = -gamma2(x, v) stays on surface
        and follows the geodesics of e^{2 psi} * induced metric."""
        pts = np.asarray(pts, dtype=float)
        v = np.asarray(v, dtype=float)
        g = self.surface.grad(pts)
        H = self.surface.hess(pts)
        vHv = np.einsum("...ij,...i,...j->...", H, v, v)
        gg = np.sum(g * g, axis=-1)
        acc = (vHv / gg)[..., None] * g
        if self.psi is not ZERO_FIELD:
            dpsi = self.psi_gradient(pts)
            dpsi_t = self.tangent_project(pts, dpsi)
            vv = np.sum(v * v, axis=-1)
            acc = (acc + 2.0 * np.sum(dpsi * v, axis=-1)[..., None] * v
                   - vv[..., None] * dpsi_t)
        return acc

    def christoffel_mixed(self, pts, u, w) -> np.ndarray:
        up = self.gamma2(pts, u + w)
        um = self.gamma2(pts, u - w)
        return 0.25 * (up - um)

    # -- curvature ---------------------------------------------------------

    def _induced_curvature(self, pts) -> np.ndarray:
        """Gauss curvature of the level set (Goldman's adjugate formula)."""
        g = self.surface.grad(pts)
        H = self.surface.hess(pts)
        # adjugate of a 3x3 symmetric matrix
        A = np.empty_like(H)
        for i in range(3):
            for j in range(3):
                r = [k for k in range(3) if k != i]
                c = [k for k in range(3) if k != j]
                minor = (H[..., r[0], c[0]] * H[..., r[1], c[1]]
                         - H[..., r[0], c[1]] * H[..., r[1], c[0]])
                A[..., j, i] = (-1.0) ** (i + j) * minor
        num = np.einsum("...ij,...i,...j->...", A, g, g)
        den = np.sum(g * g, axis=-1) ** 2
        return num / den

    def _surface_laplacian(self, fld: ScalarField, pts) -> np.ndarray:
        """Laplace-Beltrami of a scalar field on the induced metric, by
        second differences along projected tangent steps."""
        pts = np.asarray(pts, dtype=float)
        eps = self.curv_step
        n = self.unit_surface_normal(pts)
        e1, e2 = _tangent_frame(n)
        f0 = fld(pts)
        out = np.zeros(pts.shape[:-1])
        for e in (e1, e2):
            fp = fld(self.project(pts + eps * e))
            fm = fld(self.project(pts - eps * e))
            out = out + (fp - 2.0 * f0 + fm) / eps ** 2
        return out

    def gauss_curvature(self, pts) -> np.ndarray:
        K = self._induced_curvature(np.asarray(pts, dtype=float))
        if self.psi is not ZERO_FIELD:
            lap = self._surface_laplacian(self.psi, pts)
            K = (K - lap) / self.conformal_weight(pts)
        return K

    # -- auxiliary distance -------------------------------------------------

    def wrap(self, pts):
        return np.asarray(pts, dtype=float)

    def aux_gap(self, p, q) -> np.ndarray:
        return np.asarray(q, dtype=float) - np.asarray(p, dtype=float)

    def aux_distance(self, p, q) -> np.ndarray:
        return np.linalg.norm(self.aux_gap(p, q), axis=-1)

    def constrain_point(self, pts):
        return self.project(pts)

    def constrain_velocity(self, pts, v):
        return self.tangent_project(pts, v)


def _tangent_frame(n: np.ndarray):
    """Orthonormal frame spanning the plane orthogonal to unit vectors n."""
    n = np.asarray(n, dtype=float)
    ref = np.zeros_like(n)
    # pick the axis least aligned with n, per point
    idx = np.argmin(np.abs(n), axis=-1)
    flat = ref.reshape(-1, 3)
    flat[np.arange(flat.shape[0]), idx.ravel()] = 1.0
    e1 = np.cross(n, ref)
    e1 = e1 / np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(n, e1)
    return e1, e2


Backend = PeriodicChart | ImplicitSurface


# ---------------------------------------------------------------------------
# spec-level operations
# ---------------------------------------------------------------------------

def metric_eval(b: Backend, p, v, w) -> float:
    """g_p(v, w)."""
    return b.inner(p, v, w)


def christoffel_apply(b: Backend, p, v) -> np.ndarray:
    """Quadratic Christoffel action Gamma(p)(v, v)."""
    return b.gamma2(p, v)


def gauss_curvature(b: Backend, p) -> np.ndarray:
    return b.gauss_curvature(p)


def aux_distance(b: Backend, p, q) -> np.ndarray:
    """Auxiliary comparison distance: wraparound chart / ambient chordal."""
    return b.aux_distance(p, q)


def conformal_family(b: Backend, phi: ScalarField, tau: float) -> Backend:
    """Backend with metric e^{2 tau phi} g; tau = 0 is metrically identical."""
    if isinstance(b, PeriodicChart):
        if tau == 0.0:
            return b
        return PeriodicChart(b.periods,
                             conformal_chart_field(b.metric_field, phi, tau),
                             fd_step=b.fd_step, curv_step=b.curv_step)
    if tau == 0.0 and b.psi is ZERO_FIELD:
        return b
    base_psi = b.psi
    name = f"{base_psi.name}+{tau}*{phi.name}"
    combined = ScalarField(name, {"tau": tau},
                           lambda p: base_psi(p) + tau * phi(p))
    return ImplicitSurface(b.surface, psi=combined, fd_step=b.fd_step,
                           curv_step=b.curv_step, proj_tol=b.proj_tol)


def linear_blend(b0: PeriodicChart, b1: PeriodicChart, tau: float) -> PeriodicChart:
    """Chart backend with metric (1 - tau) g0 + tau g1."""
    if not (isinstance(b0, PeriodicChart) and isinstance(b1, PeriodicChart)):
        raise GeometryError("linear_blend requires two PeriodicChart backends")
    if b0.periods != b1.periods:
        raise GeometryError("linear_blend requires identical chart periods")
    if tau == 0.0:
        return b0
    if tau == 1.0:
        return b1
    return PeriodicChart(b0.periods,
                         blended_chart_field(b0.metric_field, b1.metric_field, tau),
                         fd_step=b0.fd_step, curv_step=b0.curv_step)


def same_backend_family(a: Backend, b: Backend) -> bool:
    if isinstance(a, PeriodicChart) and isinstance(b, PeriodicChart):
        return a.periods == b.periods
    return isinstance(a, ImplicitSurface) and isinstance(b, ImplicitSurface)
