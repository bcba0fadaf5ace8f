"""Independent oracles used by the test suite.

Everything here is implemented separately from the package (plain Python /
closed forms) so that agreement is evidence, not tautology.
"""
import math

import numpy as np


# -- Christoffel symbols of a diagonal chart metric diag(a(x), c(x)) --------
# From the standard coordinate formula 2 Gamma^l_ij = g^{lk}(d_i g_jk +
# d_j g_ik - d_k g_ij) with g diagonal and x-dependent only:
#   Gamma^x_xx = a'/(2a)   Gamma^x_yy = -c'/(2a)   Gamma^y_xy = c'/(2c)
def diag_metric_christoffel_action(a, da, c, dc, v):
    vx, vy = v
    out = np.zeros(2)
    out[0] = da / (2 * a) * vx * vx - dc / (2 * a) * vy * vy
    out[1] = dc / c * vx * vy
    return out


# -- Gauss curvature of diag(1, b(x)^2) is -b''(x)/b(x) ---------------------
def warped_curvature(amplitude, x, L1=1.0):
    w = 2 * math.pi / L1
    b = 1.0 + amplitude * math.sin(w * x)
    bpp = -amplitude * w * w * math.sin(w * x)
    return -bpp / b


# -- great circles on the radius-r sphere -----------------------------------
def great_circle(p0, v0, t):
    """Unit-speed geodesic of the round sphere through p0 with direction v0."""
    p0 = np.asarray(p0, float)
    v0 = np.asarray(v0, float)
    r = np.linalg.norm(p0)
    u = v0 / np.linalg.norm(v0)
    return np.cos(t / r) * p0 + r * np.sin(t / r) * u


# -- exact distance fields on the flat unit torus ---------------------------
def flat_torus_line_distance(q):
    """d to the line {y = 0} on the flat torus [0,1)^2."""
    y = q[1] % 1.0
    return min(y, 1.0 - y)


def flat_torus_point_distance(p, q):
    dx = abs((q[0] - p[0] + 0.5) % 1.0 - 0.5)
    dy = abs((q[1] - p[1] + 0.5) % 1.0 - 0.5)
    return math.hypot(dx, dy)


# -- brute-force Hausdorff distance (pure Python double loop) ---------------
def brute_hausdorff(A, B, dist):
    def one_sided(P, Q):
        worst = 0.0
        for p in P:
            best = math.inf
            for q in Q:
                d = dist(p, q)
                if d < best:
                    best = d
            if best > worst:
                worst = best
        return worst

    return max(one_sided(A, B), one_sided(B, A))


def chart_aux_dist(p, q, L=(1.0, 1.0)):
    s = 0.0
    for i in range(len(p)):
        d = abs((q[i] - p[i] + 0.5 * L[i]) % L[i] - 0.5 * L[i])
        s += d * d
    return math.sqrt(s)


def chordal_dist(p, q):
    return math.sqrt(sum((a - b) ** 2 for a, b in zip(p, q)))


# -- fine-scan cut time on a stored geodesic --------------------------------
def fine_scan_cut_time(distance_fn, path_fn, t_max, step):
    """First t (to within step) where d(N, gamma(t)) < t - step, scanned on a
    grid 10x finer than the production solver uses; returns the midpoint of
    the bracketing interval."""
    t = step
    prev = 0.0
    while t <= t_max:
        if t - distance_fn(path_fn(t)) > step:
            return 0.5 * (prev + t)
        prev = t
        t += step
    return math.inf


# -- scalar Jacobi closed forms under constant curvature --------------------
def jacobi_first_zero_const_K(K, kappa, dim):
    """First zero of y'' + K y = 0 with curve (y=1, y'=kappa) or point
    (y=0, y'=1) initial data; math.inf if none."""
    if dim == 0:
        return math.pi / math.sqrt(K) if K > 0 else math.inf
    if K > 0:
        rk = math.sqrt(K)
        # y = cos(rk t) + (kappa/rk) sin(rk t)
        return math.atan2(1.0, -kappa / rk) / rk
    if K == 0:
        return -1.0 / kappa if kappa < 0 else math.inf
    rk = math.sqrt(-K)
    if kappa < -rk:
        return math.atanh(-rk / kappa) / rk
    return math.inf
