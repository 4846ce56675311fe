"""Level-set front evolution: oscillatory, stationary and effective solves.

The oscillatory problem u_t + a(x/eps)|Du| = 0 runs on the environment
grid reinterpreted at physical spacing eps * cell_h, so the velocity
needs no resampling.  The effective problem is solved both by a monotone
vertex-max scheme on the Wulff polygon and by the Hopf-Lax formula,
which is exact in time for support-function Hamiltonians.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from . import backend
from .errors import (ConfigurationError, NumericalError, ParameterError,
                     ResolutionWarning)

SQRT2 = math.sqrt(2.0)


@dataclass
class GridFunction:
    """A solution snapshot on a uniform physical grid."""

    values: np.ndarray
    h: float
    t: float
    epsilon: float = float("nan")
    cfl: float = float("nan")
    meta: dict | None = None

    def grid(self):
        n0, n1 = self.values.shape
        x = (np.arange(n0) + 0.5) * self.h
        y = (np.arange(n1) + 0.5) * self.h
        return np.meshgrid(x, y, indexing="ij")


@dataclass
class EvolutionConfig:
    scheme: str = "godunov_upwind"
    cfl_target: float = 0.45
    boundary: str = "periodic"
    T: float = 0.25

    def validate(self):
        if self.scheme != "godunov_upwind":
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        if not 0 < self.cfl_target <= 0.45:
            raise ConfigurationError(
                f"cfl_target={self.cfl_target} violates the 0.45 bound")
        if self.boundary not in ("periodic", "extrapolating"):
            raise ConfigurationError(f"unknown boundary {self.boundary!r}")
        if self.T <= 0:
            raise ConfigurationError(f"T={self.T} must be > 0")


# ----------------------------------------------------------------------
# initial data menu

@dataclass
class RadialInitialData:
    """u0(x) = profile(|x - center|) with a nondecreasing profile."""

    center: tuple
    profile: object
    lipschitz: float

    def __call__(self, X, Y):
        return self.profile(np.hypot(X - self.center[0], Y - self.center[1]))


def u0_cone(center, slope=1.0):
    return RadialInitialData(center=tuple(center),
                             profile=lambda r: slope * r, lipschitz=slope)


def u0_bump(center, width=0.15):
    prof = lambda r: -np.exp(-0.5 * (r / width) ** 2)
    return RadialInitialData(center=tuple(center), profile=prof,
                             lipschitz=math.exp(-0.5) / width)


def u0_plane(p):
    p = tuple(p)
    return lambda X, Y: p[0] * X + p[1] * Y


def sample_initial(u0, n, h):
    if callable(u0):
        x = (np.arange(n) + 0.5) * h
        X, Y = np.meshgrid(x, x, indexing="ij")
        return np.asarray(u0(X, Y), dtype=float)
    return np.array(u0, dtype=float)


def grid_interpolant(values, h):
    """Bilinear, edge-clamped interpolant of a cell-centered grid."""
    vals = np.asarray(values, dtype=float)
    n0, n1 = vals.shape

    def f(X, Y):
        gi = np.clip(X / h - 0.5, 0.0, n0 - 1.0)
        gj = np.clip(Y / h - 0.5, 0.0, n1 - 1.0)
        i0 = np.minimum(gi.astype(int), n0 - 2)
        j0 = np.minimum(gj.astype(int), n1 - 2)
        fi = gi - i0
        fj = gj - j0
        return (vals[i0, j0] * (1 - fi) * (1 - fj)
                + vals[i0 + 1, j0] * fi * (1 - fj)
                + vals[i0, j0 + 1] * (1 - fi) * fj
                + vals[i0 + 1, j0 + 1] * fi * fj)

    return f


# ----------------------------------------------------------------------
def _march(u, step_fn, dt_base, targets, t0=0.0):
    """Advance with fixed steps, clipping to land exactly on each target."""
    snaps = []
    t = t0
    for target in targets:
        while target - t > 1e-12 * max(target, 1.0):
            dt = min(dt_base, target - t)
            u = step_fn(u, dt)
            t += dt
        t = target
        snaps.append((t, u.copy()))
    return snaps


def solve_oscillatory(env, u0, epsilon, config, sample_times=None):
    """Godunov/Rouy-Tourin evolution of u_t + a(x/eps)|Du| = 0.

    Returns one GridFunction per sample time (default: just config.T).
    """
    config.validate()
    if not 0 < epsilon <= 1:
        raise ParameterError(f"epsilon={epsilon} outside (0, 1]")
    cells_per_cube = 1.0 / env.cell_h
    if cells_per_cube < 8:
        warnings.warn(
            f"{cells_per_cube:.0f} cells per unit cube under-resolves the "
            "oscillation (>= 8 recommended)", ResolutionWarning)
    h = epsilon * env.cell_h
    a = env.a_field
    max_a = float(np.abs(a).max())
    if sample_times is None:
        sample_times = [config.T]
    sample_times = sorted(sample_times)
    dt_base = (config.cfl_target * h / (SQRT2 * max_a)) if max_a > 0 \
        else float(sample_times[-1])
    periodic = config.boundary == "periodic"

    u = sample_initial(u0, env.grid_size, h)
    step = lambda v, dt: backend.hj_step(v, a, dt, h, periodic)
    return [GridFunction(values=vals, h=h, t=t, epsilon=epsilon,
                         cfl=config.cfl_target)
            for t, vals in _march(u, step, dt_base, sample_times)]


def solve_stationary(env, p, epsilon, config, tol=1e-8, max_iter=200000,
                     check_every=50):
    """Damped fixed-point solve of w + a(x/eps)|p + Dw| = 0.

    Pseudo-time iteration of w_t + w + a|p+Dw| = 0 to steady state; the
    residual is max|w + a|p+Dw|| measured on the discrete operator.
    """
    config.validate()
    if not 0 < epsilon <= 1:
        raise ParameterError(f"epsilon={epsilon} outside (0, 1]")
    h = epsilon * env.cell_h
    a = env.a_field
    max_a = float(np.abs(a).max())
    p1, p2 = float(p[0]), float(p[1])
    periodic = config.boundary == "periodic"
    dt = min(config.cfl_target * h / (SQRT2 * max_a), 0.5) if max_a > 0 else 0.5

    w = np.zeros_like(a)
    residual = np.inf
    iterations = 0
    while iterations < max_iter:
        for _ in range(check_every):
            w_new = backend.stationary_step(w, a, p1, p2, dt, h, periodic)
            iterations += 1
            w_prev, w = w, w_new
        residual = float(np.abs(w - w_prev).max()) / dt
        if residual < tol:
            break
    else:
        raise NumericalError(
            f"stationary solve: residual {residual:.3e} after {max_iter} steps")

    bound = max_a * math.hypot(p1, p2)
    sup = float(np.abs(w).max())
    if sup > bound + 1e-7:
        raise NumericalError(
            f"sup bound violated: |w|={sup:.6g} > |a||p|={bound:.6g}")
    return GridFunction(values=w, h=h, t=math.inf, epsilon=epsilon,
                        cfl=config.cfl_target,
                        meta={"residual": residual, "iterations": iterations,
                              "p": (p1, p2), "sup_bound": bound})


def solve_effective_fd(h_eff, u0, config, grid_size, box, sample_times=None):
    """Monotone vertex-max scheme for u_t + H(Du) = 0, H polygonal."""
    config.validate()
    h = box / grid_size
    if sample_times is None:
        sample_times = [config.T]
    sample_times = sorted(sample_times)
    u = sample_initial(u0, grid_size, h)
    if h_eff.sign == "zero" or len(h_eff.wulff_vertices) == 0:
        return [GridFunction(values=u.copy(), h=h, t=t, cfl=config.cfl_target)
                for t in sample_times]
    vmax = h_eff.max_speed()
    dt_base = config.cfl_target * h / (SQRT2 * vmax)
    periodic = config.boundary == "periodic"
    concave = h_eff.sign == "negative"
    verts = np.ascontiguousarray(h_eff.wulff_vertices, dtype=float)

    step = lambda v, dt: backend.effective_step(v, verts, dt, h, periodic,
                                                concave)
    return [GridFunction(values=vals, h=h, t=t, cfl=config.cfl_target)
            for t, vals in _march(u, step, dt_base, sample_times)]


# ----------------------------------------------------------------------
def _ccw_hull(vertices):
    pts = np.asarray(vertices, dtype=float)
    hull = ConvexHull(pts)
    return pts[hull.vertices]


def _dist_to_polygon(Q1, Q2, poly):
    """Distance from points (Q1, Q2) to a convex ccw polygon (0 inside)."""
    k = len(poly)
    inside = np.ones_like(Q1, dtype=bool)
    dmin = np.full_like(Q1, np.inf)
    for idx in range(k):
        a = poly[idx]
        b = poly[(idx + 1) % k]
        e1, e2 = b[0] - a[0], b[1] - a[1]
        w1, w2 = Q1 - a[0], Q2 - a[1]
        inside &= (e1 * w2 - e2 * w1) >= 0
        ee = e1 * e1 + e2 * e2
        s = np.clip((w1 * e1 + w2 * e2) / ee, 0.0, 1.0) if ee > 0 else 0.0
        dx = w1 - s * e1
        dy = w2 - s * e2
        dmin = np.minimum(dmin, np.sqrt(dx * dx + dy * dy))
    return np.where(inside, 0.0, dmin)


def _polygon_samples(poly, spacing):
    """Boundary subdivision plus scaled interior rings of a convex polygon."""
    pts = []
    k = len(poly)
    rmax = float(np.max(np.hypot(poly[:, 0], poly[:, 1])))
    n_rings = max(int(math.ceil(rmax / spacing)), 1)
    for ring in range(1, n_rings + 1):
        s = ring / n_rings
        for idx in range(k):
            a = poly[idx] * s
            b = poly[(idx + 1) % k] * s
            seg = math.hypot(b[0] - a[0], b[1] - a[1])
            m = max(int(math.ceil(seg / spacing)), 1)
            for q in range(m):
                w = q / m
                pts.append((a[0] + w * (b[0] - a[0]),
                            a[1] + w * (b[1] - a[1])))
    pts.append((0.0, 0.0))
    return np.array(pts)


def solve_effective_hopflax(h_eff, u0, t, grid_size, box):
    """Hopf-Lax evaluation of the effective evolution at time t.

    Convex case: u(x,t) = min over t*K of u0(x - v); concave reflects to a
    max.  Radial nondecreasing data is evaluated exactly through the
    distance to the polygon; generic data is minimized over a dense
    polygon sampling.
    """
    h = box / grid_size
    x = (np.arange(grid_size) + 0.5) * h
    X, Y = np.meshgrid(x, x, indexing="ij")
    if t < 0:
        raise ParameterError(f"t={t} must be >= 0")
    if h_eff.sign == "zero" or len(h_eff.wulff_vertices) == 0 or t == 0:
        return GridFunction(values=sample_initial(u0, grid_size, h), h=h, t=t)

    poly = _ccw_hull(h_eff.wulff_vertices) * t
    concave = h_eff.sign == "negative"

    if isinstance(u0, RadialInitialData):
        Q1 = X - u0.center[0]
        Q2 = Y - u0.center[1]
        if not concave:
            r = _dist_to_polygon(Q1, Q2, poly)
        else:
            # farthest point of a convex set is attained at a vertex
            r = np.zeros_like(Q1)
            for v in poly:
                r = np.maximum(r, np.hypot(Q1 + v[0], Q2 + v[1]))
        vals = u0.profile(r)
        return GridFunction(values=vals, h=h, t=t)

    f = u0 if callable(u0) else grid_interpolant(np.asarray(u0, dtype=float), h)
    samples = _polygon_samples(poly, spacing=h / 2)
    out = None
    for vx, vy in samples:
        cand = f(X + vx, Y + vy) if concave else f(X - vx, Y - vy)
        if out is None:
            out = np.asarray(cand, dtype=float)
        elif concave:
            out = np.maximum(out, cand)
        else:
            out = np.minimum(out, cand)
    return GridFunction(values=out, h=h, t=t)
