"""Random media on a finite box: signed, capped-distance velocity fields.

A sample is a per-cell velocity a with |a| <= 1/2, a > 0 outside the
obstacle region, a < 0 inside, and a = 0 on the cell layer hugging the
phase interface, so the discrete Lipschitz constant is 1 by construction.
Cell values are min(distance to the zero layer / box frame, 1/2) with the
appropriate sign; distances come from the exact Euclidean distance
transform of the zero layer.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import distance_transform_edt

from .errors import DomainError, ParameterError, ResourceError

CAP = 0.5
POISSON_POINT_BUDGET = 10**7


@dataclass
class EnvironmentSample:
    """One realization of the random medium on a square grid."""

    grid_size: int
    cell_h: float
    seed: int | None
    kind: str
    params: dict = field(default_factory=dict)
    obstacle_mask: np.ndarray = None
    a_field: np.ndarray = None
    lipschitz_L: float = 1.0

    @property
    def box_size(self):
        return self.grid_size * self.cell_h

    def cell_centers(self):
        """1D array of cell-center coordinates along one axis."""
        return (np.arange(self.grid_size) + 0.5) * self.cell_h


def _zero_layer(obstacle_mask, periodic=False):
    """Cells 4-adjacent to the opposite phase (both sides of the interface)."""
    m = obstacle_mask
    zero = np.zeros_like(m, dtype=bool)
    dr = m[1:, :] != m[:-1, :]
    zero[1:, :] |= dr
    zero[:-1, :] |= dr
    dc = m[:, 1:] != m[:, :-1]
    zero[:, 1:] |= dc
    zero[:, :-1] |= dc
    if periodic:
        wr = m[0, :] != m[-1, :]
        zero[0, :] |= wr
        zero[-1, :] |= wr
        wc = m[:, 0] != m[:, -1]
        zero[:, 0] |= wc
        zero[:, -1] |= wc
    return zero


def _frame_distance(n, cell_h):
    """Distance from each cell center to the box frame."""
    x = (np.arange(n) + 0.5) * cell_h
    d1 = np.minimum(x, n * cell_h - x)
    return np.minimum.outer(d1, d1)


def build_sample(obstacle_mask, cell_h, kind, params, seed, periodic=False):
    """Assemble a sample from an obstacle mask: zero layer, EDT, sign, cap.

    With periodic=True, distances wrap around the box (computed on a 3x3
    tiling) and the frame damping is dropped, so the field is exactly
    periodic; otherwise the box frame acts as additional boundary.
    """
    mask = np.asarray(obstacle_mask, dtype=bool)
    n = mask.shape[0]
    if mask.shape != (n, n):
        raise ParameterError(f"obstacle mask must be square, got {mask.shape}")
    zero = _zero_layer(mask, periodic=periodic)
    if zero.any():
        if periodic:
            tiled = np.tile(~zero, (3, 3))
            d = distance_transform_edt(tiled, sampling=cell_h)[n:2 * n, n:2 * n]
        else:
            d = distance_transform_edt(~zero, sampling=cell_h)
    else:
        d = np.full(mask.shape, np.inf)
    if not periodic:
        d = np.minimum(d, _frame_distance(n, cell_h))
    a = np.minimum(d, CAP)
    a[mask] *= -1.0
    a[zero] = 0.0
    params = dict(params)
    params["periodic"] = periodic
    return EnvironmentSample(
        grid_size=n,
        cell_h=float(cell_h),
        seed=seed,
        kind=kind,
        params=params,
        obstacle_mask=mask,
        a_field=a,
    )


def _check_cell_h(cell_h):
    per_unit = 1.0 / cell_h
    if abs(per_unit - round(per_unit)) > 1e-9 or per_unit < 1:
        raise ParameterError(f"cell_h={cell_h} must divide the unit cube")
    return int(round(per_unit))


def gen_site_percolation(p, grid_size, cell_h, seed, periodic=False):
    """Unit cubes open with probability p; black cubes form the obstacle."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"open probability p={p} outside [0, 1]")
    if grid_size < 2:
        raise ParameterError(f"grid_size={grid_size} must be >= 2")
    per_unit = _check_cell_h(cell_h)
    if grid_size % per_unit:
        raise ParameterError(
            f"grid_size={grid_size} not a multiple of cells per cube {per_unit}")
    n_cubes = grid_size // per_unit
    rng = np.random.default_rng(seed)
    open_cubes = rng.random((n_cubes, n_cubes)) < p
    return sample_from_cubes(open_cubes, cell_h, "site_percolation",
                             {"p": p}, seed, periodic=periodic)


def sample_from_cubes(open_cubes, cell_h, kind, params, seed, periodic=False):
    """Expand a per-unit-cube open/closed mask to cells and build a sample."""
    per_unit = _check_cell_h(cell_h)
    mask = np.repeat(np.repeat(~open_cubes, per_unit, axis=0), per_unit, axis=1)
    params = dict(params)
    params["n_cubes"] = open_cubes.shape[0]
    params["open_fraction"] = float(np.mean(open_cubes))
    return build_sample(mask, cell_h, kind, params, seed, periodic=periodic)


def gen_poisson_cloud(intensity, radius, box_size, cell_h, seed,
                      radius_range=None):
    """Closed balls at Poisson points; negative inside, positive outside.

    radius_range=(lo, hi) switches to i.i.d. uniform radii on [lo, hi].
    """
    if intensity <= 0:
        raise ParameterError(f"intensity={intensity} must be > 0")
    if not 0 < radius < box_size / 4:
        raise ParameterError(f"radius={radius} outside (0, box_size/4)")
    expected = intensity * box_size * box_size
    if expected > POISSON_POINT_BUDGET:
        raise ResourceError(
            f"expected point count {expected:.3g} exceeds {POISSON_POINT_BUDGET:g}")
    grid_size = box_size / cell_h
    if abs(grid_size - round(grid_size)) > 1e-9:
        raise ParameterError("box_size must be a whole number of cells")
    n = int(round(grid_size))

    rng = np.random.default_rng(seed)
    count = int(rng.poisson(expected))
    pts = rng.random((count, 2)) * box_size
    if radius_range is None:
        radii = np.full(count, float(radius))
    else:
        lo, hi = radius_range
        if not 0 < lo <= hi < box_size / 4:
            raise ParameterError(f"radius_range={radius_range} invalid")
        radii = rng.uniform(lo, hi, size=count)

    mask = np.zeros((n, n), dtype=bool)
    centers = (np.arange(n) + 0.5) * cell_h
    for (px, py), r in zip(pts, radii):
        i0 = max(int((px - r) / cell_h) - 1, 0)
        i1 = min(int((px + r) / cell_h) + 2, n)
        j0 = max(int((py - r) / cell_h) - 1, 0)
        j1 = min(int((py + r) / cell_h) + 2, n)
        dx = centers[i0:i1, None] - px
        dy = centers[None, j0:j1] - py
        mask[i0:i1, j0:j1] |= dx * dx + dy * dy <= r * r
    return build_sample(mask, cell_h, "poisson_cloud",
                        {"intensity": intensity, "radius": radius,
                         "radius_range": radius_range, "box_size": box_size,
                         "n_points": count}, seed)


def gen_checkerboard(period, grid_size, cell_h, periodic=False):
    """Deterministic alternating tiles of the given period."""
    per_tile = period / cell_h
    if abs(per_tile - round(per_tile)) > 1e-9 or per_tile < 1:
        raise ParameterError(f"period={period} must be a whole number of cells")
    per_tile = int(round(per_tile))
    if grid_size % per_tile:
        raise ParameterError(
            f"period={period} does not divide box size {grid_size * cell_h}")
    idx = np.arange(grid_size) // per_tile
    mask = (idx[:, None] + idx[None, :]) % 2 == 1
    tiles = grid_size // per_tile
    return build_sample(mask, cell_h, "checkerboard", {"period": period}, None,
                        periodic=periodic and tiles % 2 == 0)


def gen_ball_obstacles(p_ball, radius, n_cubes, cell_h, seed, periodic=False):
    """Isolated-obstacle medium: each unit cube holds a centered closed ball
    with probability p_ball; the complement is always connected."""
    if not 0.0 <= p_ball <= 1.0:
        raise ParameterError(f"p_ball={p_ball} outside [0, 1]")
    if not 0 < radius < 0.5:
        raise ParameterError(f"radius={radius} must keep the ball inside its cube")
    per_unit = _check_cell_h(cell_h)
    n = n_cubes * per_unit
    rng = np.random.default_rng(seed)
    has_ball = rng.random((n_cubes, n_cubes)) < p_ball

    centers = (np.arange(per_unit) + 0.5) * cell_h - 0.5
    d2 = centers[:, None] ** 2 + centers[None, :] ** 2
    tile = d2 <= radius * radius
    mask = np.zeros((n, n), dtype=bool)
    for ci, cj in zip(*np.nonzero(has_ball)):
        mask[ci * per_unit:(ci + 1) * per_unit,
             cj * per_unit:(cj + 1) * per_unit] = tile
    return build_sample(mask, cell_h, "ball_obstacles",
                        {"p_ball": p_ball, "radius": radius,
                         "n_cubes": n_cubes}, seed, periodic=periodic)


def uniform_sample(value, grid_size, cell_h):
    """Constant-speed calibration medium (no frame damping, no obstacles)."""
    if value == 0:
        raise ParameterError("uniform velocity must be nonzero")
    a = np.full((grid_size, grid_size), float(value))
    return EnvironmentSample(
        grid_size=grid_size, cell_h=float(cell_h), seed=None, kind="uniform",
        params={"value": value},
        obstacle_mask=np.full((grid_size, grid_size), value < 0, dtype=bool),
        a_field=a,
    )


def translate_sample(env, z):
    """Periodic shift by z (length units): a'(x) = a(x + z mod box).

    Stationarity test harness; z must be a whole number of cells.
    """
    shift = np.asarray(z, dtype=float) / env.cell_h
    cells = np.round(shift).astype(int)
    if np.max(np.abs(shift - cells)) > 1e-9:
        raise ParameterError(f"shift {z} is not a whole number of cells")
    a = np.roll(env.a_field, (-cells[0], -cells[1]), axis=(0, 1))
    mask = np.roll(env.obstacle_mask, (-cells[0], -cells[1]), axis=(0, 1))
    params = dict(env.params)
    params["translated_by"] = tuple(np.asarray(z, dtype=float))
    return EnvironmentSample(
        grid_size=env.grid_size, cell_h=env.cell_h, seed=env.seed,
        kind=env.kind, params=params, obstacle_mask=mask, a_field=a,
    )


def crop_sample(env, n_cells, periodic=False):
    """Rebuild a sample from the leading n_cells x n_cells obstacle block.

    The velocity is recomputed so the crop carries its own frame damping;
    used for nested same-realization boxes in the convergence experiments.
    """
    if n_cells > env.grid_size:
        raise ParameterError(f"crop {n_cells} exceeds grid {env.grid_size}")
    params = dict(env.params)
    params["cropped_from"] = env.grid_size
    params.pop("periodic", None)
    return build_sample(env.obstacle_mask[:n_cells, :n_cells], env.cell_h,
                        env.kind, params, env.seed, periodic=periodic)


def value_at(env, points):
    """Bilinear sample of the velocity at continuum points (edge-clamped)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    g = pts / env.cell_h - 0.5
    i0 = np.clip(np.floor(g).astype(int), 0, env.grid_size - 2)
    f = np.clip(g - i0, 0.0, 1.0)
    a = env.a_field
    v = (a[i0[:, 0], i0[:, 1]] * (1 - f[:, 0]) * (1 - f[:, 1])
         + a[i0[:, 0] + 1, i0[:, 1]] * f[:, 0] * (1 - f[:, 1])
         + a[i0[:, 0], i0[:, 1] + 1] * (1 - f[:, 0]) * f[:, 1]
         + a[i0[:, 0] + 1, i0[:, 1] + 1] * f[:, 0] * f[:, 1])
    return v if np.asarray(points).ndim > 1 else float(v[0])


def discrete_lipschitz(env):
    """Max |a(x)-a(y)|/h over 4-adjacent cell pairs (certifies L)."""
    a, h = env.a_field, env.cell_h
    dr = np.abs(np.diff(a, axis=0)).max(initial=0.0)
    dc = np.abs(np.diff(a, axis=1)).max(initial=0.0)
    return max(dr, dc) / h


def cell_of(env, point):
    """Grid cell containing a continuum point."""
    i = int(point[0] / env.cell_h)
    j = int(point[1] / env.cell_h)
    if not (0 <= i < env.grid_size and 0 <= j < env.grid_size):
        raise DomainError(f"point {point} outside the box")
    return i, j
