"""Subadditive ray averaging of the travel-time metric.

The per-unit-rate metric is averaged along a fan of rays: travel times at
radii t are extrapolated in 1/t to their large-t intercept, per sample,
then averaged over the ensemble.  Rays crossing excursions outside the
delta-interior are linearly interpolated across the gap; rays that never
re-enter before the box edge are discarded from the average.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, ParameterError, StructuralError
from .metric import solve_metric_dijkstra, solve_metric_fmm
from .topology import label_components, traverse_ray


def fan_directions(count=64):
    """Unit vectors at equally spaced angles."""
    ang = 2.0 * np.pi * np.arange(count) / count
    return np.column_stack([np.cos(ang), np.sin(ang)])


def _ray_intervals(env, labeling, component_id, direction, delta, origin):
    """Per-cell ray intervals with an in-U^delta flag."""
    out = []
    keep = (labeling.labels == component_id) & (labeling.abs_a > delta)
    for i, j, t0, t1 in traverse_ray(origin, direction, env.cell_h,
                                     env.grid_size):
        out.append((t0, t1, i, j, bool(keep[i, j])))
    return out


def shifted_source(env, labeling, component_id, direction, delta,
                   origin=None):
    """First cell along the ray inside U^delta (the shifted origin)."""
    if origin is None:
        c = env.box_size / 2
        origin = (c, c)
    for t0, t1, i, j, inside in _ray_intervals(env, labeling, component_id,
                                               direction, delta, origin):
        if inside:
            return (i, j), t0
    raise StructuralError(
        f"ray {tuple(direction)} never meets U^delta of component "
        f"{component_id}")


def ray_travel_time(field_, env, labeling, direction, t, delta, origin=None):
    """Travel-time value at the ray point t*direction, gap-interpolated.

    Returns (value, status); status is "inside", "interpolated" or
    "truncated" (no re-entry before the box edge; value is nan).
    """
    if origin is None:
        c = env.box_size / 2
        origin = (c, c)
    intervals = _ray_intervals(env, labeling, field_.component_id, direction,
                               delta, origin)
    return _eval_on_intervals(field_, intervals, t)


class _RayTrace:
    """Preprocessed ray: per-cell intervals plus in-set lookup arrays."""

    def __init__(self, field_, intervals):
        self.vals = field_.values
        self.t0 = np.array([iv[0] for iv in intervals])
        self.t1 = np.array([iv[1] for iv in intervals])
        self.cell_value = np.array([
            float(self.vals[iv[2], iv[3]]) for iv in intervals])
        self.inside = np.array([iv[4] for iv in intervals], dtype=bool)
        self.t_end = float(self.t1[-1]) if len(intervals) else 0.0

    def eval(self, t):
        if len(self.t0) == 0 or t >= self.t_end or t < self.t0[0]:
            return math.nan, "truncated"
        k = int(np.searchsorted(self.t1, t, side="right"))
        if self.inside[k]:
            return float(self.cell_value[k]), "inside"
        ins = np.nonzero(self.inside)[0]
        pos = int(np.searchsorted(ins, k))
        if pos == 0 or pos == len(ins):
            return math.nan, "truncated"
        kb, ka = ins[pos - 1], ins[pos]
        t_star = float(self.t1[kb])
        t_up = float(self.t0[ka])
        alpha = (t - t_star) / (t_up - t_star)
        v = (1.0 - alpha) * self.cell_value[kb] + alpha * self.cell_value[ka]
        return v, "interpolated"


def _eval_on_intervals(field_, intervals, t):
    return _RayTrace(field_, intervals).eval(t)


@dataclass
class AveragedMetric:
    """Directional estimates of the unit-rate averaged metric."""

    directions: np.ndarray
    mbar1: np.ndarray
    ci: np.ndarray
    delta: float
    eta: float
    mu: float
    samples: int
    t_grid: tuple
    mbar1_half: np.ndarray = None
    ci_half: np.ndarray = None
    excluded: dict = field(default_factory=dict)
    truncated_fraction: float = 0.0

    @property
    def mbar(self):
        """Estimates at the requested rate: mu times the unit-rate profile."""
        return self.mu * self.mbar1

    def delta_diagnostic(self):
        """|mbar1(delta) - mbar1(delta/2)| per direction (nan if not run)."""
        if self.mbar1_half is None:
            return np.full(len(self.mbar1), np.nan)
        return np.abs(self.mbar1 - self.mbar1_half)

    def value_at(self, y):
        """1-homogeneous extension with angular interpolation on the fan."""
        y = np.asarray(y, dtype=float)
        r = np.hypot(y[0], y[1])
        if r == 0:
            return 0.0
        count = len(self.directions)
        ang = math.atan2(y[1], y[0]) % (2.0 * math.pi)
        pos = ang / (2.0 * math.pi) * count
        k = int(pos) % count
        w = pos - int(pos)
        return r * ((1.0 - w) * self.mbar1[k] + w * self.mbar1[(k + 1) % count])


def _solver(method):
    if method == "fmm":
        return solve_metric_fmm
    if method == "dijkstra8":
        return solve_metric_dijkstra
    raise ParameterError(f"unknown metric method {method!r}")


def estimate_mbar(envs, delta=None, directions=64, t_grid=(8.0, 14.0, 20.0),
                  mu=1.0, eta=0.05, method="fmm", component="spanning+",
                  seed_radius=6, check_delta0=True, delta_check=True):
    """Ensemble estimate of the averaged metric on a direction fan.

    Per sample and direction, travel times m(t y)/t from the shifted
    origin are regressed against 1/t; the intercept estimates the limit.
    Samples without a spanning component (or violating the
    delta-connectivity precondition) are excluded and counted.
    The delta-independence diagnostic reruns the ray extraction at
    delta/2 on the same fields.
    """
    if mu <= 0:
        raise ParameterError(f"mu={mu} must be > 0")
    if len(t_grid) < 3:
        raise InsufficientDataError(f"need >= 3 radii, got t_grid={t_grid}")
    envs = list(envs)
    if not envs:
        raise InsufficientDataError("empty ensemble")
    fan = fan_directions(directions)

    if delta is None:
        delta = 0.1 * float(np.abs(envs[0].a_field).max())

    per_dir = [[] for _ in range(directions)]
    per_dir_half = [[] for _ in range(directions)]
    excluded = {"no_spanning": 0, "delta0": 0}
    n_rays = 0
    n_truncated = 0
    usable_samples = 0

    for env in envs:
        labeling = label_components(env)
        sign = "+" if component.endswith("+") else "-"
        cid = labeling.spanning_id(sign) if component.startswith("spanning") \
            else int(component)
        if cid is None:
            excluded["no_spanning"] += 1
            continue
        if check_delta0 and delta >= labeling.delta0_of(cid):
            excluded["delta0"] += 1
            continue
        usable_samples += 1
        c = env.box_size / 2
        origin = (c, c)
        fields = {}

        for which, dl, sink in (("base", delta, per_dir),
                                ("half", delta / 2, per_dir_half)):
            if which == "half" and not delta_check:
                continue
            for d in range(directions):
                y = fan[d]
                try:
                    src, _ = shifted_source(env, labeling, cid, y, dl, origin)
                except StructuralError:
                    continue
                if src not in fields:
                    fields[src] = _solver(method)(
                        env, labeling, cid, src, 1.0,
                        **({"seed_radius": seed_radius}
                           if method == "fmm" else {}))
                fld = fields[src]
                trace = _RayTrace(
                    fld, _ray_intervals(env, labeling, cid, y, dl, origin))
                pts = []
                for t in t_grid:
                    v, status = trace.eval(t)
                    if which == "base":
                        n_rays += 1
                    if status == "truncated":
                        if which == "base":
                            n_truncated += 1
                        continue
                    pts.append((t, v))
                if len(pts) < 3:
                    continue
                x = np.array([1.0 / t for t, _ in pts])
                g = np.array([v / t for t, v in pts])
                slope_intercept = np.polyfit(x, g, 1)
                sink[d].append(slope_intercept[1])

    if usable_samples == 0:
        raise StructuralError(
            f"no usable samples (excluded: {excluded})")
    bad = [d for d in range(directions) if not per_dir[d]]
    if bad:
        raise InsufficientDataError(
            f"no usable radii for directions {bad[:8]}...")

    def reduce(sink):
        means = np.array([np.mean(v) if v else np.nan for v in sink])
        cis = np.array([
            1.96 * np.std(v, ddof=1) / math.sqrt(len(v)) if len(v) > 1 else 0.0
            for v in sink])
        return means, cis

    mbar1, ci = reduce(per_dir)
    if delta_check:
        mbar1_half, ci_half = reduce(per_dir_half)
    else:
        mbar1_half = ci_half = None

    return AveragedMetric(
        directions=fan, mbar1=mbar1, ci=ci, delta=delta, eta=eta, mu=float(mu),
        samples=usable_samples, t_grid=tuple(t_grid), mbar1_half=mbar1_half,
        ci_half=ci_half, excluded=excluded,
        truncated_fraction=n_truncated / n_rays if n_rays else 0.0)


def periodic_mbar_profile(master, delta=0.05, directions=64, reps=5,
                          t_window=(0.45, 0.95), method="fmm", seed_radius=6,
                          n_sources=12):
    """Averaged metric of a periodized sample from tiled multi-source solves.

    The master is tiled reps x reps; travel times from several sources
    spread over the central period are fitted as m = mbar * r + c per
    angular sector, pooling all interior cells with radius in t_window
    (fractions of the half box).  Sector pooling over sources averages
    out the near-boundary blow-up bumps and corridor fluctuations that
    defeat per-ray extrapolation on a single realization.  Returns an
    AveragedMetric with zero ci.
    """
    from .media import build_sample

    tiled = build_sample(np.tile(master.obstacle_mask, (reps, reps)),
                         master.cell_h, master.kind, master.params,
                         master.seed, periodic=True)
    labeling = label_components(tiled)
    cid = labeling.spanning_id("+")
    if cid is None:
        raise StructuralError("no spanning component in tiled sample")
    fan = fan_directions(directions)
    c = tiled.box_size / 2
    period = master.box_size
    half = tiled.box_size / 2

    # sources: in-set cells nearest to a sub-lattice of the central period
    keep0 = (labeling.labels == cid) & (labeling.abs_a > delta)
    rows0, cols0 = np.nonzero(keep0)
    grid_k = max(int(math.ceil(math.sqrt(n_sources))), 1)
    sources = []
    for gi in range(grid_k):
        for gj in range(grid_k):
            if len(sources) == n_sources:
                break
            px = c + (gi + 0.5) / grid_k * period - period / 2
            py = c + (gj + 0.5) / grid_k * period - period / 2
            k = np.argmin((rows0 * tiled.cell_h - px) ** 2
                          + (cols0 * tiled.cell_h - py) ** 2)
            cell = (int(rows0[k]), int(cols0[k]))
            if cell not in sources:
                sources.append(cell)

    rr_all = [[] for _ in range(directions)]
    mm_all = [[] for _ in range(directions)]
    for src in sources:
        field_ = _solver(method)(tiled, labeling, cid, src, 1.0,
                                 **({"seed_radius": seed_radius}
                                    if method == "fmm" else {}))
        keep = keep0 & np.isfinite(field_.values)
        rows, cols = np.nonzero(keep)
        x = (rows - src[0]) * tiled.cell_h
        y = (cols - src[1]) * tiled.cell_h
        r = np.hypot(x, y)
        window = (r >= t_window[0] * half) & (r <= t_window[1] * half)
        ang = np.arctan2(y[window], x[window]) % (2.0 * math.pi)
        sector = (ang / (2.0 * math.pi) * directions + 0.5).astype(int) \
            % directions
        rr = r[window]
        mm = field_.values[rows[window], cols[window]]
        for d in range(directions):
            sel = sector == d
            rr_all[d].append(rr[sel])
            mm_all[d].append(mm[sel])

    mbar1 = np.empty(directions)
    for d in range(directions):
        rr = np.concatenate(rr_all[d])
        mm = np.concatenate(mm_all[d])
        if rr.size < 8:
            raise InsufficientDataError(f"sector {d}: {rr.size} cells")
        mbar1[d] = np.polyfit(rr, mm, 1)[0]
    return AveragedMetric(directions=fan, mbar1=mbar1,
                          ci=np.zeros(directions), delta=delta, eta=0.05,
                          mu=1.0, samples=len(sources),
                          t_grid=(t_window[0] * half, t_window[1] * half))


@dataclass
class BoundaryLiminfReport:
    """Near-boundary ray statistic against the interior estimate."""

    mbar_ray: float
    liminf_est: float
    defect: float
    n_boundary_cells: int
    flag: str


def boundary_liminf_check(field_, env, labeling, direction, delta,
                          t_min_frac=0.3, origin=None):
    """Compare min over near-boundary ray cells of m/t with the interior
    per-ray estimate; positive defect flags mass below the averaged limit."""
    if origin is None:
        c = env.box_size / 2
        origin = (c, c)
    comp = field_.component_id
    vals = field_.values
    inside_last = None
    boundary = []
    t_last = 0.0
    for i, j, t0, t1 in traverse_ray(origin, direction, env.cell_h,
                                     env.grid_size):
        t_mid = 0.5 * (t0 + t1)
        t_last = t1
        if labeling.labels[i, j] != comp or not np.isfinite(vals[i, j]):
            continue
        if labeling.abs_a[i, j] > delta:
            inside_last = (t_mid, float(vals[i, j]))
        else:
            boundary.append((t_mid, float(vals[i, j])))
    if inside_last is None:
        return BoundaryLiminfReport(math.nan, math.nan, 0.0, 0,
                                    "no_interior_cells")
    mbar_ray = inside_last[1] / inside_last[0]
    t_min = t_min_frac * t_last
    cand = [v / t for t, v in boundary if t >= t_min and t > 0]
    if not cand:
        return BoundaryLiminfReport(mbar_ray, math.nan, 0.0, 0,
                                    "no_boundary_cells")
    liminf_est = min(cand)
    defect = max(0.0, mbar_ray - liminf_est)
    return BoundaryLiminfReport(mbar_ray, liminf_est, defect, len(cand), "ok")
