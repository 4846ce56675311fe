"""Connected components of the two velocity phases and their geometry.

Labeling is 4-connected on {a>0} and {a<0} separately (positive ids for
the positive phase, negative ids for the negative one, 0 on the zero
layer).  "Unbounded" is approximated on the finite box by spanning:
touching two opposite faces.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ParameterError, StructuralError

FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])


@dataclass
class ComponentLabeling:
    """Partition of the grid into signed components and the zero layer."""

    labels: np.ndarray
    sizes: dict
    spanning: dict
    abs_a: np.ndarray
    delta0: dict = field(default_factory=dict)
    restriction_connected: dict | None = None
    _cells: dict = field(default_factory=dict, repr=False)

    def ids(self, sign=None):
        if sign == "+":
            return sorted(i for i in self.sizes if i > 0)
        if sign == "-":
            return sorted(i for i in self.sizes if i < 0)
        return sorted(self.sizes)

    def cells_of(self, cid):
        """(rows, cols) index arrays of one component, cached."""
        if cid not in self._cells:
            self._cells[cid] = np.nonzero(self.labels == cid)
        return self._cells[cid]

    def spanning_id(self, sign="+"):
        """Largest spanning component of the given sign, or None."""
        best = None
        for cid in self.ids(sign):
            if self.spanning[cid] and (best is None
                                       or self.sizes[cid] > self.sizes[best]):
                best = cid
        return best

    def delta0_of(self, cid):
        """Largest d such that {|a| > delta} stays connected within the
        component for every delta <= d (first-disconnection sweep)."""
        if cid not in self.delta0:
            self.delta0[cid] = _delta0_sweep(self.labels, self.abs_a, cid)
        return self.delta0[cid]


def label_components(env):
    """4-connected labeling of both phases of a sample."""
    a = env.a_field
    pos, n_pos = ndimage.label(a > 0, structure=FOUR_CONN)
    neg, n_neg = ndimage.label(a < 0, structure=FOUR_CONN)
    labels = pos.astype(np.int32)
    labels[neg > 0] = -neg[neg > 0]

    sizes = {}
    spanning = {}
    for cid, count in zip(*np.unique(labels, return_counts=True)):
        cid = int(cid)
        if cid != 0:
            sizes[cid] = int(count)
    faces = (labels[0, :], labels[-1, :], labels[:, 0], labels[:, -1])
    face_sets = [set(np.unique(f).tolist()) for f in faces]
    for cid in sizes:
        spanning[cid] = (cid in face_sets[0] and cid in face_sets[1]) or (
            cid in face_sets[2] and cid in face_sets[3])
    return ComponentLabeling(labels=labels, sizes=sizes, spanning=spanning,
                             abs_a=np.abs(a))


def _delta0_sweep(labels, abs_a, cid):
    """Decreasing-threshold union-find sweep over one component.

    Returns the smallest threshold below which the superlevel set is a
    single 4-connected cluster all the way down (the max value if it
    never disconnects).
    """
    n = labels.shape[0]
    rows, cols = np.nonzero(labels == cid)
    flat = rows * n + cols
    vals = abs_a[rows, cols]
    order = np.argsort(-vals, kind="stable")
    flat_sorted = flat[order]
    vals_sorted = vals[order]

    parent = {}

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    clusters = 0
    delta0 = float(vals_sorted[0])
    bad = False
    m = len(flat_sorted)
    k = 0
    while k < m:
        v = vals_sorted[k]
        while k < m and vals_sorted[k] == v:
            u = flat_sorted[k]
            parent[u] = u
            clusters += 1
            for w in (u - n, u + n, u - 1, u + 1):
                if w in parent:
                    if (abs(w - u) == 1) and (w // n != u // n):
                        continue
                    ru, rw = find(u), find(w)
                    if ru != rw:
                        parent[rw] = ru
                        clusters -= 1
            k += 1
        next_v = float(vals_sorted[k]) if k < m else 0.0
        if clusters >= 2:
            bad = True
            delta0 = next_v
    return delta0 if bad else float(vals_sorted[0])


def delta_sublevel(labeling, env, delta):
    """Restrict the labeling to {|a| > delta}, keeping original ids.

    Records, per retained component, whether its restriction is still one
    4-connected piece.
    """
    if delta < 0:
        raise ParameterError(f"delta={delta} must be >= 0")
    keep = labeling.abs_a > delta
    labels = np.where(keep, labeling.labels, 0).astype(np.int32)

    connected = {}
    sizes = {}
    spanning = {}
    faces = (labels[0, :], labels[-1, :], labels[:, 0], labels[:, -1])
    face_sets = [set(np.unique(f).tolist()) for f in faces]
    for cid in labeling.ids():
        part = labels == cid
        count = int(part.sum())
        if count == 0:
            continue
        sizes[cid] = count
        _, pieces = ndimage.label(part, structure=FOUR_CONN)
        connected[cid] = pieces == 1
        spanning[cid] = (cid in face_sets[0] and cid in face_sets[1]) or (
            cid in face_sets[2] and cid in face_sets[3])
    return ComponentLabeling(labels=labels, sizes=sizes, spanning=spanning,
                             abs_a=labeling.abs_a,
                             restriction_connected=connected)


@dataclass
class VolumeFractions:
    """Exact cell-count fractions per component id plus the zero layer."""

    counts: dict
    zero_count: int
    total: int

    @property
    def theta(self):
        return {cid: c / self.total for cid, c in self.counts.items()}

    @property
    def theta0(self):
        return self.zero_count / self.total

    def check_partition(self):
        return self.zero_count + sum(self.counts.values()) == self.total


def estimate_theta(labeling):
    total = labeling.labels.size
    zero = int((labeling.labels == 0).sum())
    return VolumeFractions(counts=dict(labeling.sizes), zero_count=zero,
                           total=total)


@dataclass
class GapStatistics:
    """Excursions of a ray outside one component's delta-sublevel set."""

    direction: np.ndarray
    delta: float
    component_id: int
    gaps: list
    truncated: bool
    t_max: float

    @property
    def ratios(self):
        return [s / t for s, t in self.gaps if t > 0]

    def gap_lengths(self):
        return [t - s for s, t in self.gaps]

    def tail_frequency(self, k):
        """Fraction of gaps longer than k (truncated gap included)."""
        lengths = self.gap_lengths()
        if not lengths:
            return 0.0
        return sum(1 for ell in lengths if ell > k) / len(lengths)


def traverse_ray(origin, direction, cell_h, grid_size, t_start=0.0):
    """March a ray across the grid; yields (i, j, t_enter, t_exit).

    Amanatides-Woo stepping: every cell the segment passes through is
    visited with its parameter interval.
    """
    x = np.asarray(origin, dtype=float) + t_start * np.asarray(direction,
                                                               dtype=float)
    d = np.asarray(direction, dtype=float)
    nrm = np.hypot(d[0], d[1])
    if nrm == 0:
        raise ParameterError("direction must be nonzero")
    d = d / nrm
    i = int(np.floor(x[0] / cell_h))
    j = int(np.floor(x[1] / cell_h))
    step = [0 if d[k] == 0 else (1 if d[k] > 0 else -1) for k in range(2)]
    t_max = [np.inf, np.inf]
    t_delta = [np.inf, np.inf]
    for k in range(2):
        if step[k] != 0:
            nxt = (i if k == 0 else j) + (1 if step[k] > 0 else 0)
            t_max[k] = (nxt * cell_h - x[k]) / d[k]
            t_delta[k] = cell_h / abs(d[k])
    t = 0.0
    while 0 <= i < grid_size and 0 <= j < grid_size:
        t_next = min(t_max)
        yield i, j, t_start + t, t_start + t_next
        if t_max[0] <= t_max[1]:
            i += step[0]
            t = t_max[0]
            t_max[0] += t_delta[0]
        else:
            j += step[1]
            t = t_max[1]
            t_max[1] += t_delta[1]


def ray_gap_statistics(labeling, env, direction, delta, component_id=None,
                       origin=None):
    """Enumerate the maximal ray intervals outside U^delta of a component."""
    if component_id is None:
        component_id = labeling.spanning_id("+")
        if component_id is None:
            raise StructuralError("no spanning positive component")
    if origin is None:
        c = env.box_size / 2
        origin = (c, c)
    keep = (labeling.labels == component_id) & (labeling.abs_a > delta)

    gaps = []
    open_gap_start = None
    t_last = 0.0
    for i, j, t0, t1 in traverse_ray(origin, direction, env.cell_h,
                                     env.grid_size):
        inside = bool(keep[i, j])
        if inside and open_gap_start is not None:
            gaps.append((open_gap_start, t0))
            open_gap_start = None
        elif not inside and open_gap_start is None:
            open_gap_start = t0
        t_last = t1
    truncated = open_gap_start is not None
    if truncated:
        gaps.append((open_gap_start, t_last))
    return GapStatistics(direction=np.asarray(direction, dtype=float),
                         delta=delta, component_id=component_id, gaps=gaps,
                         truncated=truncated, t_max=t_last)
