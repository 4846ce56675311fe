"""Point-source travel times on one component and their structural checks.

Two routes to the same quantity: exact shortest paths on the 8-neighbor
grid graph (a true graph metric) and first-order fast marching for the
eikonal form.  Both are solved at unit rate and scaled, so rate-linearity
is exact by construction.  Negative components are solved with |a|; sign
conventions are restored by the reporting layer.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import DomainError, ParameterError

SPEED_FLOOR = 1e-6


@dataclass
class TravelTimeField:
    """Travel times from one source cell; +inf marks unreachable cells."""

    component_id: int
    source: tuple
    mu: float
    values: np.ndarray
    method: str
    cell_h: float

    def finite_mask(self):
        return np.isfinite(self.values)

    def at(self, cell):
        return float(self.values[cell[0], cell[1]])


def _graph_inputs(env, labeling, component_id, z, floor):
    speed = np.abs(env.a_field)
    allowed = (labeling.labels == component_id) & (speed > floor)
    zi, zj = int(z[0]), int(z[1])
    if not (0 <= zi < env.grid_size and 0 <= zj < env.grid_size):
        raise DomainError(f"source cell {z} outside the grid")
    if env.a_field[zi, zj] == 0.0:
        raise DomainError(f"source cell {z} lies on the zero layer")
    if not allowed[zi, zj]:
        raise DomainError(f"source cell {z} not in component {component_id}")
    return speed, allowed, zi, zj


def solve_metric_dijkstra(env, labeling, component_id, z, mu,
                          floor=SPEED_FLOOR):
    """Exact shortest-path travel time; edge cost = length / midpoint speed."""
    if mu <= 0:
        raise ParameterError(f"mu={mu} must be > 0")
    speed, allowed, zi, zj = _graph_inputs(env, labeling, component_id, z, floor)
    base = backend.dijkstra_grid(speed, allowed.astype(np.uint8), zi, zj,
                                 env.cell_h)
    return TravelTimeField(component_id=component_id, source=(zi, zj),
                           mu=float(mu), values=mu * base, method="dijkstra8",
                           cell_h=env.cell_h)


def solve_metric_fmm(env, labeling, component_id, z, mu, floor=SPEED_FLOOR,
                     seed_radius=6):
    """First-order upwind eikonal solve of |Dm| = mu/|a| on the component."""
    if mu <= 0:
        raise ParameterError(f"mu={mu} must be > 0")
    speed, allowed, zi, zj = _graph_inputs(env, labeling, component_id, z, floor)
    base = backend.fmm_grid(speed, allowed.astype(np.uint8), zi, zj,
                            env.cell_h, int(seed_radius))
    return TravelTimeField(component_id=component_id, source=(zi, zj),
                           mu=float(mu), values=mu * base, method="fmm",
                           cell_h=env.cell_h)


def solve_metric_fmm_1d(a_values, h, src, mu):
    """1D eikonal |m'| = mu/a by upwind marching (oracle support).

    Matches the 2D update's receiving-cell slowness: m_i = m_nb + h/a_i.
    """
    if mu <= 0:
        raise ParameterError(f"mu={mu} must be > 0")
    a = np.asarray(a_values, dtype=float)
    if np.any(a <= 0):
        raise DomainError("1D solver expects strictly positive speed")
    n = a.size
    base = np.empty(n)
    base[src] = 0.0
    for i in range(src + 1, n):
        base[i] = base[i - 1] + h / a[i]
    for i in range(src - 1, -1, -1):
        base[i] = base[i + 1] + h / a[i]
    return mu * base


@dataclass
class MetricPropertyReport:
    """Defects of the metric axioms and regularity bounds on one pair."""

    symmetry_defect: float
    triangle_defect_max: float
    lipschitz_excess_max: float
    lipschitz_bound: float
    lipschitz_slack: float
    log_bound_defect_min: float
    n_triples: int
    n_pairs: int


def verify_metric_properties(field_zy, field_yz, env, labeling, delta, eta,
                             n_triples=1000, n_pairs=1000, seed=0):
    """Symmetry, triangle, restricted-Lipschitz and log-bound checks.

    field_zy and field_yz are fields from swapped sources (z and y) of the
    same component, computed by the same method.  Report only; the caller
    decides what to assert.
    """
    if field_zy.method != field_yz.method:
        raise ParameterError("fields were computed by different methods")
    mu = field_zy.mu
    z = field_zy.source
    y = field_yz.source
    m_yz = field_zy.at(y)   # m(y, z)
    m_zy = field_yz.at(z)   # m(z, y)
    symmetry_defect = abs(m_yz - m_zy)

    rng = np.random.default_rng(seed)
    finite = np.nonzero(field_zy.finite_mask() & field_yz.finite_mask())
    count = finite[0].size
    take = min(n_triples, count)
    pick = rng.choice(count, size=take, replace=False)
    xs_i = finite[0][pick]
    xs_j = finite[1][pick]
    # m(x,z) <= m(x,y) + m(y,z)
    tri = field_zy.values[xs_i, xs_j] - (field_yz.values[xs_i, xs_j] + m_yz)
    triangle_defect_max = float(tri.max(initial=-np.inf))

    h = env.cell_h
    in_delta = (np.abs(env.a_field) > delta) & (labeling.labels
                                                == field_zy.component_id)
    cells = np.nonzero(in_delta & field_zy.finite_mask())
    bound = mu / delta + eta
    slack = 2.0 * h * mu / delta
    lipschitz_excess_max = -np.inf
    m = cells[0].size
    pairs = 0
    if m >= 2:
        pairs = min(n_pairs, m * (m - 1) // 2)
        ia = rng.integers(0, m, size=pairs)
        ib = rng.integers(0, m, size=pairs)
        keep = ia != ib
        ia, ib = ia[keep], ib[keep]
        va = field_zy.values[cells[0][ia], cells[1][ia]]
        vb = field_zy.values[cells[0][ib], cells[1][ib]]
        dx = (cells[0][ia] - cells[0][ib]) * h
        dy = (cells[1][ia] - cells[1][ib]) * h
        eucl = np.sqrt(dx * dx + dy * dy)
        lipschitz_excess_max = float((np.abs(va - vb) - bound * eucl).max())

    comp = np.nonzero((labeling.labels == field_zy.component_id)
                      & field_zy.finite_mask())
    a_abs = np.abs(env.a_field)[comp]
    a_src = abs(env.a_field[z[0], z[1]])
    log_term = (mu / env.lipschitz_L) * np.abs(np.log(a_abs) - math.log(a_src))
    log_defect = field_zy.values[comp] - log_term
    log_bound_defect_min = float(log_defect.min(initial=np.inf))

    return MetricPropertyReport(
        symmetry_defect=symmetry_defect,
        triangle_defect_max=triangle_defect_max,
        lipschitz_excess_max=lipschitz_excess_max,
        lipschitz_bound=bound,
        lipschitz_slack=slack,
        log_bound_defect_min=log_bound_defect_min,
        n_triples=take,
        n_pairs=pairs,
    )
