"""Effective Hamiltonian as the support function of the Wulff set.

The unit-rate averaged metric on a direction fan gives the Wulff polygon
K = {y : mbar1(y) <= 1} with vertices y_d / mbar1(y_d).  The convex-case
Hamiltonian is H(p) = max over vertices of p.v, which makes convexity,
positive 1-homogeneity and H(0) = 0 structural rather than numerical.
The concave case (negative phase, solved with |a|) is the reflection
H_-(p) = -H_+(p).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from .errors import (DataError, ParameterError, StructuralError,
                     UndefinedSubgradientError)


@dataclass
class EffectiveHamiltonian:
    """Deterministic effective Hamiltonian of one component."""

    component_id: int
    sign: str                 # "positive" | "negative" | "zero"
    wulff_vertices: np.ndarray

    @classmethod
    def zero(cls, component_id=0):
        """The bounded-component case: identically zero Hamiltonian."""
        return cls(component_id=component_id, sign="zero",
                   wulff_vertices=np.zeros((0, 2)))

    def value(self, p):
        p = np.asarray(p, dtype=float)
        if self.sign == "zero" or len(self.wulff_vertices) == 0:
            return 0.0
        s = float(np.max(self.wulff_vertices @ p))
        return -s if self.sign == "negative" else s

    def values(self, ps):
        ps = np.asarray(ps, dtype=float)
        if self.sign == "zero" or len(self.wulff_vertices) == 0:
            return np.zeros(len(ps))
        s = (ps @ self.wulff_vertices.T).max(axis=1)
        return -s if self.sign == "negative" else s

    def max_speed(self):
        """Largest front speed |v| over the Wulff polygon (CFL input)."""
        if len(self.wulff_vertices) == 0:
            return 0.0
        return float(np.max(np.hypot(self.wulff_vertices[:, 0],
                                     self.wulff_vertices[:, 1])))


def effective_from_mbar(avg, sign="positive", component_id=0):
    """Dualize a directional averaged-metric profile into a Hamiltonian."""
    if sign not in ("positive", "negative"):
        raise ParameterError(f"sign={sign!r}")
    m1 = np.asarray(avg.mbar1, dtype=float)
    if np.any(~np.isfinite(m1)) or np.any(m1 <= 0):
        raise DataError("averaged metric must be finite and positive on the fan")
    vertices = avg.directions / m1[:, None]
    return EffectiveHamiltonian(component_id=component_id, sign=sign,
                                wulff_vertices=vertices)


@dataclass
class WulffSet:
    """Wulff polygon and its polar (the unit ball of the dual gauge)."""

    vertices: np.ndarray
    polar_vertices: np.ndarray


def polar_polygon(vertices):
    """Vertices of {q : q.v <= 1 for all v}; needs the origin interior."""
    pts = np.asarray(vertices, dtype=float)
    hull = ConvexHull(pts)
    hv = pts[hull.vertices]          # counterclockwise
    k = len(hv)
    out = np.empty((k, 2))
    for idx in range(k):
        v1 = hv[idx]
        v2 = hv[(idx + 1) % k]
        det = v1[0] * v2[1] - v1[1] * v2[0]
        if abs(det) < 1e-300:
            raise DataError("degenerate Wulff polygon (origin not interior)")
        out[idx, 0] = (v2[1] - v1[1]) / det
        out[idx, 1] = (v1[0] - v2[0]) / det
    return out


def wulff_set(h):
    if h.sign == "zero" or len(h.wulff_vertices) == 0:
        raise StructuralError("zero Hamiltonian has no Wulff polygon")
    return WulffSet(vertices=h.wulff_vertices.copy(),
                    polar_vertices=polar_polygon(h.wulff_vertices))


def mbar_from_effective(h, directions, mu=1.0):
    """Dual profile sup{y.q : H(q) <= mu} on the given directions.

    Returns (values, unbounded).  A zero Hamiltonian makes the constraint
    set all of the plane: values are +inf and unbounded is True.  The
    concave case reflects to the positive representation, returning the
    (negative) superadditive profile for mu of matching sign.
    """
    dirs = np.asarray(directions, dtype=float)
    if h.sign == "zero" or len(h.wulff_vertices) == 0:
        return np.full(len(dirs), np.inf), True
    if h.sign == "negative" and mu >= 0:
        raise ParameterError("concave Hamiltonian pairs with mu < 0")
    if h.sign == "positive" and mu <= 0:
        raise ParameterError("convex Hamiltonian pairs with mu > 0")
    polar = polar_polygon(h.wulff_vertices)
    vals = (dirs @ polar.T).max(axis=1)
    # mu < 0 in the concave case reflects the profile to its negative side
    return mu * vals, False


@dataclass
class SubgradientCertificate:
    direction: np.ndarray
    index: int
    equality_defect: float
    max_violation: float


def subgradient_direction(h, p):
    """Maximizing unit direction of the dual ratio, with its certificate.

    Ties are broken toward the lowest fan index.  Undefined when the
    (positive-representation) Hamiltonian vanishes at p.
    """
    p = np.asarray(p, dtype=float)
    if h.sign == "zero" or len(h.wulff_vertices) == 0:
        raise UndefinedSubgradientError("H == 0 has no subgradient direction")
    scores = h.wulff_vertices @ p
    hp = float(scores.max())
    if hp <= 0:
        raise UndefinedSubgradientError(f"H(p)={hp} at p={tuple(p)}")
    idx = int(np.argmax(scores))
    v = h.wulff_vertices[idx]
    y = v / math.hypot(v[0], v[1])
    # p.y* should equal mbar_{H(p)}(y*) = H(p) * mbar1(y*) = H(p) / |v*|
    equality_defect = abs(float(p @ y) - hp / math.hypot(v[0], v[1]))
    max_violation = float((scores - hp).max())
    return SubgradientCertificate(direction=y, index=idx,
                                  equality_defect=equality_defect,
                                  max_violation=max_violation)


@dataclass
class ConvexityReport:
    value_at_zero: float
    homogeneity_defect: float
    midpoint_convexity_defect: float
    n_pairs: int


def verify_convex_homogeneous(h, n_pairs=100, seed=0):
    """Exact structural checks on a sampled p-grid.

    Scaling by 2 is exact in floating point; midpoint convexity of a
    max-of-linear form survives rounding because rounding is monotone.
    """
    rng = np.random.default_rng(seed)
    ps = rng.normal(size=(n_pairs, 2))
    qs = rng.normal(size=(n_pairs, 2))
    v0 = abs(h.value((0.0, 0.0)))

    hom = 0.0
    for p in ps:
        hom = max(hom, abs(h.value(2.0 * p) - 2.0 * h.value(p)))

    conv = -np.inf
    for p, q in zip(ps, qs):
        mid = h.value(0.5 * (p + q))
        conv = max(conv, mid - 0.5 * (h.value(p) + h.value(q)))
    return ConvexityReport(value_at_zero=v0, homogeneity_defect=hom,
                           midpoint_convexity_defect=float(conv),
                           n_pairs=n_pairs)
