"""Pure-Python kernels: grid Dijkstra, fast marching, upwind HJ sweeps.

Reference implementations of the hot loops.  The compiled extension
(frontlab._kernels) mirrors these bit for bit: identical expression
trees, identical neighbor order, identical (value, index) heap ordering.
"""

import heapq
import math

import numpy as np

BACKEND = "python"

_SQRT2 = math.sqrt(2.0)

# relaxation order: axis neighbors first, then diagonals
_OFFS8 = ((-1, 0, 1.0), (1, 0, 1.0), (0, -1, 1.0), (0, 1, 1.0),
          (-1, -1, _SQRT2), (-1, 1, _SQRT2), (1, -1, _SQRT2), (1, 1, _SQRT2))


def dijkstra_grid(speed, allowed, si, sj, h):
    """Shortest travel time on the 8-neighbor grid graph.

    Edge cost is length / mean(speed at endpoints); edges touching cells
    outside `allowed` are absent.  Returns +inf on unreachable cells.
    Deterministic: heap ties broken by flat cell index.
    """
    n0, n1 = speed.shape
    sp = speed.ravel()
    ok = np.asarray(allowed, dtype=bool).ravel()
    dist = np.full(n0 * n1, np.inf)
    src = si * n1 + sj
    dist[src] = 0.0
    heap = [(0.0, src)]
    push = heapq.heappush
    pop = heapq.heappop
    while heap:
        d, u = pop(heap)
        if d > dist[u]:
            continue
        ui, uj = divmod(u, n1)
        au = sp[u]
        for di, dj, ell in _OFFS8:
            vi = ui + di
            vj = uj + dj
            if vi < 0 or vi >= n0 or vj < 0 or vj >= n1:
                continue
            v = vi * n1 + vj
            if not ok[v]:
                continue
            mid = 0.5 * (au + sp[v])
            nd = d + (ell * h) / mid
            if nd < dist[v]:
                dist[v] = nd
                push(heap, (nd, v))
    return dist.reshape(n0, n1)


def _line_of_sight(allowed, si, sj, ti, tj):
    """All cells on the segment of centers (si,sj)->(ti,tj) are allowed."""
    steps = 2 * max(abs(ti - si), abs(tj - sj))
    for k in range(steps + 1):
        s = k / steps if steps else 0.0
        ci = int(math.floor(si + 0.5 + s * (ti - si)))
        cj = int(math.floor(sj + 0.5 + s * (tj - sj)))
        if not allowed[min(ci, allowed.shape[0] - 1), min(cj, allowed.shape[1] - 1)]:
            return False
    return True


def fmm_grid(speed, allowed, si, sj, h, seed_radius):
    """First-order fast marching for |Dm| = 1/speed on `allowed` cells.

    Cells within seed_radius cells of the source (with line of sight) are
    initialized with the trapezoid slowness times exact Euclidean length,
    which removes the O(1) relative error of the raw scheme near a point
    source.
    """
    allowed = np.asarray(allowed, dtype=bool)
    n0, n1 = speed.shape
    times = np.full((n0, n1), np.inf)
    state = np.zeros((n0, n1), dtype=np.uint8)  # 0 far, 1 trial, 2 known
    times[si, sj] = 0.0
    state[si, sj] = 2
    inv_a_src = 1.0 / speed[si, sj]

    heap = []
    if seed_radius > 0:
        r2 = seed_radius * seed_radius
        for di in range(-seed_radius, seed_radius + 1):
            for dj in range(-seed_radius, seed_radius + 1):
                if di * di + dj * dj > r2 or (di == 0 and dj == 0):
                    continue
                ti, tj = si + di, sj + dj
                if not (0 <= ti < n0 and 0 <= tj < n1) or not allowed[ti, tj]:
                    continue
                if not _line_of_sight(allowed, si, sj, ti, tj):
                    continue
                dist = math.sqrt(float(di * di + dj * dj)) * h
                times[ti, tj] = dist * (0.5 * (inv_a_src + 1.0 / speed[ti, tj]))
                state[ti, tj] = 2

    def update(i, j):
        mx = np.inf
        if i > 0 and state[i - 1, j] == 2 and times[i - 1, j] < mx:
            mx = times[i - 1, j]
        if i < n0 - 1 and state[i + 1, j] == 2 and times[i + 1, j] < mx:
            mx = times[i + 1, j]
        my = np.inf
        if j > 0 and state[i, j - 1] == 2 and times[i, j - 1] < my:
            my = times[i, j - 1]
        if j < n1 - 1 and state[i, j + 1] == 2 and times[i, j + 1] < my:
            my = times[i, j + 1]
        s = h / speed[i, j]
        if mx > my:
            mx, my = my, mx
        if mx == np.inf:
            return np.inf
        if my - mx >= s:
            return mx + s
        diff = mx - my
        return 0.5 * (mx + my + math.sqrt(2.0 * s * s - diff * diff))

    for i in range(n0):
        for j in range(n1):
            if state[i, j] == 2:
                for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                    vi, vj = i + di, j + dj
                    if (0 <= vi < n0 and 0 <= vj < n1 and allowed[vi, vj]
                            and state[vi, vj] != 2):
                        t = update(vi, vj)
                        if t < times[vi, vj]:
                            times[vi, vj] = t
                            state[vi, vj] = 1
                            heapq.heappush(heap, (t, vi * n1 + vj))

    while heap:
        t, u = heapq.heappop(heap)
        ui, uj = divmod(u, n1)
        if state[ui, uj] == 2 or t > times[ui, uj]:
            continue
        state[ui, uj] = 2
        times[ui, uj] = t
        for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            vi, vj = ui + di, uj + dj
            if (0 <= vi < n0 and 0 <= vj < n1 and allowed[vi, vj]
                    and state[vi, vj] != 2):
                tv = update(vi, vj)
                if tv < times[vi, vj]:
                    times[vi, vj] = tv
                    state[vi, vj] = 1
                    heapq.heappush(heap, (tv, vi * n1 + vj))
    times[~allowed] = np.inf
    times[si, sj] = 0.0
    return times


def _pad(u, periodic):
    mode = "wrap" if periodic else "edge"
    return np.pad(u, 1, mode=mode)


def hj_step(u, a, dt, h, periodic):
    """One explicit Godunov/Rouy-Tourin step of u_t + a|Du| = 0.

    Sign-aware upwinding: expanding stencil where a > 0, contracting where
    a < 0; cells with a = 0 are bitwise unchanged.
    """
    up = _pad(u, periodic)
    dmx = (u - up[:-2, 1:-1]) / h
    dpx = (up[2:, 1:-1] - u) / h
    dmy = (u - up[1:-1, :-2]) / h
    dpy = (up[1:-1, 2:] - u) / h

    zero = np.zeros_like(u)
    gx_pos = np.maximum(dmx, zero) ** 2 + np.minimum(dpx, zero) ** 2
    gy_pos = np.maximum(dmy, zero) ** 2 + np.minimum(dpy, zero) ** 2
    g_pos = np.sqrt(gx_pos + gy_pos)
    gx_neg = np.minimum(dmx, zero) ** 2 + np.maximum(dpx, zero) ** 2
    gy_neg = np.minimum(dmy, zero) ** 2 + np.maximum(dpy, zero) ** 2
    g_neg = np.sqrt(gx_neg + gy_neg)

    g = np.where(a > 0, g_pos, g_neg)
    return u - dt * a * g


def stationary_step(w, a, p1, p2, dt, h, periodic):
    """One damped pseudo-time step of w_t + w + a|p + Dw| = 0."""
    wp = _pad(w, periodic)
    qmx = p1 + (w - wp[:-2, 1:-1]) / h
    qpx = p1 + (wp[2:, 1:-1] - w) / h
    qmy = p2 + (w - wp[1:-1, :-2]) / h
    qpy = p2 + (wp[1:-1, 2:] - w) / h

    zero = np.zeros_like(w)
    gx_pos = np.maximum(qmx, zero) ** 2 + np.minimum(qpx, zero) ** 2
    gy_pos = np.maximum(qmy, zero) ** 2 + np.minimum(qpy, zero) ** 2
    g_pos = np.sqrt(gx_pos + gy_pos)
    gx_neg = np.minimum(qmx, zero) ** 2 + np.maximum(qpx, zero) ** 2
    gy_neg = np.minimum(qmy, zero) ** 2 + np.maximum(qpy, zero) ** 2
    g_neg = np.sqrt(gx_neg + gy_neg)

    g = np.where(a > 0, g_pos, g_neg)
    return w - dt * (w + a * g)


def effective_step(u, vertices, dt, h, periodic, concave):
    """One monotone step of u_t + H(Du) = 0 for polygonal support-function H.

    Convex case: H(p) = max_v v.p over Wulff vertices; each vertex gives a
    linear upwind flux and the numerical Hamiltonian is their max.  The
    concave case reflects: H(p) = -max_v v.p = min_v (-v).p.
    """
    up = _pad(u, periodic)
    dmx = (u - up[:-2, 1:-1]) / h
    dpx = (up[2:, 1:-1] - u) / h
    dmy = (u - up[1:-1, :-2]) / h
    dpy = (up[1:-1, 2:] - u) / h

    flux = None
    for v1, v2 in vertices:
        if concave:
            v1, v2 = -v1, -v2
        fx = max(v1, 0.0) * dmx + min(v1, 0.0) * dpx
        fy = max(v2, 0.0) * dmy + min(v2, 0.0) * dpy
        f = fx + fy
        if flux is None:
            flux = f
        elif concave:
            flux = np.minimum(flux, f)
        else:
            flux = np.maximum(flux, f)
    return u - dt * flux
