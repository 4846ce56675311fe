# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: grid Dijkstra, fast marching, upwind HJ sweeps.

Mirrors _kernels_py bit for bit: identical expression trees, neighbor
order, and (value, index) heap ordering, so both backends are
interchangeable in tests.
"""

import numpy as np

from cpython.mem cimport PyMem_Free, PyMem_Malloc, PyMem_Realloc
from libc.math cimport INFINITY, floor, sqrt

BACKEND = "cython"

cdef double _SQRT2 = sqrt(2.0)

cdef int[8] _DI = [-1, 1, 0, 0, -1, -1, 1, 1]
cdef int[8] _DJ = [0, 0, -1, 1, -1, 1, -1, 1]
cdef int[4] _DI4 = [-1, 1, 0, 0]
cdef int[4] _DJ4 = [0, 0, -1, 1]


# ----------------------------------------------------------------------
# binary min-heap over (value, flat index), lexicographic

cdef struct Heap:
    double* val
    long* idx
    long size
    long cap


cdef void heap_init(Heap* h, long cap):
    h.val = <double*> PyMem_Malloc(cap * sizeof(double))
    h.idx = <long*> PyMem_Malloc(cap * sizeof(long))
    h.size = 0
    h.cap = cap


cdef void heap_free(Heap* h):
    PyMem_Free(h.val)
    PyMem_Free(h.idx)


cdef inline bint heap_less(Heap* h, long a, long b):
    if h.val[a] != h.val[b]:
        return h.val[a] < h.val[b]
    return h.idx[a] < h.idx[b]


cdef inline void heap_swap(Heap* h, long a, long b):
    cdef double tv = h.val[a]
    cdef long ti = h.idx[a]
    h.val[a] = h.val[b]
    h.idx[a] = h.idx[b]
    h.val[b] = tv
    h.idx[b] = ti


cdef void heap_push(Heap* h, double v, long i):
    cdef long k, parent
    if h.size == h.cap:
        h.cap *= 2
        h.val = <double*> PyMem_Realloc(h.val, h.cap * sizeof(double))
        h.idx = <long*> PyMem_Realloc(h.idx, h.cap * sizeof(long))
    h.val[h.size] = v
    h.idx[h.size] = i
    h.size += 1
    k = h.size - 1
    while k > 0:
        parent = (k - 1) >> 1
        if heap_less(h, k, parent):
            heap_swap(h, k, parent)
            k = parent
        else:
            break


cdef void heap_pop(Heap* h, double* v, long* i):
    cdef long k = 0, child
    v[0] = h.val[0]
    i[0] = h.idx[0]
    h.size -= 1
    h.val[0] = h.val[h.size]
    h.idx[0] = h.idx[h.size]
    while True:
        child = 2 * k + 1
        if child >= h.size:
            break
        if child + 1 < h.size and heap_less(h, child + 1, child):
            child += 1
        if heap_less(h, child, k):
            heap_swap(h, k, child)
            k = child
        else:
            break


# ----------------------------------------------------------------------
def dijkstra_grid(speed, allowed, si, sj, h):
    """Shortest travel time on the 8-neighbor grid graph (see _kernels_py)."""
    sp_arr = np.ascontiguousarray(speed, dtype=np.float64)
    ok_arr = np.ascontiguousarray(allowed, dtype=np.uint8)
    cdef double[:, ::1] sp = sp_arr
    cdef unsigned char[:, ::1] ok = ok_arr
    cdef long n0 = sp.shape[0], n1 = sp.shape[1]
    dist_arr = np.full((n0, n1), np.inf)
    cdef double[:, ::1] dist = dist_arr
    cdef double hh = h
    cdef long i0 = si, j0 = sj
    cdef Heap heap
    cdef double d, nd, mid, au, ell
    cdef long u, ui, uj, vi, vj, k

    dist[i0, j0] = 0.0
    heap_init(&heap, 1024)
    heap_push(&heap, 0.0, i0 * n1 + j0)
    while heap.size > 0:
        heap_pop(&heap, &d, &u)
        ui = u // n1
        uj = u - ui * n1
        if d > dist[ui, uj]:
            continue
        au = sp[ui, uj]
        for k in range(8):
            vi = ui + _DI[k]
            vj = uj + _DJ[k]
            if vi < 0 or vi >= n0 or vj < 0 or vj >= n1:
                continue
            if not ok[vi, vj]:
                continue
            ell = 1.0 if k < 4 else _SQRT2
            mid = 0.5 * (au + sp[vi, vj])
            nd = d + (ell * hh) / mid
            if nd < dist[vi, vj]:
                dist[vi, vj] = nd
                heap_push(&heap, nd, vi * n1 + vj)
    heap_free(&heap)
    return dist_arr


# ----------------------------------------------------------------------
cdef bint _los(unsigned char[:, ::1] ok, long n0, long n1,
               long si, long sj, long ti, long tj):
    cdef long da = ti - si if ti >= si else si - ti
    cdef long db = tj - sj if tj >= sj else sj - tj
    cdef long dmax = da if da > db else db
    cdef long steps = 2 * dmax
    cdef long k, ci, cj
    cdef double s
    for k in range(steps + 1):
        s = (<double> k) / steps if steps else 0.0
        ci = <long> floor(si + 0.5 + s * (ti - si))
        cj = <long> floor(sj + 0.5 + s * (tj - sj))
        if ci > n0 - 1:
            ci = n0 - 1
        if cj > n1 - 1:
            cj = n1 - 1
        if not ok[ci, cj]:
            return False
    return True


cdef inline double _fmm_update(double[:, ::1] times, unsigned char[:, ::1] state,
                               double[:, ::1] sp, long n0, long n1,
                               long i, long j, double h):
    cdef double mx = INFINITY, my = INFINITY, s, diff, tmp
    if i > 0 and state[i - 1, j] == 2 and times[i - 1, j] < mx:
        mx = times[i - 1, j]
    if i < n0 - 1 and state[i + 1, j] == 2 and times[i + 1, j] < mx:
        mx = times[i + 1, j]
    if j > 0 and state[i, j - 1] == 2 and times[i, j - 1] < my:
        my = times[i, j - 1]
    if j < n1 - 1 and state[i, j + 1] == 2 and times[i, j + 1] < my:
        my = times[i, j + 1]
    s = h / sp[i, j]
    if mx > my:
        tmp = mx
        mx = my
        my = tmp
    if mx == INFINITY:
        return INFINITY
    if my - mx >= s:
        return mx + s
    diff = mx - my
    return 0.5 * (mx + my + sqrt(2.0 * s * s - diff * diff))


def fmm_grid(speed, allowed, si, sj, h, seed_radius):
    """First-order fast marching for |Dm| = 1/speed (see _kernels_py)."""
    sp_arr = np.ascontiguousarray(speed, dtype=np.float64)
    ok_arr = np.ascontiguousarray(allowed, dtype=np.uint8)
    cdef double[:, ::1] sp = sp_arr
    cdef unsigned char[:, ::1] ok = ok_arr
    cdef long n0 = sp.shape[0], n1 = sp.shape[1]
    times_arr = np.full((n0, n1), np.inf)
    state_arr = np.zeros((n0, n1), dtype=np.uint8)
    cdef double[:, ::1] times = times_arr
    cdef unsigned char[:, ::1] state = state_arr
    cdef double hh = h, inv_a_src, dist, t, tv
    cdef long rad = seed_radius, i0 = si, j0 = sj
    cdef long di, dj, ti, tj, i, j, u, ui, uj, vi, vj, k
    cdef Heap heap

    times[i0, j0] = 0.0
    state[i0, j0] = 2
    inv_a_src = 1.0 / sp[i0, j0]

    if rad > 0:
        for di in range(-rad, rad + 1):
            for dj in range(-rad, rad + 1):
                if di * di + dj * dj > rad * rad or (di == 0 and dj == 0):
                    continue
                ti = i0 + di
                tj = j0 + dj
                if ti < 0 or ti >= n0 or tj < 0 or tj >= n1:
                    continue
                if not ok[ti, tj]:
                    continue
                if not _los(ok, n0, n1, i0, j0, ti, tj):
                    continue
                dist = sqrt(<double> (di * di + dj * dj)) * hh
                times[ti, tj] = dist * (0.5 * (inv_a_src + 1.0 / sp[ti, tj]))
                state[ti, tj] = 2

    heap_init(&heap, 1024)
    for i in range(n0):
        for j in range(n1):
            if state[i, j] == 2:
                for k in range(4):
                    vi = i + _DI4[k]
                    vj = j + _DJ4[k]
                    if (0 <= vi < n0 and 0 <= vj < n1 and ok[vi, vj]
                            and state[vi, vj] != 2):
                        t = _fmm_update(times, state, sp, n0, n1, vi, vj, hh)
                        if t < times[vi, vj]:
                            times[vi, vj] = t
                            state[vi, vj] = 1
                            heap_push(&heap, t, vi * n1 + vj)

    while heap.size > 0:
        heap_pop(&heap, &t, &u)
        ui = u // n1
        uj = u - ui * n1
        if state[ui, uj] == 2 or t > times[ui, uj]:
            continue
        state[ui, uj] = 2
        times[ui, uj] = t
        for k in range(4):
            vi = ui + _DI4[k]
            vj = uj + _DJ4[k]
            if (0 <= vi < n0 and 0 <= vj < n1 and ok[vi, vj]
                    and state[vi, vj] != 2):
                tv = _fmm_update(times, state, sp, n0, n1, vi, vj, hh)
                if tv < times[vi, vj]:
                    times[vi, vj] = tv
                    state[vi, vj] = 1
                    heap_push(&heap, tv, vi * n1 + vj)
    heap_free(&heap)
    times_arr[ok_arr == 0] = np.inf
    times_arr[<long> si, <long> sj] = 0.0
    return times_arr


# ----------------------------------------------------------------------
cdef inline long _wrap(long i, long n, bint periodic):
    if i < 0:
        return n - 1 if periodic else 0
    if i >= n:
        return 0 if periodic else n - 1
    return i


def hj_step(u, a, dt, h, periodic):
    """One Godunov/Rouy-Tourin step of u_t + a|Du| = 0 (see _kernels_py)."""
    u_arr = np.ascontiguousarray(u, dtype=np.float64)
    a_arr = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[:, ::1] uu = u_arr
    cdef double[:, ::1] aa = a_arr
    cdef long n0 = uu.shape[0], n1 = uu.shape[1]
    out_arr = np.empty((n0, n1))
    cdef double[:, ::1] out = out_arr
    cdef double hh = h, ddt = dt
    cdef bint per = periodic
    cdef long i, j, im, ip, jm, jp
    cdef double uc, dmx, dpx, dmy, dpy, gx, gy, g, av, t1, t2

    for i in range(n0):
        im = _wrap(i - 1, n0, per)
        ip = _wrap(i + 1, n0, per)
        for j in range(n1):
            jm = _wrap(j - 1, n1, per)
            jp = _wrap(j + 1, n1, per)
            uc = uu[i, j]
            av = aa[i, j]
            dmx = (uc - uu[im, j]) / hh
            dpx = (uu[ip, j] - uc) / hh
            dmy = (uc - uu[i, jm]) / hh
            dpy = (uu[i, jp] - uc) / hh
            if av > 0:
                t1 = max(dmx, 0.0)
                t2 = min(dpx, 0.0)
                gx = t1 * t1 + t2 * t2
                t1 = max(dmy, 0.0)
                t2 = min(dpy, 0.0)
                gy = t1 * t1 + t2 * t2
            else:
                t1 = min(dmx, 0.0)
                t2 = max(dpx, 0.0)
                gx = t1 * t1 + t2 * t2
                t1 = min(dmy, 0.0)
                t2 = max(dpy, 0.0)
                gy = t1 * t1 + t2 * t2
            g = sqrt(gx + gy)
            out[i, j] = uc - ddt * av * g
    return out_arr


def stationary_step(w, a, p1, p2, dt, h, periodic):
    """One damped pseudo-time step of w_t + w + a|p + Dw| = 0."""
    w_arr = np.ascontiguousarray(w, dtype=np.float64)
    a_arr = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[:, ::1] ww = w_arr
    cdef double[:, ::1] aa = a_arr
    cdef long n0 = ww.shape[0], n1 = ww.shape[1]
    out_arr = np.empty((n0, n1))
    cdef double[:, ::1] out = out_arr
    cdef double hh = h, ddt = dt, pp1 = p1, pp2 = p2
    cdef bint per = periodic
    cdef long i, j, im, ip, jm, jp
    cdef double wc, qmx, qpx, qmy, qpy, gx, gy, g, av, t1, t2

    for i in range(n0):
        im = _wrap(i - 1, n0, per)
        ip = _wrap(i + 1, n0, per)
        for j in range(n1):
            jm = _wrap(j - 1, n1, per)
            jp = _wrap(j + 1, n1, per)
            wc = ww[i, j]
            av = aa[i, j]
            qmx = pp1 + (wc - ww[im, j]) / hh
            qpx = pp1 + (ww[ip, j] - wc) / hh
            qmy = pp2 + (wc - ww[i, jm]) / hh
            qpy = pp2 + (ww[i, jp] - wc) / hh
            if av > 0:
                t1 = max(qmx, 0.0)
                t2 = min(qpx, 0.0)
                gx = t1 * t1 + t2 * t2
                t1 = max(qmy, 0.0)
                t2 = min(qpy, 0.0)
                gy = t1 * t1 + t2 * t2
            else:
                t1 = min(qmx, 0.0)
                t2 = max(qpx, 0.0)
                gx = t1 * t1 + t2 * t2
                t1 = min(qmy, 0.0)
                t2 = max(qpy, 0.0)
                gy = t1 * t1 + t2 * t2
            g = sqrt(gx + gy)
            out[i, j] = wc - ddt * (wc + av * g)
    return out_arr


def effective_step(u, vertices, dt, h, periodic, concave):
    """One monotone step of u_t + H(Du) = 0 for polygonal H (see _kernels_py)."""
    u_arr = np.ascontiguousarray(u, dtype=np.float64)
    v_arr = np.ascontiguousarray(vertices, dtype=np.float64)
    cdef double[:, ::1] uu = u_arr
    cdef double[:, ::1] vv = v_arr
    cdef long n0 = uu.shape[0], n1 = uu.shape[1], nv = vv.shape[0]
    out_arr = np.empty((n0, n1))
    cdef double[:, ::1] out = out_arr
    cdef double hh = h, ddt = dt
    cdef bint per = periodic, conc = concave
    cdef long i, j, k, im, ip, jm, jp
    cdef double uc, dmx, dpx, dmy, dpy, v1, v2, fx, fy, f, flux

    for i in range(n0):
        im = _wrap(i - 1, n0, per)
        ip = _wrap(i + 1, n0, per)
        for j in range(n1):
            jm = _wrap(j - 1, n1, per)
            jp = _wrap(j + 1, n1, per)
            uc = uu[i, j]
            dmx = (uc - uu[im, j]) / hh
            dpx = (uu[ip, j] - uc) / hh
            dmy = (uc - uu[i, jm]) / hh
            dpy = (uu[i, jp] - uc) / hh
            flux = 0.0
            for k in range(nv):
                v1 = vv[k, 0]
                v2 = vv[k, 1]
                if conc:
                    v1 = -v1
                    v2 = -v2
                fx = max(v1, 0.0) * dmx + min(v1, 0.0) * dpx
                fy = max(v2, 0.0) * dmy + min(v2, 0.0) * dpy
                f = fx + fy
                if k == 0:
                    flux = f
                elif conc:
                    flux = min(flux, f)
                else:
                    flux = max(flux, f)
            out[i, j] = uc - ddt * flux
    return out_arr
