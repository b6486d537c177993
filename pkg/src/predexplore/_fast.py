"""JIT-compiled inner loops: batch ray casting and grid search.

Everything here works in cell units on raw numpy arrays; the public
modules wrap these kernels with the world-coordinate types and convert
costs to meters.  Pure-Python reference implementations of the same
semantics live next to the contract functions and in the test suite, so
a kernel change that drifts from them shows up as a test failure.
"""

from __future__ import annotations

import numpy as np
from numba import njit

SQRT2 = np.sqrt(2.0)

OCCUPIED = 0
UNKNOWN = 100
FREE = 255

_TIE_EPS = 1e-12


@njit(cache=True)
def sense_kernel(truth, observed, x0, y0, cos_t, sin_t, range_m, res):
    """Cast all rays from (x0, y0) (grid frame, meters) and update observed.

    Marches cell boundaries; traversed cells become Free, the first
    Occupied truth cell becomes Occupied, leaving the map is a silent
    stop.  On an exact corner crossing the x-neighbour is visited before
    the diagonal cell, matching cast_ray.  Returns the changed-cell count.
    """
    h, w = truth.shape
    changed = 0
    c0 = int(np.floor(x0 / res))
    r0 = int(np.floor(y0 / res))
    for k in range(cos_t.shape[0]):
        dx = cos_t[k]
        dy = sin_t[k]
        r = r0
        c = c0
        if truth[r, c] == OCCUPIED:
            if observed[r, c] != OCCUPIED:
                observed[r, c] = OCCUPIED
                changed += 1
            continue
        if observed[r, c] != FREE:
            observed[r, c] = FREE
            changed += 1
        sx = 1 if dx > 0 else -1
        sy = 1 if dy > 0 else -1
        tdx = abs(res / dx) if dx != 0.0 else np.inf
        tdy = abs(res / dy) if dy != 0.0 else np.inf
        if dx > 0:
            tmx = ((c + 1) * res - x0) / dx
        elif dx < 0:
            tmx = (c * res - x0) / dx
        else:
            tmx = np.inf
        if dy > 0:
            tmy = ((r + 1) * res - y0) / dy
        elif dy < 0:
            tmy = (r * res - y0) / dy
        else:
            tmy = np.inf
        while True:
            corner = False
            if tmx < tmy - _TIE_EPS:
                t = tmx
                tmx += tdx
                dr, dc = 0, sx
            elif tmy < tmx - _TIE_EPS:
                t = tmy
                tmy += tdy
                dr, dc = sy, 0
            else:
                t = tmx
                tmx += tdx
                tmy += tdy
                dr, dc = sy, sx
                corner = True
            if t >= range_m - _TIE_EPS:
                break
            if corner:
                cc = c + sx
                if cc < 0 or cc >= w:
                    break
                v = truth[r, cc]
                if v == OCCUPIED:
                    if observed[r, cc] != OCCUPIED:
                        observed[r, cc] = OCCUPIED
                        changed += 1
                    break
                if observed[r, cc] != FREE:
                    observed[r, cc] = FREE
                    changed += 1
            r += dr
            c += dc
            if r < 0 or r >= h or c < 0 or c >= w:
                break
            v = truth[r, c]
            if v == OCCUPIED:
                if observed[r, c] != OCCUPIED:
                    observed[r, c] = OCCUPIED
                    changed += 1
                break
            if observed[r, c] != FREE:
                observed[r, c] = FREE
                changed += 1
    return changed


@njit(cache=True)
def dijkstra_field(passable, sr, sc):
    """Single-source shortest paths over the 8-connected grid, in cell units.

    Diagonal steps cost sqrt(2) and are forbidden when either adjacent
    axial cell is blocked (no corner cutting).  Ties pop by smaller flat
    index, so the distance and parent fields are deterministic.
    Returns (dist[h,w], parent[h,w] flat indices, -1 for none/source).
    """
    h, w = passable.shape
    n = h * w
    dist = np.full(n, np.inf)
    parent = np.full(n, -1, np.int64)
    cap = 8 * n + 64
    hd = np.empty(cap)
    hi = np.empty(cap, np.int64)
    hn = 0
    if not passable[sr, sc]:
        return dist.reshape(h, w), parent.reshape(h, w)
    s = sr * w + sc
    dist[s] = 0.0
    hd[0] = 0.0
    hi[0] = s
    hn = 1
    while hn > 0:
        d0 = hd[0]
        u = hi[0]
        hn -= 1
        hd[0] = hd[hn]
        hi[0] = hi[hn]
        i = 0
        while True:
            l = 2 * i + 1
            r_ = l + 1
            m = i
            if l < hn and (hd[l] < hd[m] or (hd[l] == hd[m] and hi[l] < hi[m])):
                m = l
            if r_ < hn and (hd[r_] < hd[m] or (hd[r_] == hd[m] and hi[r_] < hi[m])):
                m = r_
            if m == i:
                break
            hd[i], hd[m] = hd[m], hd[i]
            hi[i], hi[m] = hi[m], hi[i]
            i = m
        if d0 > dist[u]:
            continue
        ur = u // w
        uc = u % w
        for dr in range(-1, 2):
            for dc in range(-1, 2):
                if dr == 0 and dc == 0:
                    continue
                vr = ur + dr
                vc = uc + dc
                if vr < 0 or vr >= h or vc < 0 or vc >= w:
                    continue
                if not passable[vr, vc]:
                    continue
                if dr != 0 and dc != 0:
                    if not passable[ur + dr, uc] or not passable[ur, uc + dc]:
                        continue
                    nd = d0 + SQRT2
                else:
                    nd = d0 + 1.0
                v = vr * w + vc
                if nd < dist[v]:
                    dist[v] = nd
                    parent[v] = u
                    hd[hn] = nd
                    hi[hn] = v
                    hn += 1
                    i = hn - 1
                    while i > 0:
                        p = (i - 1) // 2
                        if hd[p] > hd[i] or (hd[p] == hd[i] and hi[p] > hi[i]):
                            hd[i], hd[p] = hd[p], hd[i]
                            hi[i], hi[p] = hi[p], hi[i]
                            i = p
                        else:
                            break
    return dist.reshape(h, w), parent.reshape(h, w)


@njit(cache=True)
def astar_kernel(passable, sr, sc, gr, gc):
    """A* with the octile heuristic, expanding ties by (f, row, col).

    Same movement rules as dijkstra_field.  Returns (cost in cell units,
    parent flat-index array); cost is inf when the goal is unreachable.
    """
    h, w = passable.shape
    n = h * w
    g = np.full(n, np.inf)
    parent = np.full(n, -1, np.int64)
    cap = 8 * n + 64
    hf = np.empty(cap)
    hr = np.empty(cap, np.int64)
    hc = np.empty(cap, np.int64)
    hg = np.empty(cap)
    hn = 0
    if not passable[sr, sc] or not passable[gr, gc]:
        return np.inf, parent.reshape(h, w)

    s = sr * w + sc
    g[s] = 0.0
    ddr = abs(sr - gr)
    ddc = abs(sc - gc)
    hf[0] = max(ddr, ddc) + (SQRT2 - 1.0) * min(ddr, ddc)
    hr[0] = sr
    hc[0] = sc
    hg[0] = 0.0
    hn = 1
    while hn > 0:
        f0 = hf[0]
        ur = hr[0]
        uc = hc[0]
        g0 = hg[0]
        hn -= 1
        hf[0] = hf[hn]
        hr[0] = hr[hn]
        hc[0] = hc[hn]
        hg[0] = hg[hn]
        i = 0
        while True:
            l = 2 * i + 1
            r_ = l + 1
            m = i
            if l < hn and (
                hf[l] < hf[m]
                or (hf[l] == hf[m] and (hr[l] < hr[m] or (hr[l] == hr[m] and hc[l] < hc[m])))
            ):
                m = l
            if r_ < hn and (
                hf[r_] < hf[m]
                or (hf[r_] == hf[m] and (hr[r_] < hr[m] or (hr[r_] == hr[m] and hc[r_] < hc[m])))
            ):
                m = r_
            if m == i:
                break
            hf[i], hf[m] = hf[m], hf[i]
            hr[i], hr[m] = hr[m], hr[i]
            hc[i], hc[m] = hc[m], hc[i]
            hg[i], hg[m] = hg[m], hg[i]
            i = m
        u = ur * w + uc
        if g0 > g[u]:
            continue
        if ur == gr and uc == gc:
            return g0, parent.reshape(h, w)
        for dr in range(-1, 2):
            for dc in range(-1, 2):
                if dr == 0 and dc == 0:
                    continue
                vr = ur + dr
                vc = uc + dc
                if vr < 0 or vr >= h or vc < 0 or vc >= w:
                    continue
                if not passable[vr, vc]:
                    continue
                if dr != 0 and dc != 0:
                    if not passable[ur + dr, uc] or not passable[ur, uc + dc]:
                        continue
                    ng = g0 + SQRT2
                else:
                    ng = g0 + 1.0
                v = vr * w + vc
                if ng < g[v]:
                    g[v] = ng
                    parent[v] = u
                    adr = abs(vr - gr)
                    adc = abs(vc - gc)
                    nf = ng + max(adr, adc) + (SQRT2 - 1.0) * min(adr, adc)
                    hf[hn] = nf
                    hr[hn] = vr
                    hc[hn] = vc
                    hg[hn] = ng
                    hn += 1
                    i = hn - 1
                    while i > 0:
                        p = (i - 1) // 2
                        if hf[p] > hf[i] or (
                            hf[p] == hf[i]
                            and (hr[p] > hr[i] or (hr[p] == hr[i] and hc[p] > hc[i]))
                        ):
                            hf[i], hf[p] = hf[p], hf[i]
                            hr[i], hr[p] = hr[p], hr[i]
                            hc[i], hc[p] = hc[p], hc[i]
                            hg[i], hg[p] = hg[p], hg[i]
                            i = p
                        else:
                            break
    return np.inf, parent.reshape(h, w)
