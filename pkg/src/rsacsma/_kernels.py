"""Compiled inner loops for sequential and Matérn thinning.

Coordinates handed to these kernels live in a box ``[0, box)``; with
``wrap`` set the box is a torus.  Neighbour search uses a uniform grid whose
cell side is at least the inhibition distance, so only the 3x3 block of
cells around a candidate can contain a conflicting point.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def grid_shape(box, d):
    n = int(np.floor(box / d))
    if n < 1:
        n = 1
    return n, box / n


@njit(cache=True)
def _cell(v, cell, n, wrap):
    c = int(np.floor(v / cell))
    if wrap:
        c %= n
    else:
        if c < 0:
            c = 0
        elif c >= n:
            c = n - 1
    return c


@njit(cache=True)
def _sep2(dx, dy, box, wrap):
    if wrap:
        half = 0.5 * box
        if dx > half:
            dx -= box
        elif dx < -half:
            dx += box
        if dy > half:
            dy -= box
        elif dy < -half:
            dy += box
    return dx * dx + dy * dy


@njit(cache=True)
def rsa_insert(xs, ys, box, wrap, d, n, cell, head, nxt, ax, ay, src, n_active, n_stop):
    """Offer the points ``xs, ys`` in order; keep those with no kept point
    closer than ``d``.

    The grid (``head``/``nxt`` linked lists over kept points) and the kept
    coordinate buffers ``ax, ay, src`` are updated in place so the kernel
    can be called repeatedly on successive batches of arrivals.  Processing
    stops early once ``n_stop`` points are kept.

    Returns ``(n_active, n_consumed)``.
    """
    d2 = d * d
    m = xs.shape[0]
    full_scan = n < 3
    for k in range(m):
        if n_active >= n_stop:
            return n_active, k
        x = xs[k]
        y = ys[k]
        ok = True
        if full_scan:
            for j in range(n_active):
                if _sep2(ax[j] - x, ay[j] - y, box, wrap) < d2:
                    ok = False
                    break
        else:
            cx = _cell(x, cell, n, wrap)
            cy = _cell(y, cell, n, wrap)
            for ox in range(-1, 2):
                if not ok:
                    break
                gx = cx + ox
                if wrap:
                    gx %= n
                elif gx < 0 or gx >= n:
                    continue
                for oy in range(-1, 2):
                    gy = cy + oy
                    if wrap:
                        gy %= n
                    elif gy < 0 or gy >= n:
                        continue
                    j = head[gx * n + gy]
                    while j >= 0:
                        if _sep2(ax[j] - x, ay[j] - y, box, wrap) < d2:
                            ok = False
                            break
                        j = nxt[j]
                    if not ok:
                        break
        if ok:
            ax[n_active] = x
            ay[n_active] = y
            src[n_active] = k
            if not full_scan:
                c = _cell(x, cell, n, wrap) * n + _cell(y, cell, n, wrap)
                nxt[n_active] = head[c]
                head[c] = n_active
            n_active += 1
    return n_active, m


@njit(cache=True)
def mhpp2_keep(xs, ys, rank, box, wrap, d):
    """Matérn type-II rule: keep a point iff its rank is the smallest among
    all points (kept or not) within distance ``d``."""
    m = xs.shape[0]
    keep = np.ones(m, dtype=np.bool_)
    if m == 0:
        return keep
    n, cell = grid_shape(box, d)
    d2 = d * d
    head = -np.ones(n * n, dtype=np.int64)
    nxt = -np.ones(m, dtype=np.int64)
    for k in range(m):
        c = _cell(xs[k], cell, n, wrap) * n + _cell(ys[k], cell, n, wrap)
        nxt[k] = head[c]
        head[c] = k
    for k in range(m):
        cx = _cell(xs[k], cell, n, wrap)
        cy = _cell(ys[k], cell, n, wrap)
        if n < 3:
            for j in range(m):
                if j != k and rank[j] < rank[k]:
                    if _sep2(xs[j] - xs[k], ys[j] - ys[k], box, wrap) < d2:
                        keep[k] = False
                        break
            continue
        done = False
        for ox in range(-1, 2):
            if done:
                break
            gx = cx + ox
            if wrap:
                gx %= n
            elif gx < 0 or gx >= n:
                continue
            for oy in range(-1, 2):
                gy = cy + oy
                if wrap:
                    gy %= n
                elif gy < 0 or gy >= n:
                    continue
                j = head[gx * n + gy]
                while j >= 0:
                    if j != k and rank[j] < rank[k]:
                        if _sep2(xs[j] - xs[k], ys[j] - ys[k], box, wrap) < d2:
                            keep[k] = False
                            done = True
                            break
                    j = nxt[j]
                if done:
                    break
    return keep


@njit(cache=True)
def count_empty(px, py, ax, ay, n_active, box, wrap, d, n, cell, head, nxt):
    """Number of probe points with no kept point strictly closer than ``d``."""
    d2 = d * d
    hits = 0
    for k in range(px.shape[0]):
        x = px[k]
        y = py[k]
        ok = True
        if n < 3:
            for j in range(n_active):
                if _sep2(ax[j] - x, ay[j] - y, box, wrap) < d2:
                    ok = False
                    break
        else:
            cx = _cell(x, cell, n, wrap)
            cy = _cell(y, cell, n, wrap)
            for ox in range(-1, 2):
                if not ok:
                    break
                gx = (cx + ox) % n if wrap else cx + ox
                if gx < 0 or gx >= n:
                    continue
                for oy in range(-1, 2):
                    gy = (cy + oy) % n if wrap else cy + oy
                    if gy < 0 or gy >= n:
                        continue
                    j = head[gx * n + gy]
                    while j >= 0:
                        if _sep2(ax[j] - x, ay[j] - y, box, wrap) < d2:
                            ok = False
                            break
                        j = nxt[j]
                    if not ok:
                        break
        if ok:
            hits += 1
    return hits


@njit(cache=True)
def pair_histogram(xs, ys, box, edges_max, nbins, bin_width):
    """Ordered-pair distance histogram on a torus up to ``edges_max``."""
    m = xs.shape[0]
    counts = np.zeros(nbins, dtype=np.int64)
    n, cell = grid_shape(box, edges_max)
    rmax2 = edges_max * edges_max
    if n < 3:
        for i in range(m):
            for j in range(m):
                if i != j:
                    s2 = _sep2(xs[j] - xs[i], ys[j] - ys[i], box, True)
                    if s2 < rmax2:
                        b = int(np.sqrt(s2) / bin_width)
                        if b < nbins:
                            counts[b] += 1
        return counts
    head = -np.ones(n * n, dtype=np.int64)
    nxt = -np.ones(m, dtype=np.int64)
    for k in range(m):
        c = _cell(xs[k], cell, n, True) * n + _cell(ys[k], cell, n, True)
        nxt[k] = head[c]
        head[c] = k
    for i in range(m):
        cx = _cell(xs[i], cell, n, True)
        cy = _cell(ys[i], cell, n, True)
        for ox in range(-1, 2):
            gx = (cx + ox) % n
            for oy in range(-1, 2):
                gy = (cy + oy) % n
                j = head[gx * n + gy]
                while j >= 0:
                    if j != i:
                        s2 = _sep2(xs[j] - xs[i], ys[j] - ys[i], box, True)
                        if s2 < rmax2:
                            b = int(np.sqrt(s2) / bin_width)
                            if b < nbins:
                                counts[b] += 1
                    j = nxt[j]
    return counts
