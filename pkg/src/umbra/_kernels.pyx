# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops; ``_kernels_py`` holds the reference twins."""

import numpy as np
cimport numpy as cnp

from libc.math cimport floor, INFINITY

cnp.import_array()

DEF BIG = 1 << 30


def slic_assign(const double[:, :, ::1] lab,
                const cnp.uint8_t[:, ::1] region,
                const double[:, ::1] centers,
                int radius,
                double spatial_w2,
                cnp.int32_t[:, ::1] labels,
                double[:, ::1] dist):
    """One SLIC assignment sweep, writing into ``labels``/``dist``.

    Region pixels are reset to label -1 first; ties keep the lower cluster id.
    """
    cdef Py_ssize_t h = lab.shape[0], w = lab.shape[1]
    cdef Py_ssize_t n_clusters = centers.shape[0]
    cdef Py_ssize_t k, y, x, y0, y1, x0, x1
    cdef double cl, ca, cb, cy, cx, dl, da, db, dy, dx, d

    for y in range(h):
        for x in range(w):
            if region[y, x]:
                labels[y, x] = -1
                dist[y, x] = INFINITY

    for k in range(n_clusters):
        cl = centers[k, 0]
        ca = centers[k, 1]
        cb = centers[k, 2]
        cy = centers[k, 3]
        cx = centers[k, 4]
        y0 = <Py_ssize_t>floor(cy) - radius
        y1 = <Py_ssize_t>floor(cy) + radius + 1
        x0 = <Py_ssize_t>floor(cx) - radius
        x1 = <Py_ssize_t>floor(cx) + radius + 1
        if y0 < 0:
            y0 = 0
        if x0 < 0:
            x0 = 0
        if y1 > h:
            y1 = h
        if x1 > w:
            x1 = w
        for y in range(y0, y1):
            dy = y - cy
            for x in range(x0, x1):
                if not region[y, x]:
                    continue
                dl = lab[y, x, 0] - cl
                da = lab[y, x, 1] - ca
                db = lab[y, x, 2] - cb
                dx = x - cx
                d = (dl * dl + da * da + db * db) + (dy * dy + dx * dx) * spatial_w2
                if d < dist[y, x]:
                    dist[y, x] = d
                    labels[y, x] = <cnp.int32_t>k


def lbp_codes(const double[:, ::1] gray):
    """8-neighbour radius-1 LBP, bit k set iff neighbour k >= centre.

    Neighbours run clockwise from top-left; borders are edge-replicated.
    """
    cdef Py_ssize_t h = gray.shape[0], w = gray.shape[1]
    out = np.zeros((h, w), dtype=np.uint8)
    if h == 0 or w == 0:
        return out
    cdef const double[:, ::1] g = np.pad(np.asarray(gray), 1, mode="edge")
    cdef cnp.uint8_t[:, ::1] o = out
    cdef Py_ssize_t y, x
    cdef double c
    with nogil:
        for y in range(h):
            for x in range(w):
                c = g[y + 1, x + 1]
                o[y, x] = <cnp.uint8_t>(
                    (g[y, x] >= c)
                    | ((g[y, x + 1] >= c) << 1)
                    | ((g[y, x + 2] >= c) << 2)
                    | ((g[y + 1, x + 2] >= c) << 3)
                    | ((g[y + 2, x + 2] >= c) << 4)
                    | ((g[y + 2, x + 1] >= c) << 5)
                    | ((g[y + 2, x] >= c) << 6)
                    | ((g[y + 1, x] >= c) << 7))
    return out


def manhattan_distance(const cnp.uint8_t[:, ::1] target):
    """L1 distance from every pixel to the nearest nonzero ``target`` pixel.

    Two-pass chamfer with the 4-neighbour mask, exact for the L1 metric.
    Pixels get ``1 << 30`` when ``target`` is empty.
    """
    cdef Py_ssize_t h = target.shape[0], w = target.shape[1]
    out = np.empty((h, w), dtype=np.int32)
    cdef cnp.int32_t[:, ::1] d = out
    cdef Py_ssize_t y, x
    cdef cnp.int32_t v
    for y in range(h):
        for x in range(w):
            if target[y, x]:
                d[y, x] = 0
            else:
                v = BIG
                if y > 0 and d[y - 1, x] + 1 < v:
                    v = d[y - 1, x] + 1
                if x > 0 and d[y, x - 1] + 1 < v:
                    v = d[y, x - 1] + 1
                d[y, x] = v
    for y in range(h - 1, -1, -1):
        for x in range(w - 1, -1, -1):
            v = d[y, x]
            if y < h - 1 and d[y + 1, x] + 1 < v:
                v = d[y + 1, x] + 1
            if x < w - 1 and d[y, x + 1] + 1 < v:
                v = d[y, x + 1] + 1
            d[y, x] = v
    return out


cdef inline Py_ssize_t _find(cnp.int32_t[::1] parent, Py_ssize_t i) noexcept nogil:
    cdef Py_ssize_t root = i, nxt
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = <cnp.int32_t>root
        i = nxt
    return root


def equal_components(const cnp.int32_t[:, ::1] labels):
    """Label 4-connected runs of equal value.

    Component ids are dense and numbered in raster order of first pixel.
    """
    cdef Py_ssize_t h = labels.shape[0], w = labels.shape[1]
    cdef Py_ssize_t n = h * w, i, y, x, a, b
    parent_arr = np.arange(n, dtype=np.int32)
    cdef cnp.int32_t[::1] parent = parent_arr
    for y in range(h):
        for x in range(w):
            i = y * w + x
            if x > 0 and labels[y, x - 1] == labels[y, x]:
                a = _find(parent, i - 1)
                b = _find(parent, i)
                if a < b:
                    parent[b] = <cnp.int32_t>a
                elif b < a:
                    parent[a] = <cnp.int32_t>b
            if y > 0 and labels[y - 1, x] == labels[y, x]:
                a = _find(parent, i - w)
                b = _find(parent, i)
                if a < b:
                    parent[b] = <cnp.int32_t>a
                elif b < a:
                    parent[a] = <cnp.int32_t>b
    out = np.empty((h, w), dtype=np.int32)
    cdef cnp.int32_t[:, ::1] o = out
    remap_arr = np.full(n, -1, dtype=np.int32)
    cdef cnp.int32_t[::1] remap = remap_arr
    cdef cnp.int32_t next_id = 0
    for i in range(n):
        a = _find(parent, i)
        if remap[a] < 0:
            remap[a] = next_id
            next_id += 1
        o[i // w, i % w] = remap[a]
    return out


def merge_fragments(const cnp.int64_t[::1] indptr,
                    const cnp.int64_t[::1] indices,
                    double[::1] size,
                    double[:, ::1] sums,
                    double min_size):
    """Fold components smaller than ``min_size`` into their nearest neighbour.

    ``indptr``/``indices`` is a CSR adjacency over components (already
    restricted to same-region pairs).  Components are visited in ascending
    (size, id) order; a still-small group joins the adjacent group whose mean
    colour (``sums / size``) is nearest, lowest root id on ties.  ``size``
    and ``sums`` are updated in place.  Returns the root of every component.
    """
    cdef Py_ssize_t n = size.shape[0]
    parent_arr = np.arange(n, dtype=np.int32)
    cdef cnp.int32_t[::1] parent = parent_arr
    nxt_arr = np.full(n, -1, dtype=np.int64)
    tail_arr = np.arange(n, dtype=np.int64)
    cdef cnp.int64_t[::1] nxt = nxt_arr
    cdef cnp.int64_t[::1] tail = tail_arr
    order = np.lexsort((np.arange(n), np.asarray(size)))
    cdef cnp.int64_t[::1] order_v = order.astype(np.int64)
    cdef Py_ssize_t oi, c, r, m, e, j, rj, best
    cdef double m0, m1, m2, d0, d1, d2, d, best_d
    for oi in range(n):
        c = order_v[oi]
        if size[c] >= min_size and parent[c] == c:
            continue
        r = _find(parent, c)
        if size[r] >= min_size:
            continue
        m0 = sums[r, 0] / size[r]
        m1 = sums[r, 1] / size[r]
        m2 = sums[r, 2] / size[r]
        best = -1
        best_d = INFINITY
        m = r
        while m >= 0:
            for e in range(indptr[m], indptr[m + 1]):
                j = indices[e]
                rj = _find(parent, j)
                if rj == r:
                    continue
                d0 = sums[rj, 0] / size[rj] - m0
                d1 = sums[rj, 1] / size[rj] - m1
                d2 = sums[rj, 2] / size[rj] - m2
                d = d0 * d0 + d1 * d1 + d2 * d2
                if d < best_d or (d == best_d and rj < best):
                    best_d = d
                    best = rj
            m = nxt[m]
        if best < 0:
            continue
        parent[r] = <cnp.int32_t>best
        size[best] += size[r]
        sums[best, 0] += sums[r, 0]
        sums[best, 1] += sums[r, 1]
        sums[best, 2] += sums[r, 2]
        nxt[tail[best]] = r
        tail[best] = tail[r]
    roots = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] rv = roots
    for c in range(n):
        rv[c] = _find(parent, c)
    return roots
