"""Pure numpy/scipy versions of the compiled kernels in ``_kernels.pyx``.

Each function returns results identical to its compiled counterpart; the
test suite checks this on random inputs.
"""

import numpy as np
from scipy import ndimage

BIG = 1 << 30

_LBP_OFFSETS = [(-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1)]


def slic_assign(lab, region, centers, radius, spatial_w2, labels, dist):
    h, w = region.shape
    reg = region.astype(bool)
    labels[reg] = -1
    dist[reg] = np.inf
    for k in range(centers.shape[0]):
        cl, ca, cb, cy, cx = centers[k]
        fy, fx = int(np.floor(cy)), int(np.floor(cx))
        y0, y1 = max(fy - radius, 0), min(fy + radius + 1, h)
        x0, x1 = max(fx - radius, 0), min(fx + radius + 1, w)
        if y0 >= y1 or x0 >= x1:
            continue
        win = lab[y0:y1, x0:x1]
        dl = win[..., 0] - cl
        da = win[..., 1] - ca
        db = win[..., 2] - cb
        dy = (np.arange(y0, y1) - cy)[:, None]
        dx = (np.arange(x0, x1) - cx)[None, :]
        d = (dl * dl + da * da + db * db) + (dy * dy + dx * dx) * spatial_w2
        better = reg[y0:y1, x0:x1] & (d < dist[y0:y1, x0:x1])
        dist[y0:y1, x0:x1][better] = d[better]
        labels[y0:y1, x0:x1][better] = k


def lbp_codes(gray):
    h, w = gray.shape
    padded = np.pad(gray, 1, mode="edge")
    out = np.zeros((h, w), dtype=np.uint8)
    for bit, (dy, dx) in enumerate(_LBP_OFFSETS):
        neigh = padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
        out |= (neigh >= gray).astype(np.uint8) << bit
    return out


def manhattan_distance(target):
    target = np.asarray(target, dtype=bool)
    if not target.any():
        return np.full(target.shape, BIG, dtype=np.int32)
    return ndimage.distance_transform_cdt(~target, metric="taxicab").astype(np.int32)


def equal_components(labels):
    labels = np.asarray(labels)
    out = np.empty(labels.shape, dtype=np.int64)
    four = ndimage.generate_binary_structure(2, 1)
    values = np.unique(labels)
    slices = {}
    offset = 0
    shifted = labels - labels.min()
    for v, sl in enumerate(ndimage.find_objects(shifted + 1)):
        if sl is not None:
            slices[v] = sl
    for v in values:
        sl = slices[int(v - labels.min())]
        sub = labels[sl] == v
        comp, n = ndimage.label(sub, structure=four)
        view = out[sl]
        view[sub] = comp[sub] + offset - 1
        offset += n
    # renumber by raster order of each component's first pixel
    _, first = np.unique(out.ravel(), return_index=True)
    rank = np.empty(offset, dtype=np.int32)
    rank[np.argsort(first, kind="stable")] = np.arange(offset, dtype=np.int32)
    return rank[out]


def merge_fragments(indptr, indices, size, sums, min_size):
    n = len(size)
    parent = list(range(n))
    nxt = [-1] * n
    tail = list(range(n))

    def find(i):
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    indptr = indptr.tolist()
    indices = indices.tolist()
    for c in np.lexsort((np.arange(n), np.asarray(size))).tolist():
        if size[c] >= min_size and parent[c] == c:
            continue
        r = find(c)
        if size[r] >= min_size:
            continue
        m0, m1, m2 = (sums[r, 0] / size[r], sums[r, 1] / size[r], sums[r, 2] / size[r])
        best, best_d = -1, np.inf
        m = r
        while m >= 0:
            for j in indices[indptr[m] : indptr[m + 1]]:
                rj = find(j)
                if rj == r:
                    continue
                d0 = sums[rj, 0] / size[rj] - m0
                d1 = sums[rj, 1] / size[rj] - m1
                d2 = sums[rj, 2] / size[rj] - m2
                d = d0 * d0 + d1 * d1 + d2 * d2
                if d < best_d or (d == best_d and rj < best):
                    best_d, best = d, rj
            m = nxt[m]
        if best < 0:
            continue
        parent[r] = best
        size[best] += size[r]
        sums[best] += sums[r]
        nxt[tail[best]] = r
        tail[best] = tail[r]
    return np.array([find(c) for c in range(n)], dtype=np.int64)
