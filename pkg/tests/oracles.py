"""Independent reference implementations used only by the tests."""

import numpy as np


def lab_oracle(rgb):
    """sRGB -> XYZ (D65) -> CIE Lab, scalar code path, textbook constants."""
    def lin(c):
        return c / 12.92 if c <= 0.04045 else ((c + 0.055) / 1.055) ** 2.4

    r, g, b = (lin(float(c)) for c in rgb)
    x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b
    y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b
    z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b
    xn, yn, zn = 0.95047, 1.0, 1.08883

    def f(t):
        return t ** (1 / 3) if t > (6 / 29) ** 3 else t / (3 * (6 / 29) ** 2) + 4 / 29

    fx, fy, fz = f(x / xn), f(y / yn), f(z / zn)
    return np.array([116 * fy - 16, 500 * (fx - fy), 200 * (fy - fz)])


def greedy_transport(p, q, values):
    """Move mass between sorted bins greedily; the 1-D optimum."""
    p = list(map(float, p))
    q = list(map(float, q))
    i = j = 0
    cost = 0.0
    while i < len(p) and j < len(q):
        m = min(p[i], q[j])
        cost += m * abs(values[i] - values[j])
        p[i] -= m
        q[j] -= m
        if p[i] <= 1e-15:
            i += 1
        if q[j] <= 1e-15:
            j += 1
    return cost


def morph_scan(mask, r, op):
    """Diamond dilation/erosion by explicit neighbourhood scan."""
    h, w = mask.shape
    out = np.zeros_like(mask)
    offs = [(dy, dx) for dy in range(-r, r + 1) for dx in range(-r, r + 1) if abs(dy) + abs(dx) <= r]
    for y in range(h):
        for x in range(w):
            vals = []
            for dy, dx in offs:
                yy, xx = y + dy, x + dx
                inside = 0 <= yy < h and 0 <= xx < w
                vals.append(bool(mask[yy, xx]) if inside else False)
            out[y, x] = any(vals) if op == "dilate" else all(vals)
    return out


def lbp_scan(gray):
    h, w = gray.shape
    offs = [(-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1)]
    out = np.zeros((h, w), dtype=np.uint8)
    for y in range(h):
        for x in range(w):
            code = 0
            for k, (dy, dx) in enumerate(offs):
                yy = min(max(y + dy, 0), h - 1)
                xx = min(max(x + dx, 0), w - 1)
                if gray[yy, xx] >= gray[y, x]:
                    code |= 1 << k
            out[y, x] = code
    return out


def confusion_scan(pred, gt):
    tp = fp = tn = fn = 0
    for p, g in zip(np.ravel(pred), np.ravel(gt)):
        if p and g:
            tp += 1
        elif p:
            fp += 1
        elif g:
            fn += 1
        else:
            tn += 1
    return tp, fp, tn, fn


def morph_shift(mask, r, op):
    """Diamond dilation/erosion as a union/intersection of shifted copies.

    Pixels beyond the frame count as False, matching :func:`morph_scan`.
    """
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    padded = np.zeros((h + 2 * r, w + 2 * r), dtype=bool)
    padded[r:r + h, r:r + w] = mask
    out = np.zeros_like(mask) if op == "dilate" else np.ones_like(mask)
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            if abs(dy) + abs(dx) > r:
                continue
            view = padded[r + dy:r + dy + h, r + dx:r + dx + w]
            out = (out | view) if op == "dilate" else (out & view)
    return out
