"""Pure-Python (numpy) kernels, used when the compiled extension is absent.

Signatures and results are identical to :mod:`elghp._kernels`.
"""

import numpy as np

# operand order: reference pixel first, then the ring clockwise from top-left
RING = ((0, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0))
PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))

_CHUNK_ROWS = 128


def code_maps(img, offsets, d):
    """All six code maps at radius ``d`` as a ``(6, h - 4d, w - 4d)`` uint16 array."""
    img = np.asarray(img, dtype=np.int16)
    h, w = img.shape
    m = 2 * d
    vh, vw = h - 2 * m, w - 2 * m
    # derivs[o][k]: derivative at angle k, evaluated on operand o for every valid pixel
    derivs = []
    for rdx, rdy in RING:
        y0, x0 = m + rdy * d, m + rdx * d
        centre = img[y0 : y0 + vh, x0 : x0 + vw]
        per_angle = []
        for dx, dy in offsets:
            ny, nx = y0 + dy * d, x0 + dx * d
            per_angle.append(centre - img[ny : ny + vh, nx : nx + vw])
        derivs.append(per_angle)
    maps = np.zeros((6, vh, vw), dtype=np.uint16)
    for p, (a, b) in enumerate(PAIRS):
        code = maps[p]
        for per_angle in derivs:
            code <<= 1
            code |= per_angle[a] > per_angle[b]
    return maps


def code_histograms(img, offsets, radii):
    out = np.zeros((len(radii), 6, 512), dtype=np.uint32)
    for ri, d in enumerate(radii):
        maps = code_maps(img, offsets, int(d))
        for p in range(6):
            out[ri, p] = np.bincount(maps[p].ravel(), minlength=512)
    return out


def l1_distances(query, gallery):
    query = np.asarray(query, dtype=np.int64)
    gallery = np.asarray(gallery)
    out = np.empty(gallery.shape[0], dtype=np.int64)
    for start in range(0, gallery.shape[0], _CHUNK_ROWS):
        block = gallery[start : start + _CHUNK_ROWS].astype(np.int64)
        out[start : start + _CHUNK_ROWS] = np.abs(block - query).sum(axis=1)
    return out


def l1_nearest(query, gallery):
    dist = l1_distances(query, gallery)
    if dist.size == 0:
        return -1, -1
    best = int(np.argmin(dist))  # argmin returns the first minimum
    return best, int(dist[best])
