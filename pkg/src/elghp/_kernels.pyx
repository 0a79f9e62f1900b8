"""Compiled hot loops: per-pixel hexa-pattern codes and L1 gallery scans.

Both loops run without the GIL so the threaded pipeline scales across cores.
Signatures mirror :mod:`elghp._fallback` exactly.
"""

import numpy as np
from libc.stdint cimport int32_t, int64_t, uint8_t, uint32_t, uint64_t
from libc.stdlib cimport free, malloc

# operand order: reference pixel first, then the ring clockwise from top-left
cdef int RING_DX[9]
cdef int RING_DY[9]
RING_DX[:] = [0, -1, 0, 1, 1, 1, 0, -1, -1]
RING_DY[:] = [0, -1, -1, -1, 0, 1, 1, 1, 0]

cdef int PAIR_A[6]
cdef int PAIR_B[6]
PAIR_A[:] = [0, 0, 0, 1, 1, 2]
PAIR_B[:] = [1, 2, 3, 2, 3, 3]


cdef void _pair_bits(const uint8_t* img, Py_ssize_t h, Py_ssize_t w, int d,
                     const int* ox, const int* oy, uint8_t* bits) noexcept nogil:
    # bits[p][y][x] = G_a(y, x) > G_b(y, x) for every pixel at least d from the border
    cdef Py_ssize_t x, y, hw = h * w, base
    cdef int k, p, c
    cdef int g[4]
    cdef Py_ssize_t nb[4]
    for k in range(4):
        nb[k] = oy[k] * d * w + ox[k] * d
    for y in range(d, h - d):
        for x in range(d, w - d):
            base = y * w + x
            c = img[base]
            for k in range(4):
                g[k] = c - img[base + nb[k]]
            for p in range(6):
                bits[p * hw + base] = g[PAIR_A[p]] > g[PAIR_B[p]]


def code_histograms(const uint8_t[:, ::1] img, const int32_t[:, ::1] offsets,
                    const int32_t[::1] radii):
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1], hw = h * w
    cdef Py_ssize_t nr = radii.shape[0]
    out = np.zeros((nr, 6, 512), dtype=np.uint32)
    cdef uint32_t[:, :, ::1] hist = out
    cdef int ox[4]
    cdef int oy[4]
    cdef Py_ssize_t op[9]
    cdef Py_ssize_t ri, x, y, base
    cdef int d, m, o, k, p, code
    cdef const uint8_t* pix = &img[0, 0]
    cdef const uint8_t* pb
    cdef uint8_t* bits
    for k in range(4):
        ox[k] = offsets[k, 0]
        oy[k] = offsets[k, 1]
    bits = <uint8_t*>malloc(6 * hw)
    if bits == NULL:
        raise MemoryError()
    try:
        with nogil:
            for ri in range(nr):
                d = radii[ri]
                m = 2 * d
                _pair_bits(pix, h, w, d, ox, oy, bits)
                for o in range(9):
                    op[o] = RING_DY[o] * d * w + RING_DX[o] * d
                for p in range(6):
                    pb = bits + p * hw
                    for y in range(m, h - m):
                        for x in range(m, w - m):
                            base = y * w + x
                            code = 0
                            for o in range(9):
                                code = (code << 1) | pb[base + op[o]]
                            hist[ri, p, code] += 1
    finally:
        free(bits)
    return out


cdef inline uint64_t _l1_row(const uint32_t* q, const uint32_t* row, Py_ssize_t dim) noexcept nogil:
    cdef Py_ssize_t j
    cdef uint64_t acc = 0
    cdef uint32_t a, b
    for j in range(dim):
        a = q[j]
        b = row[j]
        acc += (a - b) if a > b else (b - a)
    return acc


def l1_distances(const uint32_t[::1] query, const uint32_t[:, ::1] gallery):
    cdef Py_ssize_t n = gallery.shape[0], dim = gallery.shape[1], i
    out = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] dist = out
    if n == 0:
        return out
    cdef const uint32_t* q = &query[0] if dim else NULL
    cdef const uint32_t* g = &gallery[0, 0] if dim else NULL
    with nogil:
        for i in range(n):
            dist[i] = <int64_t>_l1_row(q, g + i * dim, dim)
    return out


def l1_nearest(const uint32_t[::1] query, const uint32_t[:, ::1] gallery):
    cdef Py_ssize_t n = gallery.shape[0], dim = gallery.shape[1], i, best = -1
    cdef uint64_t acc, best_dist = 0
    if n == 0:
        return -1, -1
    cdef const uint32_t* q = &query[0] if dim else NULL
    cdef const uint32_t* g = &gallery[0, 0] if dim else NULL
    with nogil:
        for i in range(n):
            acc = _l1_row(q, g + i * dim, dim)
            # strict < keeps the lowest index on ties
            if best < 0 or acc < best_dist:
                best = i
                best_dist = acc
    return best, <int64_t>best_dist
