# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: single-pass spatial-hash reduction and plane distances.

Must stay bit-compatible with _kernels_py (same tie rules, same float
association; the build disables FP contraction so a*b+c never fuses).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()

COMPILED = True

DEF BIAS = 1048576  # 1 << 20


def reduce_points(double[:, ::1] pts, origin, double cell):
    """Single pass over the points; per-cell +-x/+-y/+-z extremes.

    Open-addressing hash table over packed cell keys. The touch counter
    increments once per ingested point and is returned for the O(n)
    instrumentation check.
    """
    cdef Py_ssize_t n = pts.shape[0]
    cdef double ox = origin[0], oy = origin[1], oz = origin[2]

    cdef Py_ssize_t table_size = 16
    while table_size < 2 * n:
        table_size <<= 1
    cdef Py_ssize_t mask = table_size - 1

    keys_arr = np.empty(n, dtype=np.int64)
    slot_of_key = np.full(table_size, -1, dtype=np.int64)
    key_at_slot = np.empty(table_size, dtype=np.int64)
    best_arr = np.empty((n, 6), dtype=np.int64)

    cdef long long[::1] keys = keys_arr
    cdef long long[::1] tbl = slot_of_key
    cdef long long[::1] tk = key_at_slot
    cdef long long[:, ::1] best = best_arr

    cdef Py_ssize_t i, slot, ncells = 0, touches = 0
    cdef long long ix, iy, iz, key, rec
    cdef unsigned long long h
    cdef double x, y, z

    for i in range(n):
        x = pts[i, 0]
        y = pts[i, 1]
        z = pts[i, 2]
        ix = <long long>floor((x - ox) / cell)
        iy = <long long>floor((y - oy) / cell)
        iz = <long long>floor((z - oz) / cell)
        if (ix <= -BIAS or ix >= BIAS or iy <= -BIAS or iy >= BIAS
                or iz <= -BIAS or iz >= BIAS):
            raise ValueError("cell size too small for the point extent")
        key = ((ix + BIAS) << 42) | ((iy + BIAS) << 21) | (iz + BIAS)
        keys[i] = key

        h = <unsigned long long>key
        h ^= h >> 33
        h *= <unsigned long long>0xff51afd7ed558ccd
        h ^= h >> 33
        slot = <Py_ssize_t>(h & <unsigned long long>mask)
        while True:
            rec = tbl[slot]
            if rec == -1:
                tbl[slot] = ncells
                tk[slot] = key
                best[ncells, 0] = i
                best[ncells, 1] = i
                best[ncells, 2] = i
                best[ncells, 3] = i
                best[ncells, 4] = i
                best[ncells, 5] = i
                ncells += 1
                break
            if tk[slot] == key:
                # strict comparisons keep the lowest index on ties
                if x > pts[best[rec, 0], 0]:
                    best[rec, 0] = i
                if x < pts[best[rec, 1], 0]:
                    best[rec, 1] = i
                if y > pts[best[rec, 2], 1]:
                    best[rec, 2] = i
                if y < pts[best[rec, 3], 1]:
                    best[rec, 3] = i
                if z > pts[best[rec, 4], 2]:
                    best[rec, 4] = i
                if z < pts[best[rec, 5], 2]:
                    best[rec, 5] = i
                break
            slot = (slot + 1) & mask
        touches += 1

    rep_idx = np.unique(best_arr[:ncells].ravel())
    return rep_idx, keys_arr, touches


def signed_dists(double[:, ::1] pts, long long[::1] idx, double n0, double n1,
                 double n2, double d):
    cdef Py_ssize_t k = idx.shape[0]
    out_arr = np.empty(k, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    cdef long long j
    for i in range(k):
        j = idx[i]
        out[i] = (pts[j, 0] * n0 + pts[j, 1] * n1 + pts[j, 2] * n2) - d
    return out_arr
