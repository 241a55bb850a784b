"""Pure-numpy kernels: the fallback used when the compiled extension is absent.

Outputs must match the compiled kernels bit-for-bit. Distances are
evaluated as ((x*nx + y*ny + z*nz) - d) with fixed association, which is
exactly what the C loop computes (the extension is built with FP
contraction off, so no FMA drift).
"""

from __future__ import annotations

import numpy as np

COMPILED = False

_BIAS = 1 << 20
_SPAN = 1 << 21


def pack_cells(pts: np.ndarray, origin: np.ndarray, cell: float) -> np.ndarray:
    """Packed int64 cell key per point, 21 bits per axis."""
    ixyz = np.floor((pts - origin) / cell).astype(np.int64)
    if np.any(ixyz <= -_BIAS) or np.any(ixyz >= _BIAS):
        raise ValueError("cell size too small for the point extent")
    return (((ixyz[:, 0] + _BIAS) << 42)
            | ((ixyz[:, 1] + _BIAS) << 21)
            | (ixyz[:, 2] + _BIAS))


def unpack_cells(keys: np.ndarray) -> np.ndarray:
    out = np.empty((len(keys), 3), dtype=np.int64)
    out[:, 0] = (keys >> 42) - _BIAS
    out[:, 1] = ((keys >> 21) & (_SPAN - 1)) - _BIAS
    out[:, 2] = (keys & (_SPAN - 1)) - _BIAS
    return out


def reduce_points(pts: np.ndarray, origin: np.ndarray, cell: float):
    """Per-cell axis-extreme representatives.

    Returns (rep_idx ascending, keys per point, touch_count). Ties on an
    extreme go to the lowest point index, matching the compiled kernel's
    first-wins scan. The compiled kernel is a genuine single pass over
    the points; this fallback reproduces its output with sorted
    segmented reductions and reports the same ingestion count (each
    point enters the reduction exactly once).
    """
    n = len(pts)
    keys = pack_cells(pts, origin, cell)
    order_idx = np.arange(n)
    picks = []
    for axis in range(3):
        col = pts[:, axis]
        for vals in (col, -col):
            order = np.lexsort((order_idx, vals, keys))
            starts = np.ones(n, dtype=bool)
            starts[1:] = keys[order][1:] != keys[order][:-1]
            picks.append(order[starts])
    rep_idx = np.unique(np.concatenate(picks))
    return rep_idx, keys, n


def signed_dists(pts: np.ndarray, idx: np.ndarray, n0: float, n1: float,
                 n2: float, d: float) -> np.ndarray:
    sub = pts[idx]
    return (sub[:, 0] * n0 + sub[:, 1] * n1 + sub[:, 2] * n2) - d
