"""Convex collision queries between hulls (or raw vertex sets).

Distance queries run GJK on the support mapping of the Minkowski
difference. Penetration depth builds the difference polytope explicitly
with quickhull and reads off the least-translation face; the vertex
counts here (hull vertices, not raw meshes) keep that exact approach
cheap, and it shares the face-expansion machinery EPA would use
incrementally. Touching counts as collision everywhere.
"""

from __future__ import annotations

import numpy as np

from .errors import NotIntersecting
from .hull.core import Hull
from .hull.quickhull import quickhull

CONTACT_EPS = 1e-9  # distances at or below this count as touching


def _verts(x) -> np.ndarray:
    if isinstance(x, Hull):
        return x.vertices
    return np.asarray(x, dtype=np.float64)


def _support(va: np.ndarray, vb: np.ndarray, d: np.ndarray) -> np.ndarray:
    # argmax takes the first maximum, so ties resolve by lowest index
    return va[int((va @ d).argmax())] - vb[int((vb @ -d).argmax())]


def _closest_on_simplex(W: list[np.ndarray]):
    """Closest point of conv(W) to the origin and the supporting subset."""
    if len(W) == 1:
        return W[0], W

    if len(W) == 2:
        a, b = W
        ab = b - a
        denom = float(ab @ ab)
        t = 0.0 if denom == 0 else float(-(a @ ab) / denom)
        if t <= 0:
            return a, [a]
        if t >= 1:
            return b, [b]
        return a + t * ab, [a, b]

    if len(W) == 3:
        a, b, c = W
        ab, ac = b - a, c - a
        ao = -a
        d1, d2 = float(ab @ ao), float(ac @ ao)
        if d1 <= 0 and d2 <= 0:
            return a, [a]
        bo = -b
        d3, d4 = float(ab @ bo), float(ac @ bo)
        if d3 >= 0 and d4 <= d3:
            return b, [b]
        vc = d1 * d4 - d3 * d2
        if vc <= 0 and d1 >= 0 and d3 <= 0:
            t = d1 / (d1 - d3)
            return a + t * ab, [a, b]
        co = -c
        d5, d6 = float(ab @ co), float(ac @ co)
        if d6 >= 0 and d5 <= d6:
            return c, [c]
        vb_ = d5 * d2 - d1 * d6
        if vb_ <= 0 and d2 >= 0 and d6 <= 0:
            t = d2 / (d2 - d6)
            return a + t * ac, [a, c]
        va_ = d3 * d6 - d5 * d4
        if va_ <= 0 and (d4 - d3) >= 0 and (d5 - d6) >= 0:
            t = (d4 - d3) / ((d4 - d3) + (d5 - d6))
            return b + t * (c - b), [b, c]
        denom = va_ + vb_ + vc
        v = vb_ / denom
        w = vc / denom
        return a + ab * v + ac * w, [a, b, c]

    # tetrahedron: test each face, keep the nearest feature
    a, b, c, d = W
    best = None
    inside = True
    for tri in ((a, b, c), (a, b, d), (a, c, d), (b, c, d)):
        n = np.cross(tri[1] - tri[0], tri[2] - tri[0])
        opp = [p for p in W if not any(p is q for q in tri)][0]
        side_origin = float(n @ -tri[0])
        side_opp = float(n @ (opp - tri[0]))
        if side_origin * side_opp < 0:  # origin outside this face
            inside = False
            p, sup = _closest_on_simplex(list(tri))
            dist = float(p @ p)
            if best is None or dist < best[0]:
                best = (dist, p, sup)
    if inside:
        return np.zeros(3), W
    return best[1], best[2]


def gjk_distance(a, b, max_iter: int = 128) -> float:
    """Distance between two convex vertex sets (0 when intersecting)."""
    va, vb = _verts(a), _verts(b)
    v = va[0] - vb[0]
    W: list[np.ndarray] = []
    for _ in range(max_iter):
        vv = float(v @ v)
        if vv < 1e-24:
            return 0.0
        w = _support(va, vb, -v)
        # no progress toward the origin: v is (numerically) the answer
        if vv - float(v @ w) <= 1e-12 * max(vv, 1e-12):
            return float(np.sqrt(vv))
        W.append(w)
        v, W = _closest_on_simplex(W)
        if len(W) == 4:
            return 0.0
    return float(np.sqrt(max(float(v @ v), 0.0)))


def collide(a, b) -> bool:
    """Closed-set intersection test; touching is a collision."""
    return gjk_distance(a, b) <= CONTACT_EPS


def _difference_hull(a, b) -> Hull:
    va, vb = _verts(a), _verts(b)
    diff = (va[:, None, :] - vb[None, :, :]).reshape(-1, 3)
    return quickhull(diff, workers=1)


def penetration_depth(a, b) -> tuple[float, np.ndarray]:
    """Least translation (depth, unit direction) separating b out of a.

    Ties between equally shallow faces resolve to the lexicographically
    largest normal, so coincident boxes separate along +x.
    """
    if gjk_distance(a, b) > CONTACT_EPS:
        raise NotIntersecting("penetration_depth needs intersecting hulls")
    dh = _difference_hull(a, b)
    d = dh.offsets  # distance of each face plane from the origin
    dmin = float(d.min())
    tie = np.flatnonzero(d <= dmin + 1e-9)
    normals = dh.normals[tie]
    pick = tie[int(np.lexsort((normals[:, 2], normals[:, 1], normals[:, 0]))[-1])]
    depth = max(float(d[pick]), 0.0)
    return depth, dh.normals[pick].copy()


def drop_distance(mover, static) -> float | None:
    """How far ``mover`` can translate along -z before touching ``static``.

    None when the vertical sweep misses entirely. 0 means already in
    contact (or interpenetrating).
    """
    dh = _difference_hull(mover, static)
    lo, hi = -np.inf, np.inf
    for n, d in zip(dh.normals, dh.offsets):
        nz = float(n[2])
        if abs(nz) < 1e-15:
            if d < -1e-12:
                return None
        elif nz > 0:
            hi = min(hi, d / nz)
        else:
            lo = max(lo, d / nz)
    if lo > hi + 1e-12 or hi < 0:
        return None
    return max(lo, 0.0)
