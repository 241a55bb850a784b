"""Exact 3D convex hull via incremental face expansion.

Faces with outside points are expanded in rounds. Within a round the
apex (farthest outside point) of every pending face can be computed in
parallel; insertions are then merged in ascending face-id order, and a
face deleted by an earlier insertion is simply skipped. The apex of a
surviving face is always still valid: a point strictly outside an alive
face cannot have become a hull vertex. This makes the output identical
for any worker count.

Apex search walks the spatial-hash cells of a face's outside set in
Chebyshev rings outward from the cell under the face centroid, stopping
after the first ring that yields no farther candidate. A ring-limited
search can return a sub-maximal apex; the hull stays exact because
expansion continues until no face has outside points, and any strictly
outside point makes progress. Ties are broken by lowest point index.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..errors import DegenerateInput
from .backend import kernels
from .core import Hull

_DIRECT_LIMIT = 512  # above-sets smaller than this skip the grid walk
_BIAS = 1 << 20


class _Face:
    __slots__ = ("tri", "normal", "offset", "above")

    def __init__(self, tri, normal, offset, above):
        self.tri = tri
        self.normal = normal
        self.offset = offset
        self.above = above


def _shell(r: int):
    """Chebyshev-ring offsets at radius r, lexicographic order."""
    if r == 0:
        yield (0, 0, 0)
        return
    for dx in range(-r, r + 1):
        for dy in range(-r, r + 1):
            if max(abs(dx), abs(dy)) == r:
                for dz in range(-r, r + 1):
                    yield (dx, dy, dz)
            else:
                yield (dx, dy, -r)
                yield (dx, dy, r)


class _Builder:
    def __init__(self, pts: np.ndarray, eps: float, cell: float,
                 origin: np.ndarray):
        self.pts = pts
        self.eps = eps
        self.cell = cell
        self.origin = origin
        coords = np.floor((pts - origin) / cell).astype(np.int64)
        self.coords = coords
        self.pkeys = (((coords[:, 0] + _BIAS) << 42)
                      | ((coords[:, 1] + _BIAS) << 21)
                      | (coords[:, 2] + _BIAS))
        self.faces: dict[int, _Face] = {}
        self.halfedge: dict[tuple[int, int], int] = {}
        self.next_fid = 0
        self.interior: np.ndarray | None = None

    # -- face bookkeeping -------------------------------------------------

    def _add_face(self, tri, above) -> int:
        a, b, c = tri
        p = self.pts
        n = np.cross(p[b] - p[a], p[c] - p[a])
        n = n / np.linalg.norm(n)
        d = float(n @ p[a])
        fid = self.next_fid
        self.next_fid += 1
        self.faces[fid] = _Face(tri, n, d, above)
        for u, v in ((a, b), (b, c), (c, a)):
            self.halfedge[(u, v)] = fid
        return fid

    def _drop_face(self, fid: int) -> _Face:
        face = self.faces.pop(fid)
        a, b, c = face.tri
        for u, v in ((a, b), (b, c), (c, a)):
            del self.halfedge[(u, v)]
        return face

    def _filter_above(self, cand: np.ndarray, face: _Face) -> np.ndarray:
        if cand.size == 0:
            return cand
        ds = kernels.signed_dists(self.pts, cand, face.normal[0],
                                  face.normal[1], face.normal[2], face.offset)
        return cand[ds > self.eps]

    # -- simplex -----------------------------------------------------------

    def init_simplex(self) -> None:
        pts = self.pts
        n = len(pts)
        lex = np.lexsort((pts[:, 2], pts[:, 1], pts[:, 0]))
        i0, i1 = int(lex[0]), int(lex[-1])
        if np.all(pts[i0] == pts[i1]):
            raise DegenerateInput("all points coincident")
        u = pts[i1] - pts[i0]
        u = u / np.linalg.norm(u)
        perp = np.linalg.norm(np.cross(pts - pts[i0], u), axis=1)
        i2 = int(perp.argmax())
        if perp[i2] <= self.eps:
            raise DegenerateInput("input points are collinear")
        nrm = np.cross(pts[i1] - pts[i0], pts[i2] - pts[i0])
        nrm = nrm / np.linalg.norm(nrm)
        d = nrm @ pts[i0]
        plane = np.abs(pts @ nrm - d)
        i3 = int(plane.argmax())
        if plane[i3] <= self.eps:
            raise DegenerateInput("input points are coplanar")

        quad = [i0, i1, i2, i3]
        self.interior = pts[quad].mean(axis=0)
        cand = np.setdiff1d(np.arange(n, dtype=np.int64), np.array(quad))
        for tri in ((i0, i1, i2), (i0, i1, i3), (i0, i2, i3), (i1, i2, i3)):
            a, b, c = tri
            nrm = np.cross(pts[b] - pts[a], pts[c] - pts[a])
            if nrm @ self.interior > nrm @ pts[a]:
                tri = (a, c, b)
            fid = self._add_face(tri, np.empty(0, dtype=np.int64))
            face = self.faces[fid]
            face.above = self._filter_above(cand, face)

    # -- apex search ---------------------------------------------------

    def apex(self, face: _Face) -> int:
        idx = face.above
        n0, n1, n2 = face.normal
        off = face.offset
        if idx.size <= _DIRECT_LIMIT:
            ds = kernels.signed_dists(self.pts, idx, n0, n1, n2, off)
            return int(idx[int(ds.argmax())])

        sub = self.coords[idx]
        keys = self.pkeys[idx]
        order = np.argsort(keys, kind="stable")
        sk = keys[order]
        starts = np.flatnonzero(np.r_[True, sk[1:] != sk[:-1]])
        bounds = np.r_[starts, len(sk)]
        by_cell = {int(sk[s]): idx[order[s:e]]
                   for s, e in zip(bounds[:-1], bounds[1:])}

        tri_centroid = self.pts[list(face.tri)].mean(axis=0)
        seed = np.floor((tri_centroid - self.origin) / self.cell).astype(np.int64)
        lo = sub.min(axis=0)
        hi = sub.max(axis=0)
        r_max = int(np.maximum(np.abs(lo - seed), np.abs(hi - seed)).max())

        best_i = -1
        best_d = -np.inf
        for r in range(r_max + 1):
            improved = False
            for dx, dy, dz in _shell(r):
                cx, cy, cz = int(seed[0]) + dx, int(seed[1]) + dy, int(seed[2]) + dz
                if not (lo[0] <= cx <= hi[0] and lo[1] <= cy <= hi[1]
                        and lo[2] <= cz <= hi[2]):
                    continue
                key = ((cx + _BIAS) << 42) | ((cy + _BIAS) << 21) | (cz + _BIAS)
                members = by_cell.get(key)
                if members is None:
                    continue
                ds = kernels.signed_dists(self.pts, members, n0, n1, n2, off)
                k = int(ds.argmax())
                d, i = float(ds[k]), int(members[k])
                if d > best_d or (d == best_d and i < best_i):
                    best_d, best_i = d, i
                    improved = True
            if best_i >= 0 and not improved and r > 0:
                break
        return best_i

    # -- insertion -------------------------------------------------------

    def insert(self, p: int, seed_fid: int) -> None:
        pt = self.pts[p]
        eps = self.eps
        visible = []
        horizon = []
        seen = {seed_fid}
        stack = [seed_fid]
        while stack:
            fid = stack.pop()
            visible.append(fid)
            a, b, c = self.faces[fid].tri
            for u, v in ((a, b), (b, c), (c, a)):
                g = self.halfedge[(v, u)]
                if g in seen:
                    continue
                gf = self.faces[g]
                if gf.normal @ pt - gf.offset > eps:
                    seen.add(g)
                    stack.append(g)
                else:
                    horizon.append((u, v))

        orphan_sets = [self._drop_face(fid).above for fid in visible]
        orphans = np.unique(np.concatenate(orphan_sets))
        orphans = orphans[orphans != p]
        for u, v in horizon:
            fid = self._add_face((u, v, p), np.empty(0, dtype=np.int64))
            face = self.faces[fid]
            assert face.normal @ self.interior < face.offset, "face flipped inward"
            face.above = self._filter_above(orphans, face)

    # -- main loop --------------------------------------------------------

    def run(self, workers: int) -> None:
        pool = ThreadPoolExecutor(workers) if workers > 1 else None
        try:
            while True:
                pending = [fid for fid in sorted(self.faces)
                           if self.faces[fid].above.size]
                if not pending:
                    return
                if pool is not None and len(pending) > 1:
                    apexes = list(pool.map(self.apex,
                                           [self.faces[f] for f in pending]))
                else:
                    apexes = [self.apex(self.faces[f]) for f in pending]
                for fid, apex in zip(pending, apexes):
                    if fid in self.faces:  # may have died earlier this round
                        self.insert(apex, fid)
        finally:
            if pool is not None:
                pool.shutdown()

    def canonical_hull(self, owner: str | None) -> Hull:
        tris = np.array([f.tri for f in self.faces.values()], dtype=np.int64)
        used = np.unique(tris)
        remap = np.full(int(used.max()) + 1, -1, dtype=np.int64)
        remap[used] = np.arange(len(used))
        tris = remap[tris]
        rolled = np.empty_like(tris)
        shift = tris.argmin(axis=1)
        for k in range(3):  # rotate each triple so the smallest index leads
            rolled[shift == k] = np.roll(tris[shift == k], -k, axis=1)
        order = np.lexsort((rolled[:, 2], rolled[:, 1], rolled[:, 0]))
        return Hull.from_faces(self.pts[used], rolled[order], owner)


def quickhull(points, workers: int | None = None, owner: str | None = None,
              grid_cell: float | None = None) -> Hull:
    """Exact convex hull of the input set (at least 4 non-coplanar points)."""
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 4:
        raise DegenerateInput("need at least 4 points")
    mn = pts.min(axis=0)
    mx = pts.max(axis=0)
    diag = float(np.linalg.norm(mx - mn))
    if diag == 0.0:
        raise DegenerateInput("all points coincident")
    eps = 1e-9 * diag
    cell = grid_cell if grid_cell else diag / 64.0
    if workers is None:
        workers = os.cpu_count() or 1

    builder = _Builder(pts, eps, cell, mn)
    builder.init_simplex()
    builder.run(workers)
    return builder.canonical_hull(owner)
