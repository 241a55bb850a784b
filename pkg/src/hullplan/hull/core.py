"""Hull value type, point padding, and spatial-hash reduction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyInput, NegativePadding, NonPositiveCell
from . import _kernels_py
from .backend import kernels


@dataclass
class Hull:
    """Convex polytope: canonical vertex array plus outward-oriented faces."""

    vertices: np.ndarray          # (h, 3) float64, world frame
    faces: np.ndarray             # (f, 3) int64 triples into vertices
    normals: np.ndarray           # (f, 3) outward unit normals
    offsets: np.ndarray           # (f,) plane offsets, n.x = offset on the face
    owner: str | None = None

    @staticmethod
    def from_faces(vertices: np.ndarray, faces: np.ndarray,
                   owner: str | None = None) -> "Hull":
        vertices = np.asarray(vertices, dtype=np.float64)
        faces = np.asarray(faces, dtype=np.int64)
        centroid = vertices.mean(axis=0)
        normals = np.empty((len(faces), 3))
        offsets = np.empty(len(faces))
        for fi, (a, b, c) in enumerate(faces):
            n = np.cross(vertices[b] - vertices[a], vertices[c] - vertices[a])
            n = n / np.linalg.norm(n)
            d = float(n @ vertices[a])
            if n @ centroid > d:
                n, d = -n, -d
            normals[fi] = n
            offsets[fi] = d
        return Hull(vertices, faces, normals, offsets, owner)

    def contains(self, point, tol: float = 1e-9) -> bool:
        p = np.asarray(point, dtype=np.float64)
        return bool(np.all(self.normals @ p - self.offsets <= tol))

    def max_plane_excess(self, points) -> float:
        """Largest signed distance of any point outside any face plane."""
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[None, :]
        # blockwise: the full (n, faces) product is huge for big clouds
        step = max(1, 8_000_000 // max(len(self.normals), 1))
        best = -np.inf
        for lo in range(0, len(pts), step):
            d = pts[lo:lo + step] @ self.normals.T - self.offsets
            best = max(best, float(d.max()))
        return best

    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def to_dict(self) -> dict:
        return {
            "owner": self.owner,
            "vertices": self.vertices.tolist(),
            "faces": self.faces.tolist(),
        }


def pad_points(vertices, padding: float) -> np.ndarray:
    """Dilate a vertex cloud by an axis octahedron of radius ``padding``.

    Emits v and v +- padding*e_axis for each vertex; the hull of the
    result is the hull of the input Minkowski-summed with the
    octahedron. Zero padding returns the input unchanged.
    """
    pts = np.ascontiguousarray(vertices, dtype=np.float64)
    if padding < 0:
        raise NegativePadding(f"padding {padding} < 0")
    if padding == 0:
        return pts
    offs = padding * np.array([
        [1, 0, 0], [-1, 0, 0],
        [0, 1, 0], [0, -1, 0],
        [0, 0, 1], [0, 0, -1],
    ])
    return np.ascontiguousarray(
        np.concatenate([pts] + [pts + o for o in offs]))


@dataclass
class _CellEntry:
    members: np.ndarray          # input point indices in this cell
    representatives: np.ndarray  # subset kept by reduce()


@dataclass
class HashGrid:
    """Spatial hash over points: packed cell keys plus per-cell extrema."""

    cell_size: float
    origin: np.ndarray
    keys: np.ndarray             # (n,) packed cell key per input point
    rep_idx: np.ndarray          # ascending indices of kept representatives
    touch_count: int             # ingestion events during construction
    _cells: dict | None = field(default=None, repr=False)

    @property
    def cells(self) -> dict:
        """Map (ix, iy, iz) -> _CellEntry, built lazily."""
        if self._cells is None:
            order = np.argsort(self.keys, kind="stable")
            sk = self.keys[order]
            starts = np.flatnonzero(np.r_[True, sk[1:] != sk[:-1]])
            bounds = np.r_[starts, len(sk)]
            rep_keys = self.keys[self.rep_idx]
            cells = {}
            for s, e in zip(bounds[:-1], bounds[1:]):
                coord = tuple(_kernels_py.unpack_cells(sk[s:s + 1])[0])
                members = np.sort(order[s:e])
                reps = self.rep_idx[rep_keys == sk[s]]
                cells[coord] = _CellEntry(members, reps)
            self._cells = cells
        return self._cells

    def occupied_count(self) -> int:
        return len(np.unique(self.keys))


def reduce(points, cell_size: float):
    """Keep per-cell axis extremes; returns (HashGrid, representative array).

    Every discarded point stays within cell_size*sqrt(3) of its cell's
    kept representatives, so the reduced hull under-covers the true hull
    by at most that much.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.size == 0:
        raise EmptyInput("reduce needs at least one point")
    if cell_size <= 0:
        raise NonPositiveCell(f"cell size {cell_size} <= 0")
    origin = pts.min(axis=0)
    rep_idx, keys, touches = kernels.reduce_points(pts, origin, cell_size)
    grid = HashGrid(cell_size, origin, keys, rep_idx, touches)
    return grid, pts[rep_idx]


def contains(hull: Hull, point, tol: float = 1e-9) -> bool:
    return hull.contains(point, tol)
