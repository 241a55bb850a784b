"""Group-level hull composition and the hull visibility rule."""

from __future__ import annotations

import numpy as np

from ..errors import UnknownId
from .core import Hull, pad_points, reduce
from .quickhull import quickhull


def _inflate(hull: Hull, amount: float) -> np.ndarray:
    """Push hull vertices outward from the hull centroid by ``amount``."""
    if amount <= 0:
        return hull.vertices
    c = hull.centroid()
    dirs = hull.vertices - c
    norms = np.linalg.norm(dirs, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return hull.vertices + amount * dirs / norms


def _subtree_max_padding(tree, gid: str) -> float:
    pads = [tree.objects[oid].padding for oid in tree.descendant_objects(gid)]
    return max(pads, default=0.0)


def group_hull(tree, gid: str, delta_nest: float | None = None,
               cell_size: float | None = None, workers: int | None = None,
               _memo: dict | None = None) -> Hull:
    """Hull over a group's padded members and its children's inflated hulls.

    Member meshes go through spatial-hash reduction before the exact
    hull; child hull vertices are appended unreduced so the parent
    always strictly encloses them (by delta_nest when positive).
    """
    if gid not in tree.groups:
        raise UnknownId(f"unknown group {gid!r}")
    if _memo is None:
        _memo = {}
    if gid in _memo:
        return _memo[gid]

    delta = delta_nest if delta_nest is not None else 0.5 * _subtree_max_padding(tree, gid)
    node = tree.groups[gid]

    member_pts = []
    child_pts = []
    for c in node.children:
        if c in tree.objects:
            obj = tree.objects[c]
            world = tree.world_pose(c).apply(obj.vertices)
            member_pts.append(pad_points(world, obj.padding))
        else:
            child = group_hull(tree, c, delta_nest, cell_size, workers, _memo)
            child_pts.append(_inflate(child, delta))

    if member_pts:
        pooled = np.concatenate(member_pts)
        if cell_size != 0:
            span = pooled.max(axis=0) - pooled.min(axis=0)
            diag = float(np.linalg.norm(span))
            cell = cell_size if cell_size else diag / 64.0
            if cell > 0:
                _, pooled = reduce(pooled, cell)
        child_pts.append(pooled)

    hull = quickhull(np.concatenate(child_pts), workers=workers, owner=gid)
    _memo[gid] = hull
    return hull


def forest_hulls(tree, delta_nest: float | None = None,
                 cell_size: float | None = None,
                 workers: int | None = None) -> dict:
    """Hulls for every group in the forest, keyed by group id."""
    memo: dict = {}
    for gid in sorted(tree.groups):
        group_hull(tree, gid, delta_nest, cell_size, workers, memo)
    return memo


def visible_hulls(tree, cursor, delta_nest: float | None = None,
                  cell_size: float | None = None,
                  hulls: dict | None = None) -> set[str]:
    """Root hulls plus children revealed along the cursor containment chain."""
    if hulls is None:
        hulls = forest_hulls(tree, delta_nest, cell_size)
    cursor = np.asarray(cursor, dtype=np.float64)
    visible = set(tree.roots)
    frontier = sorted(tree.roots)
    while frontier:
        nxt = []
        for gid in frontier:
            if not hulls[gid].contains(cursor):
                continue
            kids = [c for c in tree.groups[gid].children if c in tree.groups]
            visible.update(kids)
            nxt.extend(kids)
        frontier = nxt
    return visible
