"""Pose resolution and contact settling for exported constraint trees.

Absolute groups keep their authored poses verbatim; relative groups are
placed root-down by seeded low-discrepancy sampling over the table plane
(x, y, yaw; z dropped to the lowest feasible support) followed by
coordinate-descent refinement on a penalty objective. Settling then
removes any residual interpenetration with position-based half
displacements and gravity drops.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .collision import collide, drop_distance, gjk_distance, penetration_depth
from .errors import Infeasible, InvalidSpec
from .hull.core import pad_points
from .hull.quickhull import quickhull
from .scene import ABSOLUTE, RELATIVE, SpecDocument, SpecGroup
from .transforms import Pose, quat_from_axis_angle

log = logging.getLogger(__name__)

# penalty weights: feasibility terms dominate the compactness pull
W_COLLISION = 1e3
W_REACH = 1e2
W_SUPPORT = 1e2
W_PARENT = 1.0

PEN_TOL = 1e-9          # accepted residual penetration after resolve
CONTACT_SLACK = 1e-6    # resting contact is not a collision
SETTLE_TOL = 1e-4
K_SETTLE = 64
N_CANDIDATES = 40
N_RESTARTS = 4


@dataclass
class Workspace:
    """Table plane, arm base, and the reachability bound."""

    table_z: float
    table_min: np.ndarray   # (x, y) of the table rectangle
    table_max: np.ndarray
    arm_base: np.ndarray
    reach: float

    def __post_init__(self):
        self.table_min = np.asarray(self.table_min, dtype=np.float64)
        self.table_max = np.asarray(self.table_max, dtype=np.float64)
        self.arm_base = np.asarray(self.arm_base, dtype=np.float64)
        if self.reach <= 0:
            raise InvalidSpec("workspace reach must be positive")
        if np.any(self.table_max <= self.table_min):
            raise InvalidSpec("degenerate table extent")

    def to_dict(self) -> dict:
        return {
            "table_z": self.table_z,
            "table_min": self.table_min.tolist(),
            "table_max": self.table_max.tolist(),
            "arm_base": self.arm_base.tolist(),
            "reach": self.reach,
        }

    @staticmethod
    def from_dict(d: dict) -> "Workspace":
        return Workspace(d["table_z"], d["table_min"], d["table_max"],
                         d["arm_base"], d["reach"])


@dataclass
class Placement:
    """World pose per group and object id of an exported subtree."""

    poses: dict
    spec: SpecDocument
    diagnostics: dict | None = None
    _hulls: dict = field(default_factory=dict, repr=False)

    def local_hull(self, oid: str) -> np.ndarray:
        """Padded convex hull vertices of an object, object frame."""
        if oid not in self._hulls:
            obj = self.spec.objects[oid]
            padded = pad_points(obj.vertices, obj.padding)
            self._hulls[oid] = quickhull(padded, workers=1).vertices
        return self._hulls[oid]

    def world_hull(self, oid: str) -> np.ndarray:
        return self.poses[oid].apply(self.local_hull(oid))

    def group_centroid(self, gid: str) -> np.ndarray:
        for g, _ in self.spec.preorder():
            if g.id == gid:
                oids = self.spec.descendant_objects(g)
                return np.mean([self.world_hull(o).mean(axis=0) for o in oids],
                               axis=0)
        raise KeyError(gid)

    def copy(self) -> "Placement":
        return Placement({k: p.copy() for k, p in self.poses.items()},
                         self.spec, None, self._hulls)


def _xy_disjoint(a: np.ndarray, b: np.ndarray, margin: float = 1e-9) -> bool:
    """True when the xy shadows cannot meet, so a vertical sweep misses."""
    return bool(np.any(a[:, :2].max(axis=0) < b[:, :2].min(axis=0) - margin)
                or np.any(b[:, :2].max(axis=0) < a[:, :2].min(axis=0) - margin))


def _aabb_disjoint(a: np.ndarray, b: np.ndarray, margin: float = 1e-9) -> bool:
    return bool(np.any(a.max(axis=0) < b.min(axis=0) - margin)
                or np.any(b.max(axis=0) < a.min(axis=0) - margin))


def _halton(index: int, base: int) -> float:
    f, r = 1.0, 0.0
    i = index
    while i > 0:
        f /= base
        r += f * (i % base)
        i //= base
    return r


def _payload(doc: SpecDocument, g: SpecGroup):
    """Object ids that move rigidly with g, with their g-frame poses.

    Direct members and everything under absolute child groups; relative
    child groups place themselves afterward.
    """
    out = []

    def walk(node: SpecGroup, frame: Pose):
        for oid in node.object_children:
            out.append((oid, frame.compose(doc.objects[oid].pose)))
        for child in node.group_children:
            if child.mode == ABSOLUTE:
                walk(child, frame.compose(child.pose))

    walk(g, Pose.identity())
    return out


class _Resolver:
    def __init__(self, doc: SpecDocument, ws: Workspace, seed: int):
        self.doc = doc
        self.ws = ws
        self.seed = int(seed)
        self.poses: dict = {}
        self.placed_hulls: list[np.ndarray] = []  # world hulls placed so far
        self._local = {}

    def local_hull(self, oid: str) -> np.ndarray:
        if oid not in self._local:
            obj = self.doc.objects[oid]
            self._local[oid] = quickhull(
                pad_points(obj.vertices, obj.padding), workers=1).vertices
        return self._local[oid]

    # -- candidate machinery ----------------------------------------------

    def _drop_z(self, pts_at_z0: np.ndarray) -> float:
        """z-offset putting the cloud at its lowest feasible support."""
        ws = self.ws
        lift = 1.0 + max(0.0, ws.table_z - float(pts_at_z0[:, 2].min()))
        high = pts_at_z0 + np.array([0.0, 0.0, lift])
        fall = float(high[:, 2].min()) - ws.table_z
        for other in self.placed_hulls:
            if _xy_disjoint(high, other):
                continue
            d = drop_distance(high, other)
            if d is not None and d < fall:
                fall = d
        return lift - fall

    def _score(self, world_pts_per_obj: list[np.ndarray],
               parent_centroid: np.ndarray | None):
        pen = 0.0
        for pts in world_pts_per_obj:
            for other in self.placed_hulls:
                if _aabb_disjoint(pts, other):
                    continue
                if collide(pts, other):
                    depth, _ = penetration_depth(other, pts)
                    pen += depth
        reach_excess = 0.0
        for pts in world_pts_per_obj:
            c = pts.mean(axis=0)
            over = float(np.linalg.norm(c - self.ws.arm_base)) - self.ws.reach
            if over > 0:
                reach_excess += over * over
        # every member must rest on something: table, an already placed
        # hull, or another member of this payload
        gap = 0.0
        for i, pts in enumerate(world_pts_per_obj):
            fall = float(pts[:, 2].min()) - self.ws.table_z
            supports = self.placed_hulls + [
                q for j, q in enumerate(world_pts_per_obj) if j != i]
            for other in supports:
                if fall <= 0.0 or _xy_disjoint(pts, other):
                    continue
                d = drop_distance(pts, other)
                if d is not None:
                    fall = min(fall, d)
            gap = max(gap, fall)
        gap = max(gap, 0.0)
        centroid = np.mean([p.mean(axis=0) for p in world_pts_per_obj], axis=0)
        pull = 0.0
        if parent_centroid is not None:
            pull = float(np.sum((centroid - parent_centroid) ** 2))
        j = (W_COLLISION * pen + W_REACH * reach_excess
             + W_SUPPORT * gap * gap + W_PARENT * pull)
        feasible = pen <= PEN_TOL and reach_excess == 0.0 and gap <= 1e-9
        return j, feasible

    def _evaluate(self, g_payload, x: float, y: float, yaw: float,
                  parent_centroid):
        # the group origin stays on the table, including during refinement
        x = float(np.clip(x, self.ws.table_min[0], self.ws.table_max[0]))
        y = float(np.clip(y, self.ws.table_min[1], self.ws.table_max[1]))
        rot = quat_from_axis_angle([0.0, 0.0, 1.0], yaw)
        base = Pose(np.array([x, y, 0.0]), rot)
        pts0 = [base.compose(rel).apply(self.local_hull(oid))
                for oid, rel in g_payload]
        z = self._drop_z(np.concatenate(pts0))
        shift = np.array([0.0, 0.0, z])
        world_pts = [p + shift for p in pts0]
        j, feasible = self._score(world_pts, parent_centroid)
        return j, feasible, Pose(np.array([x, y, z]), rot)

    def place_relative(self, g: SpecGroup, parent_centroid) -> Pose:
        payload = _payload(self.doc, g)
        if not payload:
            if parent_centroid is not None:
                return Pose(np.asarray(parent_centroid, dtype=np.float64))
            cx, cy = (self.ws.table_min + self.ws.table_max) / 2.0
            return Pose(np.array([cx, cy, self.ws.table_z]))

        lo, hi = self.ws.table_min, self.ws.table_max
        offset = (self.seed % 9973) * N_CANDIDATES + 1
        best = None
        for restart in range(N_RESTARTS):
            for k in range(N_CANDIDATES):
                i = offset + restart * N_CANDIDATES + k
                x = lo[0] + _halton(i, 2) * (hi[0] - lo[0])
                y = lo[1] + _halton(i, 3) * (hi[1] - lo[1])
                yaw = _halton(i, 5) * 2.0 * np.pi
                cand = self._evaluate(payload, x, y, yaw, parent_centroid)
                if best is None or cand[0] < best[0]:
                    best = cand
            # coordinate descent on (x, y, yaw) around the incumbent
            for step in (0.04, 0.02, 0.01, 0.005):
                improved = True
                while improved:
                    improved = False
                    pose = best[2]
                    x0, y0 = pose.translation[0], pose.translation[1]
                    yaw0 = 2.0 * np.arctan2(pose.rotation[3], pose.rotation[0])
                    for dx, dy, dyaw in ((step, 0, 0), (-step, 0, 0),
                                         (0, step, 0), (0, -step, 0),
                                         (0, 0, 4 * step), (0, 0, -4 * step)):
                        cand = self._evaluate(payload, x0 + dx, y0 + dy,
                                              yaw0 + dyaw, parent_centroid)
                        if cand[0] < best[0]:
                            best = cand
                            improved = True
                if best[1]:
                    break
            if best[1]:
                return best[2]
        raise Infeasible(g.id)

    # -- the root-down sweep ------------------------------------------------

    def _commit(self, g: SpecGroup, world_pose: Pose):
        """Fix g's pose and, transitively, every absolute descendant.

        Committing the whole absolute chain up front means any relative
        group placed later already sees these objects as obstacles.
        """
        self.poses[g.id] = world_pose
        for oid in g.object_children:
            self.poses[oid] = world_pose.compose(self.doc.objects[oid].pose)
            self.placed_hulls.append(
                self.poses[oid].apply(self.local_hull(oid)))
        for child in g.group_children:
            if child.mode == ABSOLUTE:
                self._commit(child, world_pose.compose(child.pose))

    def run(self) -> Placement:
        doc = self.doc
        for g, parent in doc.preorder():
            if g.id in self.poses:
                continue  # absolute, committed together with its parent
            if g.mode == ABSOLUTE:
                # only reachable at the root: authored pose is world-frame
                self._commit(g, g.pose.copy())
            elif g.mode == RELATIVE:
                parent_centroid = None
                if parent is not None:
                    anchor = [oid for oid, _ in _payload(doc, parent)]
                    if anchor:
                        parent_centroid = np.mean(
                            [self.poses[o].apply(self.local_hull(o)).mean(axis=0)
                             for o in anchor], axis=0)
                    else:
                        parent_centroid = self.poses[parent.id].translation
                self._commit(g, self.place_relative(g, parent_centroid))
            else:
                raise InvalidSpec(f"group {g.id}: unknown mode {g.mode!r}")
        placement = Placement(self.poses, doc)
        placement._hulls = self._local
        return placement


def resolve_poses(spec: SpecDocument, ws: Workspace, seed: int) -> Placement:
    """Assign world poses to every group and object of an exported tree."""
    if spec.root is None:
        return Placement({}, spec)
    ids = spec.group_ids() + spec.object_ids()
    if len(set(ids)) != len(ids):
        raise InvalidSpec("duplicate ids in exported tree")
    for g, _ in spec.preorder():
        for oid in g.object_children:
            if oid not in spec.objects:
                raise InvalidSpec(f"object {oid!r} missing from document")
    return _Resolver(spec, ws, seed).run()


# -- settling ----------------------------------------------------------------

def _settle_units(placement: Placement):
    """Rigid settle units: subtree of the outermost absolute group, else
    each object alone. Each unit is (root group or None, object ids)."""
    doc = placement.spec
    units = []
    claimed = set()
    for g, _ in doc.preorder():
        if g.mode == ABSOLUTE and g.id not in claimed:
            members = doc.descendant_objects(g)
            units.append((g, members))
            claimed.add(g.id)
            stack = list(g.group_children)
            while stack:
                h = stack.pop()
                claimed.add(h.id)
                stack.extend(h.group_children)
            claimed.update(members)
    for g, _ in doc.preorder():
        for oid in g.object_children:
            if oid not in claimed:
                units.append((None, [oid]))
                claimed.add(oid)
    return units


def _translate_unit(placement: Placement, unit, delta: np.ndarray):
    """Translate a rigid unit, recomposing authored frames exactly.

    Absolute descendants and member objects are recomputed from the moved
    root with the same compositions resolve used, so the authored internal
    layout stays bit-identical under settling.
    """
    root, members = unit
    poses = placement.poses
    if root is None:
        oid = members[0]
        poses[oid] = Pose(poses[oid].translation + delta, poses[oid].rotation)
        return
    doc = placement.spec

    def walk(g: SpecGroup):
        gw = poses[g.id]
        for oid in g.object_children:
            poses[oid] = gw.compose(doc.objects[oid].pose)
        for child in g.group_children:
            if child.mode == ABSOLUTE:
                poses[child.id] = gw.compose(child.pose)
            else:
                p = poses[child.id]
                poses[child.id] = Pose(p.translation + delta, p.rotation)
            walk(child)

    rp = poses[root.id]
    poses[root.id] = Pose(rp.translation + delta, rp.rotation)
    walk(root)


def settle(placement: Placement, ws: Workspace) -> Placement:
    """Resolve interpenetrations and drop everything onto its support.

    Runs at most K_SETTLE rounds of pairwise half-displacements followed
    by gravity drops. Objects inside an absolute group translate as one
    rigid unit. On non-convergence the best iterate is returned and the
    failure is described in ``diagnostics``.
    """
    if not placement.poses:
        return placement
    out = placement.copy()
    units = _settle_units(out)
    owner = {}
    for ui, (_root, members) in enumerate(units):
        for oid in members:
            owner[oid] = ui
    all_objs = sorted(owner)

    def hull_of(oid):
        return out.poses[oid].apply(out.local_hull(oid))

    def max_penetration():
        worst = 0.0
        for i, a in enumerate(all_objs):
            for b in all_objs[i + 1:]:
                if owner[a] == owner[b]:
                    continue
                ha, hb = hull_of(a), hull_of(b)
                if _aabb_disjoint(ha, hb):
                    continue
                if collide(ha, hb):
                    depth, _ = penetration_depth(ha, hb)
                    worst = max(worst, depth)
        return worst

    for iteration in range(K_SETTLE):
        # (1) position-based pair resolution, half displacement each side
        shifts = [np.zeros(3) for _ in units]
        for i, a in enumerate(all_objs):
            for b in all_objs[i + 1:]:
                if owner[a] == owner[b]:
                    continue
                ha, hb = hull_of(a), hull_of(b)
                if _aabb_disjoint(ha, hb) or gjk_distance(ha, hb) > CONTACT_SLACK:
                    continue
                depth, direction = penetration_depth(ha, hb)
                if depth <= CONTACT_SLACK:
                    continue
                shifts[owner[b]] += 0.5 * depth * direction
                shifts[owner[a]] -= 0.5 * depth * direction
        for ui, delta in enumerate(shifts):
            if np.any(delta):
                _translate_unit(out, units[ui], delta)

        # (2) gravity: drop unsupported units, lowest first
        order = sorted(range(len(units)),
                       key=lambda ui: (min(float(hull_of(o)[:, 2].min())
                                           for o in units[ui][1]), ui))
        fell = False
        for ui in order:
            members = units[ui][1]
            pts = np.concatenate([hull_of(o) for o in members])
            fall = float(pts[:, 2].min()) - ws.table_z
            for other in all_objs:
                if owner[other] == ui:
                    continue
                ho = hull_of(other)
                if _xy_disjoint(pts, ho):
                    continue
                d = drop_distance(pts, ho)
                if d is not None and d < fall:
                    fall = d
            # fall < 0 means the unit sits below the table plane: lift it
            if abs(fall) > CONTACT_SLACK:
                fell = True
                _translate_unit(out, units[ui], np.array([0.0, 0.0, -fall]))

        residual = max_penetration()
        if residual < SETTLE_TOL and not fell:
            out.diagnostics = {"converged": True, "iterations": iteration + 1,
                               "max_penetration": residual}
            return out

    out.diagnostics = {"converged": False, "iterations": K_SETTLE,
                       "max_penetration": max_penetration()}
    log.warning("settle did not converge: %s", out.diagnostics)
    return out
