"""Scene objects and the hierarchical constraint forest.

Every authoring operation is a pure state transition: it validates its
preconditions against the current tree, then returns a *new* tree. The
receiver is never mutated, so snapshots handed to concurrent readers
(hull engine, planner) stay coherent, and a raised error leaves the
caller's tree untouched.

Group poses are expressed in the frame of their parent group (world for
roots); object poses in the frame of their owning group (world when
ungrouped). Reparenting rewrites local poses so world poses never move.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AlreadyExported,
    AlreadyGrouped,
    CycleError,
    DegenerateMesh,
    GroupFrozen,
    NegativePadding,
    NotRoot,
    UnknownId,
)
from .transforms import Pose

RELATIVE = "relative"
ABSOLUTE = "absolute"


class SceneObject:
    """An identified triangle mesh with a pose and a padding radius."""

    __slots__ = ("id", "vertices", "triangles", "pose", "padding")

    def __init__(self, id: str, vertices, triangles, pose: Pose | None = None,
                 padding: float = 0.0):
        self.id = id
        self.vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        self.pose = pose if pose is not None else Pose.identity()
        self.padding = float(padding)
        _validate_mesh(self.id, self.vertices, self.triangles)
        if self.padding < 0:
            raise NegativePadding(f"object {id!r} has padding {self.padding}")

    def with_pose(self, pose: Pose) -> "SceneObject":
        dup = SceneObject.__new__(SceneObject)
        dup.id = self.id
        dup.vertices = self.vertices
        dup.triangles = self.triangles
        dup.pose = pose
        dup.padding = self.padding
        return dup


def _validate_mesh(oid: str, vertices: np.ndarray, triangles: np.ndarray) -> None:
    if vertices.ndim != 2 or vertices.shape[1] != 3 or vertices.shape[0] < 4:
        raise DegenerateMesh(f"object {oid!r}: mesh needs >= 4 vertices")
    if triangles.size and (triangles.min() < 0 or triangles.max() >= len(vertices)):
        raise DegenerateMesh(f"object {oid!r}: triangle index out of range")
    centered = vertices - vertices.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[0] < 1e-12 or sv[2] < 1e-9 * sv[0]:
        raise DegenerateMesh(f"object {oid!r}: vertices are coplanar or coincident")


@dataclass
class GroupNode:
    id: str
    mode: str
    pose: Pose
    children: list  # ordered object ids and group ids
    parent: str | None = None

    def copy(self) -> "GroupNode":
        return GroupNode(self.id, self.mode, self.pose, list(self.children), self.parent)


@dataclass
class ExportedObject:
    """Snapshot of an object at export time; pose is local to its group."""

    id: str
    vertices: np.ndarray
    triangles: np.ndarray
    pose: Pose
    padding: float


@dataclass
class SpecGroup:
    """Node of an exported hierarchy; children are SpecGroups or object ids."""

    id: str
    mode: str
    pose: Pose
    children: list

    @property
    def group_children(self) -> list["SpecGroup"]:
        return [c for c in self.children if isinstance(c, SpecGroup)]

    @property
    def object_children(self) -> list[str]:
        return [c for c in self.children if isinstance(c, str)]


@dataclass
class SpecDocument:
    root: SpecGroup | None
    objects: dict  # object id -> ExportedObject

    def group_ids(self) -> list[str]:
        return [g.id for g, _ in self.preorder()]

    def object_ids(self) -> list[str]:
        return list(self.objects.keys())

    def preorder(self) -> list:
        """(group, parent-or-None) pairs, each parent before its children."""
        out = []
        if self.root is None:
            return out

        def walk(g: SpecGroup, parent):
            out.append((g, parent))
            for c in g.group_children:
                walk(c, g)

        walk(self.root, None)
        return out

    def descendant_objects(self, g: SpecGroup) -> list[str]:
        out = list(g.object_children)
        for c in g.group_children:
            out.extend(self.descendant_objects(c))
        return out


class ConstraintTree:
    """Immutable-by-convention forest of constraint groups over scene objects."""

    __slots__ = ("objects", "groups", "roots", "ungrouped", "exported",
                 "_owner", "_gid_counter")

    def __init__(self):
        self.objects: dict[str, SceneObject] = {}
        self.groups: dict[str, GroupNode] = {}
        self.roots: set[str] = set()
        self.ungrouped: set[str] = set()
        self.exported: set[str] = set()
        self._owner: dict[str, str] = {}  # object id -> owning group id
        self._gid_counter = 0

    # -- construction --------------------------------------------------

    @staticmethod
    def from_objects(objects) -> "ConstraintTree":
        tree = ConstraintTree()
        for obj in objects:
            if obj.id in tree.objects:
                raise AlreadyGrouped(f"duplicate object id {obj.id!r}")
            tree.objects[obj.id] = obj
            tree.ungrouped.add(obj.id)
        return tree

    def _clone(self) -> "ConstraintTree":
        dup = ConstraintTree()
        dup.objects = dict(self.objects)
        dup.groups = dict(self.groups)
        dup.roots = set(self.roots)
        dup.ungrouped = set(self.ungrouped)
        dup.exported = set(self.exported)
        dup._owner = dict(self._owner)
        dup._gid_counter = self._gid_counter
        return dup

    def _fresh_gid(self) -> str:
        while True:
            self._gid_counter += 1
            gid = f"g{self._gid_counter}"
            if gid not in self.groups and gid not in self.objects:
                return gid

    # -- queries ---------------------------------------------------------

    def is_group(self, ident: str) -> bool:
        return ident in self.groups

    def is_object(self, ident: str) -> bool:
        return ident in self.objects

    def parent_of(self, ident: str) -> str | None:
        if ident in self.groups:
            return self.groups[ident].parent
        if ident in self.objects:
            return self._owner.get(ident)
        raise UnknownId(ident)

    def world_pose(self, ident: str) -> Pose:
        """Composition of local poses from the root down to ``ident``."""
        chain = []
        cur: str | None = ident
        while cur is not None:
            if cur in self.groups:
                chain.append(self.groups[cur].pose)
                cur = self.groups[cur].parent
            elif cur in self.objects:
                chain.append(self.objects[cur].pose)
                cur = self._owner.get(cur)
            else:
                raise UnknownId(cur)
        pose = Pose.identity()
        for local in reversed(chain):
            pose = pose.compose(local)
        return pose

    def descendant_groups(self, gid: str) -> list[str]:
        out, stack = [], [gid]
        while stack:
            g = stack.pop()
            out.append(g)
            for c in self.groups[g].children:
                if c in self.groups:
                    stack.append(c)
        return out

    def descendant_objects(self, gid: str) -> list[str]:
        out = []
        for g in self.descendant_groups(gid):
            out.extend(c for c in self.groups[g].children if c in self.objects)
        return out

    def is_frozen(self, ident: str) -> bool:
        """True when ``ident`` or any ancestor group was exported."""
        cur: str | None = ident if ident in self.groups else self.parent_of(ident)
        while cur is not None:
            if cur in self.exported:
                return True
            cur = self.groups[cur].parent
        return False

    def _require_group(self, gid: str) -> GroupNode:
        node = self.groups.get(gid)
        if node is None:
            raise UnknownId(f"unknown group {gid!r}")
        return node

    def _require_object(self, oid: str) -> SceneObject:
        obj = self.objects.get(oid)
        if obj is None:
            raise UnknownId(f"unknown object {oid!r}")
        return obj

    # -- authoring operations ---------------------------------------------

    def create_group(self, a: str, b: str) -> tuple["ConstraintTree", str]:
        """Group two ungrouped objects (or one, when a == b) under a new root."""
        self._require_object(a)
        self._require_object(b)
        members = [a] if a == b else [a, b]
        for oid in members:
            if oid not in self.ungrouped:
                raise AlreadyGrouped(f"object {oid!r} already belongs to a group")
        centroid = np.mean([self.world_pose(o).translation for o in members], axis=0)
        group_pose = Pose(centroid)
        inv = group_pose.inverse()

        tree = self._clone()
        gid = tree._fresh_gid()
        tree.groups[gid] = GroupNode(gid, RELATIVE, group_pose, list(members))
        tree.roots.add(gid)
        for oid in members:
            tree.objects[oid] = self.objects[oid].with_pose(inv.compose(self.world_pose(oid)))
            tree.ungrouped.discard(oid)
            tree._owner[oid] = gid
        return tree, gid

    def add_object(self, gid: str, oid: str) -> "ConstraintTree":
        node = self._require_group(gid)
        self._require_object(oid)
        if oid not in self.ungrouped:
            raise AlreadyGrouped(f"object {oid!r} already belongs to a group")
        if self.is_frozen(gid):
            raise GroupFrozen(f"group {gid!r} was exported")
        local = self.world_pose(gid).inverse().compose(self.world_pose(oid))

        tree = self._clone()
        updated = node.copy()
        updated.children.append(oid)
        tree.groups[gid] = updated
        tree.objects[oid] = self.objects[oid].with_pose(local)
        tree.ungrouped.discard(oid)
        tree._owner[oid] = gid
        return tree

    def nest_groups(self, first: str, second: str) -> "ConstraintTree":
        """Make ``second`` (a root) a child of ``first``."""
        self._require_group(first)
        second_node = self._require_group(second)
        if first == second:
            raise CycleError("a group cannot be nested inside itself")
        if second not in self.roots:
            raise NotRoot(f"group {second!r} already has a parent")
        if first in self.descendant_groups(second):
            raise CycleError(f"group {first!r} is a descendant of {second!r}")
        if self.is_frozen(first) or self.is_frozen(second):
            raise GroupFrozen("cannot nest exported groups")
        local = self.world_pose(first).inverse().compose(self.world_pose(second))

        tree = self._clone()
        parent = self.groups[first].copy()
        parent.children.append(second)
        tree.groups[first] = parent
        child = second_node.copy()
        child.pose = local
        child.parent = first
        tree.groups[second] = child
        tree.roots.discard(second)
        return tree

    def wrap_in_parent(self, a: str, b: str) -> tuple["ConstraintTree", str]:
        """Create a new root group holding root groups ``a`` and ``b``."""
        self._require_group(a)
        self._require_group(b)
        if a == b:
            raise CycleError("cannot wrap a group with itself")
        for gid in (a, b):
            if gid not in self.roots:
                raise NotRoot(f"group {gid!r} is not a root")
            if self.is_frozen(gid):
                raise GroupFrozen(f"group {gid!r} was exported")
        centroid = 0.5 * (self.world_pose(a).translation + self.world_pose(b).translation)
        wrap_pose = Pose(centroid)
        inv = wrap_pose.inverse()

        tree = self._clone()
        gid = tree._fresh_gid()
        tree.groups[gid] = GroupNode(gid, RELATIVE, wrap_pose, [a, b])
        tree.roots.add(gid)
        for child in (a, b):
            node = self.groups[child].copy()
            node.pose = inv.compose(self.world_pose(child))
            node.parent = gid
            tree.groups[child] = node
            tree.roots.discard(child)
        return tree, gid

    def delete_group(self, gid: str) -> "ConstraintTree":
        """Remove a group, promoting its children to the group's parent."""
        node = self._require_group(gid)
        if self.is_frozen(gid):
            raise GroupFrozen(f"group {gid!r} was exported")
        parent_id = node.parent
        world = {c: self.world_pose(c) for c in node.children}

        tree = self._clone()
        if parent_id is None:
            for c in node.children:
                if c in self.groups:
                    promoted = self.groups[c].copy()
                    promoted.pose = world[c]
                    promoted.parent = None
                    tree.groups[c] = promoted
                    tree.roots.add(c)
                else:
                    tree.objects[c] = self.objects[c].with_pose(world[c])
                    tree.ungrouped.add(c)
                    tree._owner.pop(c, None)
            tree.roots.discard(gid)
        else:
            parent_inv = self.world_pose(parent_id).inverse()
            parent = self.groups[parent_id].copy()
            slot = parent.children.index(gid)
            parent.children[slot:slot + 1] = list(node.children)
            tree.groups[parent_id] = parent
            for c in node.children:
                local = parent_inv.compose(world[c])
                if c in self.groups:
                    promoted = self.groups[c].copy()
                    promoted.pose = local
                    promoted.parent = parent_id
                    tree.groups[c] = promoted
                else:
                    tree.objects[c] = self.objects[c].with_pose(local)
                    tree._owner[c] = parent_id
        del tree.groups[gid]
        return tree

    def toggle_mode(self, gid: str) -> "ConstraintTree":
        node = self._require_group(gid)
        if self.is_frozen(gid):
            raise GroupFrozen(f"group {gid!r} was exported")
        tree = self._clone()
        updated = node.copy()
        updated.mode = ABSOLUTE if node.mode == RELATIVE else RELATIVE
        tree.groups[gid] = updated
        return tree

    def set_pose(self, ident: str, pose: Pose) -> "ConstraintTree":
        """Replace a local pose; descendants ride along rigidly."""
        if ident not in self.groups and ident not in self.objects:
            raise UnknownId(ident)
        if self.is_frozen(ident):
            raise GroupFrozen(f"{ident!r} is inside an exported subtree")
        tree = self._clone()
        if ident in self.groups:
            node = self.groups[ident].copy()
            node.pose = pose
            tree.groups[ident] = node
        else:
            tree.objects[ident] = self.objects[ident].with_pose(pose)
        return tree

    def export_spec(self, gid: str) -> tuple["ConstraintTree", SpecDocument]:
        """Freeze a root group's subtree and emit its spec document."""
        self._require_group(gid)
        if gid not in self.roots:
            raise NotRoot(f"group {gid!r} is not a root")
        if gid in self.exported:
            raise AlreadyExported(f"group {gid!r} was already exported")

        objects: dict[str, ExportedObject] = {}

        def build(g: str) -> SpecGroup:
            node = self.groups[g]
            children = []
            for c in node.children:
                if c in self.groups:
                    children.append(build(c))
                else:
                    obj = self.objects[c]
                    objects[c] = ExportedObject(c, obj.vertices, obj.triangles,
                                                obj.pose.copy(), obj.padding)
                    children.append(c)
            return SpecGroup(g, node.mode, node.pose.copy(), children)

        doc = SpecDocument(build(gid), objects)
        tree = self._clone()
        tree.exported.update(self.descendant_groups(gid))
        return tree, doc

    # -- validation --------------------------------------------------------

    def validate(self) -> None:
        """Full forest sweep; raises AssertionError on a broken invariant."""
        seen_children: dict[str, str] = {}
        for gid, node in self.groups.items():
            assert node.id == gid
            assert node.mode in (RELATIVE, ABSOLUTE), f"bad mode on {gid}"
            assert node.children, f"group {gid} is empty"
            for c in node.children:
                assert c in self.groups or c in self.objects, f"dangling child {c}"
                assert c not in seen_children, f"{c} appears under two groups"
                seen_children[c] = gid
        for gid, node in self.groups.items():
            if node.parent is None:
                assert gid in self.roots, f"parentless group {gid} not in roots"
            else:
                assert seen_children.get(gid) == node.parent, f"parent mismatch on {gid}"
                assert gid not in self.roots
        for gid in self.roots:
            assert gid in self.groups and self.groups[gid].parent is None
        for oid in self.objects:
            grouped = oid in seen_children
            assert grouped != (oid in self.ungrouped), f"grouping state of {oid} inconsistent"
            if grouped:
                assert self._owner.get(oid) == seen_children[oid]
        # acyclicity: every group reaches a root through parents
        for gid in self.groups:
            hops, cur = 0, gid
            while self.groups[cur].parent is not None:
                cur = self.groups[cur].parent
                hops += 1
                assert hops <= len(self.groups), f"parent cycle at {gid}"
        for gid in self.exported:
            assert gid in self.groups
