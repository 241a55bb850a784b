"""Canonical JSON documents: scene files, spec documents, plan files.

Emitters always produce the canonical form: sorted keys, two-space
indent, shortest round-trip float repr, trailing newline. Parsing is
strict about ids and shapes but tolerant of optional fields, so
``parse -> emit`` is the identity on any canonical document and
idempotent on everything it accepts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .arm import ArmModel
from .errors import SchemaError, UnknownId
from .hull import pad_points, quickhull, reduce
from .placement import Placement, Workspace, resolve_poses, settle
from .scene import (
    ABSOLUTE,
    RELATIVE,
    ExportedObject,
    SceneObject,
    SpecDocument,
    SpecGroup,
)
from .sequencing import AssemblyPlan, assemble_plan
from .transforms import Pose

FORMAT_VERSION = 1


# -- canonical emission -------------------------------------------------------

def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    return value


def canonical_dumps(doc: dict) -> str:
    return json.dumps(_plain(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def read_json(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SchemaError("IO", f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("BAD_JSON", f"{path}: {exc}") from exc


def write_json(path, doc: dict) -> None:
    Path(path).write_text(canonical_dumps(doc))


# -- schema helpers -----------------------------------------------------------

def require_field(doc, key: str, kinds, path: str):
    if not isinstance(doc, dict):
        raise SchemaError("SCHEMA", f"{path}: expected an object", path)
    if key not in doc:
        raise SchemaError("SCHEMA", f"{path}: missing key {key!r}", path)
    value = doc[key]
    if not isinstance(value, kinds) or isinstance(value, bool):
        raise SchemaError("SCHEMA", f"{path}.{key}: wrong type", f"{path}.{key}")
    return value


def _vector(value, length: int, path: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise SchemaError("SCHEMA", f"{path}: not numeric", path) from exc
    if arr.shape != (length,) or not np.all(np.isfinite(arr)):
        raise SchemaError("SCHEMA", f"{path}: expected {length} finite numbers", path)
    return arr


def _check_version(doc, path: str) -> None:
    version = require_field(doc, "format_version", int, path)
    if version != FORMAT_VERSION:
        raise SchemaError("VERSION", f"{path}: unsupported format_version {version}", path)


def pose_from(doc, path: str) -> Pose:
    if not isinstance(doc, dict):
        raise SchemaError("SCHEMA", f"{path}: pose must be an object", path)
    t = _vector(doc.get("translation", (0.0, 0.0, 0.0)), 3, f"{path}.translation")
    q = _vector(doc.get("rotation", (1.0, 0.0, 0.0, 0.0)), 4, f"{path}.rotation")
    if np.linalg.norm(q) < 1e-12:
        raise SchemaError("SCHEMA", f"{path}.rotation: zero norm", f"{path}.rotation")
    return Pose(t, q)


# -- scene files --------------------------------------------------------------

@dataclass
class Scene:
    """Parsed scene file: objects, the workspace, and an arm reference."""

    objects: list
    workspace: Workspace
    arm: str | dict


def scene_to_dict(scene: Scene) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "objects": [
            {
                "id": o.id,
                "vertices": o.vertices.tolist(),
                "triangles": o.triangles.tolist(),
                "pose": o.pose.to_dict(),
                "padding": o.padding,
            }
            for o in sorted(scene.objects, key=lambda o: o.id)
        ],
        "workspace": scene.workspace.to_dict(),
        "arm": scene.arm,
    }


def scene_from_dict(doc) -> Scene:
    _check_version(doc, "scene")
    entries = require_field(doc, "objects", list, "scene")
    objects, seen = [], set()
    for i, entry in enumerate(entries):
        path = f"scene.objects[{i}]"
        oid = require_field(entry, "id", str, path)
        if oid in seen:
            raise SchemaError("DUP_ID", f"duplicate object id {oid!r}", path)
        seen.add(oid)
        vertices = require_field(entry, "vertices", list, path)
        triangles = entry.get("triangles", [])
        pose = pose_from(entry.get("pose", {}), f"{path}.pose")
        padding = entry.get("padding", 0.0)
        if isinstance(padding, bool) or not isinstance(padding, (int, float)):
            raise SchemaError("SCHEMA", f"{path}.padding: wrong type", f"{path}.padding")
        try:
            objects.append(SceneObject(oid, vertices, triangles, pose, float(padding)))
        except (TypeError, ValueError) as exc:
            raise SchemaError("SCHEMA", f"{path}: bad mesh arrays ({exc})", path) from exc
    try:
        workspace = Workspace.from_dict(require_field(doc, "workspace", dict, "scene"))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError("SCHEMA", f"scene.workspace: {exc}", "scene.workspace") from exc
    arm = require_field(doc, "arm", (str, dict), "scene")
    return Scene(sorted(objects, key=lambda o: o.id), workspace, arm)


def load_arm(scene: Scene, base_dir=None) -> ArmModel:
    """Resolve a scene's arm reference: inline dict, file path, or packaged name."""
    ref = scene.arm
    try:
        if isinstance(ref, dict):
            return ArmModel.from_dict(ref)
        if ref.endswith(".json"):
            path = Path(ref)
            if not path.is_absolute() and base_dir is not None:
                path = Path(base_dir) / path
            return ArmModel.load(path)
        return ArmModel.named(ref)
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise SchemaError("BAD_ARM", f"cannot load arm {ref!r}: {exc}") from exc


# -- spec documents -----------------------------------------------------------

def spec_to_dict(spec: SpecDocument) -> dict:
    def node(g: SpecGroup) -> dict:
        return {
            "id": g.id,
            "mode": g.mode,
            "pose": g.pose.to_dict(),
            "children": [c if isinstance(c, str) else node(c) for c in g.children],
        }

    return {
        "format_version": FORMAT_VERSION,
        "root": None if spec.root is None else node(spec.root),
        "poses": {oid: obj.pose.to_dict() for oid, obj in spec.objects.items()},
    }


def spec_from_dict(doc, scene: Scene) -> SpecDocument:
    """Rebuild a spec document, pulling object geometry from the scene."""
    _check_version(doc, "spec")
    by_id = {o.id: o for o in scene.objects}
    poses = doc.get("poses", {})
    if not isinstance(poses, dict):
        raise SchemaError("SCHEMA", "spec.poses: expected an object", "spec.poses")
    seen_groups: set[str] = set()
    seen_objects: set[str] = set()
    objects: dict[str, ExportedObject] = {}

    def parse(d, path: str) -> SpecGroup:
        gid = require_field(d, "id", str, path)
        if gid in seen_groups or gid in by_id:
            raise SchemaError("DUP_ID", f"duplicate group id {gid!r}", path)
        seen_groups.add(gid)
        mode = require_field(d, "mode", str, path)
        if mode not in (RELATIVE, ABSOLUTE):
            raise SchemaError("SCHEMA", f"{path}.mode: {mode!r}", f"{path}.mode")
        pose = pose_from(require_field(d, "pose", dict, path), f"{path}.pose")
        children = []
        for j, child in enumerate(require_field(d, "children", list, path)):
            cpath = f"{path}.children[{j}]"
            if isinstance(child, str):
                if child not in by_id:
                    raise UnknownId(f"{cpath}: unknown object {child!r}")
                if child in seen_objects:
                    raise SchemaError("DUP_ID", f"object {child!r} appears twice", cpath)
                seen_objects.add(child)
                if child not in poses:
                    raise SchemaError("SCHEMA", f"missing pose for object {child!r}",
                                      f"spec.poses.{child}")
                src = by_id[child]
                objects[child] = ExportedObject(
                    child, src.vertices, src.triangles,
                    pose_from(poses[child], f"spec.poses.{child}"), src.padding)
                children.append(child)
            elif isinstance(child, dict):
                children.append(parse(child, cpath))
            else:
                raise SchemaError("SCHEMA", f"{cpath}: expected object id or group", cpath)
        if not children:
            raise SchemaError("SCHEMA", f"{path}: group {gid!r} is empty", path)
        return SpecGroup(gid, mode, pose, children)

    root_doc = doc.get("root")
    root = None if root_doc is None else parse(root_doc, "spec.root")
    return SpecDocument(root, objects)


# -- hulls for a spec ---------------------------------------------------------

def spec_world_poses(spec: SpecDocument) -> dict:
    """World pose per group and object id, composed from authored locals."""
    out: dict[str, Pose] = {}

    def walk(g: SpecGroup, parent_world: Pose | None) -> None:
        world = parent_world.compose(g.pose) if parent_world is not None else g.pose.copy()
        out[g.id] = world
        for c in g.children:
            if isinstance(c, str):
                out[c] = world.compose(spec.objects[c].pose)
            else:
                walk(c, world)

    if spec.root is not None:
        walk(spec.root, None)
    return out


def spec_hulls(spec: SpecDocument, poses: dict | None = None,
               cell_size: float | None = None) -> dict:
    """Convex hull per group over padded member geometry at world poses.

    ``poses`` defaults to the authored poses; pass a placement's pose map
    to get hulls of the planned layout instead. A positive ``cell_size``
    reduces the pooled points before hulling (approximate but fast).
    """
    if poses is None:
        poses = spec_world_poses(spec)
    local: dict[str, np.ndarray] = {}
    for oid, obj in spec.objects.items():
        local[oid] = quickhull(pad_points(obj.vertices, obj.padding), workers=1).vertices
    hulls = {}
    for g, _ in spec.preorder():
        pts = np.concatenate([poses[o].apply(local[o])
                              for o in spec.descendant_objects(g)])
        if cell_size:
            _, pts = reduce(pts, cell_size)
        hulls[g.id] = quickhull(pts, workers=1, owner=g.id)
    return hulls


def hulls_to_dict(hulls: dict) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "hulls": {gid: {"vertices": h.vertices.tolist(), "faces": h.faces.tolist()}
                  for gid, h in hulls.items()},
    }


# -- placements and plans -----------------------------------------------------

def placement_to_dict(placement: Placement, seed: int) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "seed": int(seed),
        "placements": {i: p.to_dict() for i, p in placement.poses.items()},
        "diagnostics": dict(placement.diagnostics or {}),
    }


def plan_to_dict(plan: AssemblyPlan, placement: Placement, seed: int) -> dict:
    hulls = spec_hulls(placement.spec, poses=placement.poses) if placement.poses else {}
    doc = placement_to_dict(placement, seed)
    doc.update({
        "tour": {"order": list(plan.tour.order), "length": plan.tour.length},
        "sequences": [
            {
                "group": s.group_id,
                "order": list(s.order),
                "cost": s.cost,
                "configs": {o: list(q) for o, q in s.configs.items()},
            }
            for s in plan.sequences
        ],
        "steps": [
            {
                "object": s.object_id,
                "group": s.group_id,
                "pick": list(s.pick_config),
                "place": list(s.place_config),
                "trajectory": [list(q) for q in s.trajectory],
            }
            for s in plan.steps
        ],
        "staging": {o: p.to_dict() for o, p in plan.staging.items()},
        "hulls": hulls_to_dict(hulls)["hulls"],
    })
    return doc


_PLAN_KEYS = ("placements", "tour", "sequences", "steps", "staging", "hulls")


def plan_from_dict(doc) -> dict:
    """Validate a plan file's shape; returns the parsed document."""
    _check_version(doc, "plan")
    for key in _PLAN_KEYS:
        if key not in doc:
            raise SchemaError("SCHEMA", f"plan: missing key {key!r}", f"plan.{key}")
    require_field(doc, "placements", dict, "plan")
    require_field(doc, "tour", dict, "plan")
    require_field(doc, "sequences", list, "plan")
    require_field(doc, "steps", list, "plan")
    for i, step in enumerate(doc["steps"]):
        path = f"plan.steps[{i}]"
        require_field(step, "object", str, path)
        require_field(step, "pick", list, path)
        require_field(step, "place", list, path)
        require_field(step, "trajectory", list, path)
    return doc


def plan_document(spec: SpecDocument, ws: Workspace, arm: ArmModel,
                  seed: int) -> tuple[dict, Placement, AssemblyPlan]:
    """Run the full pipeline: resolve, settle, sequence, emit."""
    placed = settle(resolve_poses(spec, ws, seed), ws)
    plan = assemble_plan(spec, placed, ws, arm, seed)
    return plan_to_dict(plan, placed, seed), placed, plan
