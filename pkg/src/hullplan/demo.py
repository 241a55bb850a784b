"""Built-in demo scene: a small gearbox assembly on a work table.

The scene exercises every planner feature: an absolute mounting subgroup
whose internal layout must survive verbatim, a relative gear cluster the
solver may move as a block, and a loose housing. The same fixture backs
the tests, the CLI demo files, and the benchmark inputs.
"""

from __future__ import annotations

import numpy as np

from .placement import Workspace
from .scene import ConstraintTree, SceneObject
from .transforms import Pose


def box_mesh(sx: float, sy: float, sz: float):
    """Axis-aligned box centered on the origin: (vertices, triangles)."""
    h = np.array([sx, sy, sz]) / 2.0
    corners = np.array([[x, y, z] for x in (-1, 1) for y in (-1, 1)
                        for z in (-1, 1)], dtype=np.float64) * h
    quads = [(0, 1, 3, 2), (4, 6, 7, 5), (0, 4, 5, 1),
             (2, 3, 7, 6), (0, 2, 6, 4), (1, 5, 7, 3)]
    tris = []
    for a, b, c, d in quads:
        tris.append((a, b, c))
        tris.append((a, c, d))
    return corners, np.array(tris, dtype=np.int64)


def prism_mesh(radius: float, height: float, sides: int = 8):
    """Regular prism along z, centered on the origin."""
    ang = 2.0 * np.pi * np.arange(sides) / sides
    ring = np.stack([radius * np.cos(ang), radius * np.sin(ang)], axis=1)
    bot = np.column_stack([ring, np.full(sides, -height / 2.0)])
    top = np.column_stack([ring, np.full(sides, height / 2.0)])
    verts = np.vstack([bot, top])
    tris = []
    for i in range(sides):
        j = (i + 1) % sides
        tris.append((i, j, sides + j))
        tris.append((i, sides + j, sides + i))
    for i in range(1, sides - 1):
        tris.append((0, i + 1, i))                          # bottom cap
        tris.append((sides, sides + i, sides + i + 1))      # top cap
    return verts, np.array(tris, dtype=np.int64)


def _at(x, y, z):
    return Pose(np.array([x, y, z], dtype=np.float64))


def fixture_objects() -> list[SceneObject]:
    """Eight parts laid out near the origin with z = 0 as the common base."""
    plate_v, plate_t = box_mesh(0.16, 0.12, 0.01)
    post_v, post_t = box_mesh(0.02, 0.02, 0.05)
    housing_v, housing_t = box_mesh(0.07, 0.07, 0.06)
    gear_a_v, gear_a_t = prism_mesh(0.03, 0.02)
    gear_b_v, gear_b_t = prism_mesh(0.02, 0.02)
    shaft_v, shaft_t = box_mesh(0.01, 0.01, 0.08)
    return [
        SceneObject("plate", plate_v, plate_t, _at(0.0, 0.0, 0.005)),
        SceneObject("post_a", post_v, post_t, _at(-0.05, 0.0, 0.035)),
        SceneObject("post_b", post_v, post_t, _at(0.05, 0.0, 0.035)),
        # z offsets line every padded hull up on the z = 0 plane, so the
        # whole payload lands supported in one rigid drop
        SceneObject("housing", housing_v, housing_t, _at(0.16, 0.0, 0.031),
                    padding=0.001),
        SceneObject("gear_a", gear_a_v, gear_a_t, _at(0.0, 0.14, 0.012),
                    padding=0.002),
        SceneObject("gear_b", gear_b_v, gear_b_t, _at(0.08, 0.14, 0.012),
                    padding=0.002),
        SceneObject("shaft_a", shaft_v, shaft_t, _at(-0.07, 0.14, 0.041),
                    padding=0.001),
        SceneObject("shaft_b", shaft_v, shaft_t, _at(0.15, 0.14, 0.041),
                    padding=0.001),
    ]


def fixture_tree():
    """Grouped gearbox: returns (tree, root_gid, mounts_gid, geartrain_gid)."""
    tree = ConstraintTree.from_objects(fixture_objects())
    tree, g_mounts = tree.create_group("plate", "post_a")
    tree = tree.add_object(g_mounts, "post_b")
    tree, g_train = tree.create_group("gear_a", "gear_b")
    tree = tree.add_object(g_train, "shaft_a")
    tree = tree.add_object(g_train, "shaft_b")
    tree, g_root = tree.wrap_in_parent(g_mounts, g_train)
    tree = tree.add_object(g_root, "housing")
    tree = tree.toggle_mode(g_mounts)   # the mounts keep their exact layout
    return tree, g_root, g_mounts, g_train


def fixture_spec():
    tree, g_root, _, _ = fixture_tree()
    _, spec = tree.export_spec(g_root)
    return spec


def fixture_workspace() -> Workspace:
    return Workspace(
        table_z=0.72,
        table_min=np.array([0.2, -0.35]),
        table_max=np.array([0.9, 0.35]),
        arm_base=np.array([0.15, 0.0, 0.72]),
        reach=1.0,
    )


def fixture_scene():
    from .fileformats import Scene

    return Scene(fixture_objects(), fixture_workspace(), "arm6")


def write_demo_files(directory) -> tuple:
    """Write gearbox_scene.json and gearbox_spec.json; returns both paths."""
    from pathlib import Path

    from . import fileformats as ff

    directory = Path(directory)
    scene_path = directory / "gearbox_scene.json"
    spec_path = directory / "gearbox_spec.json"
    ff.write_json(scene_path, ff.scene_to_dict(fixture_scene()))
    ff.write_json(spec_path, ff.spec_to_dict(fixture_spec()))
    return scene_path, spec_path
