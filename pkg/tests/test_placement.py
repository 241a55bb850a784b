import numpy as np
import pytest

from hullplan.collision import collide, drop_distance, penetration_depth
from hullplan.demo import box_mesh, fixture_spec, fixture_workspace
from hullplan.errors import Infeasible
from hullplan.placement import (
    Placement,
    Workspace,
    _halton,
    resolve_poses,
    settle,
)
from hullplan.scene import ABSOLUTE, RELATIVE, ExportedObject, SpecDocument, SpecGroup
from hullplan.transforms import Pose

CONTACT_SLACK = 1e-6


def pair_penetration(pl: Placement, a: str, b: str) -> float:
    ha, hb = pl.world_hull(a), pl.world_hull(b)
    if not collide(ha, hb):
        return 0.0
    depth, _ = penetration_depth(ha, hb)
    return depth


def support_gap(pl: Placement, ws: Workspace, oid: str) -> float:
    """Distance the object could still fall before touching anything."""
    pts = pl.world_hull(oid)
    fall = float(pts[:, 2].min()) - ws.table_z
    for other in pl.spec.object_ids():
        if other == oid:
            continue
        d = drop_distance(pts, pl.world_hull(other))
        if d is not None:
            fall = min(fall, d)
    return fall


def poses_bit_equal(a: Placement, b: Placement) -> bool:
    if set(a.poses) != set(b.poses):
        return False
    return all(
        np.array_equal(a.poses[k].translation, b.poses[k].translation)
        and np.array_equal(a.poses[k].rotation, b.poses[k].rotation)
        for k in a.poses
    )


@pytest.fixture(scope="module")
def resolved():
    spec = fixture_spec()
    ws = fixture_workspace()
    return spec, ws, resolve_poses(spec, ws, seed=7)


def test_halton_sequence_values():
    assert [_halton(i, 2) for i in (1, 2, 3, 4)] == [0.5, 0.25, 0.75, 0.125]
    assert _halton(1, 3) == pytest.approx(1 / 3)
    assert _halton(2, 3) == pytest.approx(2 / 3)


def test_fixture_resolves_without_intersections(resolved):
    spec, ws, pl = resolved
    oids = spec.object_ids()
    assert len(oids) == 8
    for i, a in enumerate(oids):
        for b in oids[i + 1:]:
            assert pair_penetration(pl, a, b) <= CONTACT_SLACK, (a, b)


def test_fixture_objects_supported_and_reachable(resolved):
    spec, ws, pl = resolved
    for oid in spec.object_ids():
        assert abs(support_gap(pl, ws, oid)) <= CONTACT_SLACK, oid
        c = pl.world_hull(oid).mean(axis=0)
        assert np.linalg.norm(c - ws.arm_base) <= ws.reach


def test_absolute_subgroup_layout_verbatim(resolved):
    spec, ws, pl = resolved
    mounts = next(g for g, _ in spec.preorder() if g.mode == ABSOLUTE)
    gw = pl.poses[mounts.id]
    for oid in mounts.object_children:
        want = gw.compose(spec.objects[oid].pose)
        assert np.array_equal(pl.poses[oid].translation, want.translation)
        assert np.array_equal(pl.poses[oid].rotation, want.rotation)


def test_relative_groups_stay_rigid(resolved):
    spec, ws, pl = resolved
    for g, _ in spec.preorder():
        for oid in g.object_children:
            authored = spec.objects[oid].pose
            got = pl.poses[g.id].inverse().compose(pl.poses[oid])
            dt, dr = got.distance_to(authored)
            assert dt <= 1e-9 and dr <= 1e-9, (g.id, oid)


def test_resolve_is_deterministic(resolved):
    spec, ws, pl = resolved
    again = resolve_poses(spec, ws, seed=7)
    assert poses_bit_equal(pl, again)


def test_seed_changes_relative_placement(resolved):
    spec, ws, pl = resolved
    other = resolve_poses(spec, ws, seed=8)
    moved = [k for k in pl.poses
             if not np.array_equal(pl.poses[k].translation,
                                   other.poses[k].translation)]
    assert moved


def test_infeasible_when_out_of_reach():
    spec = fixture_spec()
    ws = Workspace(table_z=0.72, table_min=np.array([2.0, 2.0]),
                   table_max=np.array([2.2, 2.2]),
                   arm_base=np.array([0.0, 0.0, 0.72]), reach=0.5)
    with pytest.raises(Infeasible) as err:
        resolve_poses(spec, ws, seed=7)
    assert err.value.group_id in fixture_spec().group_ids()


def test_empty_spec_resolves_empty():
    spec = SpecDocument(root=None, objects={})
    pl = resolve_poses(spec, fixture_workspace(), seed=1)
    assert pl.poses == {}
    assert settle(pl, fixture_workspace()).poses == {}


def test_settle_is_fixpoint_on_resolved_fixture(resolved):
    spec, ws, pl = resolved
    settled = settle(pl, ws)
    assert settled.diagnostics["converged"]
    assert poses_bit_equal(pl, settled)


# -- hand-built scenes for the settle mechanics -------------------------------


def _single_box_spec(oids, size=0.1, mode=RELATIVE):
    v, t = box_mesh(size, size, size)
    root = SpecGroup("root", mode, Pose.identity(), list(oids))
    objects = {oid: ExportedObject(oid, v, t, Pose.identity(), 0.0)
               for oid in oids}
    return SpecDocument(root, objects)


def _flat_workspace():
    return Workspace(table_z=0.0, table_min=np.array([-1.0, -1.0]),
                     table_max=np.array([1.0, 1.0]),
                     arm_base=np.array([0.0, 0.0, 0.0]), reach=10.0)


def _placement(spec, world):
    return Placement({k: Pose(np.asarray(p, dtype=np.float64))
                      for k, p in world.items()}, spec)


def test_settle_separates_overlapping_boxes():
    spec = _single_box_spec(["a", "b"])
    ws = _flat_workspace()
    pl = _placement(spec, {"root": (0, 0, 0),
                           "a": (0.0, 0.0, 0.05),
                           "b": (0.06, 0.0, 0.05)})
    settled = settle(pl, ws)
    assert settled.diagnostics["converged"]
    assert pair_penetration(settled, "a", "b") <= CONTACT_SLACK
    assert abs(support_gap(settled, ws, "a")) <= CONTACT_SLACK
    assert abs(support_gap(settled, ws, "b")) <= CONTACT_SLACK
    # separation is symmetric: both centers gave ground along the push axis
    assert settled.poses["a"].translation[0] < pl.poses["a"].translation[0]
    assert settled.poses["b"].translation[0] > pl.poses["b"].translation[0]


def test_settle_drops_floating_box_onto_table():
    spec = _single_box_spec(["a"])
    ws = _flat_workspace()
    pl = _placement(spec, {"root": (0, 0, 0), "a": (0.3, 0.2, 0.4)})
    settled = settle(pl, ws)
    assert settled.diagnostics["converged"]
    assert settled.poses["a"].translation[2] == pytest.approx(0.05, abs=1e-9)
    # x and y are untouched by a pure drop
    assert settled.poses["a"].translation[0] == 0.3
    assert settled.poses["a"].translation[1] == 0.2


def test_settle_stacks_box_on_box():
    spec = _single_box_spec(["low", "high"])
    ws = _flat_workspace()
    pl = _placement(spec, {"root": (0, 0, 0),
                           "low": (0.0, 0.0, 0.05),
                           "high": (0.02, 0.01, 0.5)})
    settled = settle(pl, ws)
    assert settled.diagnostics["converged"]
    assert settled.poses["high"].translation[2] == pytest.approx(0.15, abs=1e-9)


def test_settle_lifts_box_out_of_table():
    spec = _single_box_spec(["a"])
    ws = _flat_workspace()
    pl = _placement(spec, {"root": (0, 0, 0), "a": (0.0, 0.0, -0.02)})
    settled = settle(pl, ws)
    assert settled.diagnostics["converged"]
    assert settled.poses["a"].translation[2] == pytest.approx(0.05, abs=1e-9)


def test_settle_absolute_unit_moves_rigidly():
    v, t = box_mesh(0.1, 0.1, 0.1)
    unit = SpecGroup("unit", ABSOLUTE, Pose.identity(),
                     ["left", "right"])
    root = SpecGroup("root", RELATIVE, Pose.identity(), [unit, "block"])
    objects = {
        "left": ExportedObject("left", v, t, Pose(np.array([-0.1, 0.0, 0.0])), 0.0),
        "right": ExportedObject("right", v, t, Pose(np.array([0.1, 0.0, 0.0])), 0.0),
        "block": ExportedObject("block", v, t, Pose.identity(), 0.0),
    }
    spec = SpecDocument(root, objects)
    ws = _flat_workspace()
    unit_pose = Pose(np.array([0.0, 0.0, 0.05]))
    pl = Placement({
        "root": Pose.identity(),
        "unit": unit_pose,
        "left": unit_pose.compose(objects["left"].pose),
        "right": unit_pose.compose(objects["right"].pose),
        # overlaps "right" by 0.04 along x
        "block": Pose(np.array([0.16, 0.0, 0.05])),
    }, spec)
    settled = settle(pl, ws)
    assert settled.diagnostics["converged"]
    for a, b in (("left", "block"), ("right", "block"), ("left", "right")):
        assert pair_penetration(settled, a, b) <= CONTACT_SLACK
    # the authored in-unit layout survives to the bit
    gw = settled.poses["unit"]
    for oid in ("left", "right"):
        want = gw.compose(objects[oid].pose)
        assert np.array_equal(settled.poses[oid].translation, want.translation)
        assert np.array_equal(settled.poses[oid].rotation, want.rotation)
    # both sides of the contact moved: the unit gave ground too
    assert settled.poses["unit"].translation[0] < 0.0
    assert settled.poses["block"].translation[0] > 0.16


def test_absolute_root_kept_verbatim():
    v, t = box_mesh(0.1, 0.1, 0.1)
    pose = Pose(np.array([0.4, 0.1, 0.9]))
    root = SpecGroup("root", ABSOLUTE, pose, ["a"])
    spec = SpecDocument(root, {"a": ExportedObject("a", v, t, Pose.identity(), 0.0)})
    pl = resolve_poses(spec, fixture_workspace(), seed=3)
    assert np.array_equal(pl.poses["root"].translation, pose.translation)
    assert np.array_equal(pl.poses["root"].rotation, pose.rotation)
