import numpy as np
import pytest

from conftest import random_pose
from hullplan.transforms import (
    Pose,
    quat_angle,
    quat_from_axis_angle,
    quat_multiply,
    quat_rotate,
    quat_to_matrix,
)


def test_identity_pose():
    p = Pose.identity()
    assert np.allclose(p.apply([[1.0, 2.0, 3.0]]), [[1.0, 2.0, 3.0]])


def test_rotation_normalized_on_construction():
    p = Pose([0, 0, 0], [2.0, 0, 0, 0])
    assert abs(np.linalg.norm(p.rotation) - 1.0) < 1e-12


def test_compose_applies_other_first(rng):
    a = random_pose(rng)
    b = random_pose(rng)
    pts = rng.normal(size=(5, 3))
    assert np.allclose(a.compose(b).apply(pts), a.apply(b.apply(pts)), atol=1e-12)


def test_inverse_roundtrip(rng):
    for _ in range(20):
        p = random_pose(rng)
        r = p.compose(p.inverse())
        assert np.linalg.norm(r.translation) < 1e-12
        assert quat_angle(r.rotation) < 1e-9


def test_matrix_matches_apply(rng):
    p = random_pose(rng)
    pts = rng.normal(size=(4, 3))
    m = p.matrix()
    homog = np.c_[pts, np.ones(4)] @ m.T
    assert np.allclose(homog[:, :3], p.apply(pts), atol=1e-12)


def test_quat_rotate_matches_matrix(rng):
    q = rng.normal(size=4)
    q = q / np.linalg.norm(q)
    pts = rng.normal(size=(7, 3))
    assert np.allclose(quat_rotate(q, pts), pts @ quat_to_matrix(q).T, atol=1e-12)


def test_axis_angle_90deg_about_z():
    q = quat_from_axis_angle([0, 0, 1], np.pi / 2)
    assert np.allclose(quat_rotate(q, np.array([1.0, 0, 0])), [0, 1, 0], atol=1e-12)


def test_quat_multiply_associative(rng):
    qs = [random_pose(rng).rotation for _ in range(3)]
    lhs = quat_multiply(quat_multiply(qs[0], qs[1]), qs[2])
    rhs = quat_multiply(qs[0], quat_multiply(qs[1], qs[2]))
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_distance_to_reports_both_parts():
    a = Pose([0, 0, 0], [1, 0, 0, 0])
    b = Pose([3, 4, 0], quat_from_axis_angle([0, 0, 1], 0.5))
    dt, dr = a.distance_to(b)
    assert dt == pytest.approx(5.0)
    assert dr == pytest.approx(0.5, abs=1e-9)


def test_dict_roundtrip(rng):
    p = random_pose(rng)
    q = Pose.from_dict(p.to_dict())
    assert p.almost_equal(q, 1e-15, 1e-12)
