"""Serial-arm kinematics: FK, damped-least-squares IK, and a seeded
bidirectional tree planner over joint space.

Link geometry is approximated by capsules, which keeps every collision
query a convex distance test against the obstacle hulls.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .collision import gjk_distance
from .errors import (
    GoalInCollision,
    InvalidSpec,
    LimitViolation,
    NoSolution,
    PlanTimeout,
    StartInCollision,
)
from .transforms import Pose, quat_from_axis_angle, quat_to_matrix

DATA_DIR = Path(__file__).parent / "data"

DQ_CHECK = 0.05          # rad, interpolation resolution for edge checks
IK_TOL_POS = 1e-4        # m
IK_TOL_ROT = 1e-3        # rad
IK_MAX_ITER = 300
IK_RESTARTS = 40
RRT_STEP = 0.3           # rad, joint-space extension step
RRT_MAX_ITER = 4000


@dataclass
class Joint:
    offset: Pose            # fixed transform from the previous joint frame
    axis: np.ndarray        # unit rotation axis in this joint's frame
    limits: tuple           # (lower, upper) radians

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=np.float64)
        n = float(np.linalg.norm(self.axis))
        if n < 1e-12:
            raise InvalidSpec("joint axis must be nonzero")
        self.axis = self.axis / n
        lo, hi = self.limits
        if not lo < hi:
            raise InvalidSpec(f"joint limits must satisfy lower < upper, got {self.limits}")
        self.limits = (float(lo), float(hi))


@dataclass
class Capsule:
    joint: int              # frame index: world pose of that joint's link
    p0: np.ndarray
    p1: np.ndarray
    radius: float

    def __post_init__(self):
        self.p0 = np.asarray(self.p0, dtype=np.float64)
        self.p1 = np.asarray(self.p1, dtype=np.float64)
        if self.radius <= 0:
            raise InvalidSpec("capsule radius must be positive")


@dataclass
class ArmModel:
    joints: list
    tool: Pose = field(default_factory=Pose.identity)
    capsules: list = field(default_factory=list)
    base: Pose = field(default_factory=Pose.identity)
    name: str = "arm"

    def __post_init__(self):
        if len(self.joints) < 2:
            raise InvalidSpec("an arm needs at least 2 joints")
        for cap in self.capsules:
            if not 0 <= cap.joint < len(self.joints):
                raise InvalidSpec(f"capsule frame index {cap.joint} out of range")

    @property
    def dof(self) -> int:
        return len(self.joints)

    @property
    def lower(self) -> np.ndarray:
        return np.array([j.limits[0] for j in self.joints])

    @property
    def upper(self) -> np.ndarray:
        return np.array([j.limits[1] for j in self.joints])

    def at_base(self, base: Pose) -> "ArmModel":
        return ArmModel(self.joints, self.tool, self.capsules, base, self.name)

    def check_limits(self, q: np.ndarray) -> None:
        q = np.asarray(q, dtype=np.float64)
        if q.shape != (self.dof,):
            raise LimitViolation(f"expected {self.dof} joint angles, got shape {q.shape}")
        bad = np.where((q < self.lower - 1e-12) | (q > self.upper + 1e-12))[0]
        if bad.size:
            raise LimitViolation(f"joint {int(bad[0])} angle {q[bad[0]]:.4f} outside limits")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "joints": [{"offset": j.offset.to_dict(),
                        "axis": j.axis.tolist(),
                        "limits": list(j.limits)} for j in self.joints],
            "tool": self.tool.to_dict(),
            "capsules": [{"joint": c.joint, "p0": c.p0.tolist(),
                          "p1": c.p1.tolist(), "radius": c.radius}
                         for c in self.capsules],
        }

    @staticmethod
    def from_dict(d: dict) -> "ArmModel":
        joints = [Joint(Pose.from_dict(j["offset"]), j["axis"],
                        tuple(j["limits"])) for j in d["joints"]]
        caps = [Capsule(c["joint"], c["p0"], c["p1"], c["radius"])
                for c in d.get("capsules", [])]
        tool = Pose.from_dict(d["tool"]) if "tool" in d else Pose.identity()
        return ArmModel(joints, tool, caps, name=d.get("name", "arm"))

    @staticmethod
    def load(path) -> "ArmModel":
        with open(path) as fh:
            return ArmModel.from_dict(json.load(fh))

    @staticmethod
    def named(name: str) -> "ArmModel":
        return ArmModel.load(DATA_DIR / f"{name}.json")


def at_home(arm: ArmModel) -> np.ndarray:
    """The all-zeros posture, clipped into the limit box."""
    return np.clip(np.zeros(arm.dof), arm.lower, arm.upper)


def joint_frames(arm: ArmModel, q) -> list:
    """World pose of each joint's rotated frame, plus the tool pose last."""
    q = np.asarray(q, dtype=np.float64)
    frames = []
    t = arm.base
    for joint, angle in zip(arm.joints, q):
        spin = Pose(rotation=quat_from_axis_angle(joint.axis, float(angle)))
        t = t.compose(joint.offset).compose(spin)
        frames.append(t)
    frames.append(t.compose(arm.tool))
    return frames


def fk(arm: ArmModel, q) -> Pose:
    """End-effector pose: the ordered product of the joint transforms."""
    arm.check_limits(q)
    return joint_frames(arm, q)[-1]


# Matrix-chain FK for the solver and planner hot loops. Same math as
# joint_frames, but 3x3 products avoid the per-call quaternion overhead.

def _rodrigues(axis: np.ndarray, angle: float) -> np.ndarray:
    x, y, z = axis
    c, s = np.cos(angle), np.sin(angle)
    cc = 1.0 - c
    return np.array([
        [c + x * x * cc, x * y * cc - z * s, x * z * cc + y * s],
        [y * x * cc + z * s, c + y * y * cc, y * z * cc - x * s],
        [z * x * cc - y * s, z * y * cc + x * s, c + z * z * cc],
    ])


def _static_mats(arm: ArmModel):
    try:
        return arm._mats
    except AttributeError:
        pass
    joints = [(quat_to_matrix(j.offset.rotation), j.offset.translation, j.axis)
              for j in arm.joints]
    tool = (quat_to_matrix(arm.tool.rotation), arm.tool.translation)
    arm._mats = (joints, tool)
    return arm._mats


def _mat_frames(arm: ArmModel, q: np.ndarray) -> list:
    """[(R, t)] per joint, tool frame last; mirrors joint_frames."""
    joints, tool = _static_mats(arm)
    rot = quat_to_matrix(arm.base.rotation)
    trans = arm.base.translation
    out = []
    for (r_off, t_off, axis), angle in zip(joints, q):
        trans = trans + rot @ t_off
        rot = rot @ r_off @ _rodrigues(axis, float(angle))
        out.append((rot, trans))
    out.append((rot @ tool[0], trans + rot @ tool[1]))
    return out


def _rotation_vector(dR: np.ndarray) -> np.ndarray:
    """Axis*angle of a rotation matrix, stable through angle = pi."""
    v = np.array([dR[2, 1] - dR[1, 2], dR[0, 2] - dR[2, 0], dR[1, 0] - dR[0, 1]])
    s = 0.5 * float(np.linalg.norm(v))
    c = 0.5 * (float(np.trace(dR)) - 1.0)
    angle = float(np.arctan2(s, c))
    if s > 1e-9:
        return v * (0.5 * angle / s)
    if c > 0.0:
        return np.zeros(3)
    # angle near pi: recover the axis from the symmetric part
    axis = np.sqrt(np.maximum(np.diag(dR) + 1.0, 0.0) / 2.0)
    k = int(np.argmax(axis))
    if axis[k] > 0.0:
        for i in range(3):
            if i != k and dR[k, i] + dR[i, k] < 0.0:
                axis[i] = -axis[i]
    return axis / max(float(np.linalg.norm(axis)), 1e-12) * angle


def _mat_error(frames: list, target_r: np.ndarray, target_t: np.ndarray) -> np.ndarray:
    """6-vector (position error, rotation-vector error) to the target."""
    rot, trans = frames[-1]
    return np.concatenate([target_t - trans, _rotation_vector(target_r @ rot.T)])


def _jacobian(arm: ArmModel, frames: list) -> np.ndarray:
    """Geometric Jacobian of the tool position/orientation."""
    tool_p = frames[-1][1]
    cols = []
    for joint, (rot, trans) in zip(arm.joints, frames[:-1]):
        axis_w = rot @ joint.axis
        cols.append(np.concatenate([np.cross(axis_w, tool_p - trans), axis_w]))
    return np.stack(cols, axis=1)


def _dls_solve(arm: ArmModel, target: Pose, q0: np.ndarray):
    """One damped-least-squares descent with adaptive damping."""
    target_r = quat_to_matrix(target.rotation)
    target_t = target.translation
    q = q0.copy()
    frames = _mat_frames(arm, q)
    err = _mat_error(frames, target_r, target_t)
    cost = float(err @ err)
    lam = 1e-3
    rejects = 0
    for _ in range(IK_MAX_ITER):
        if (np.linalg.norm(err[:3]) <= IK_TOL_POS
                and np.linalg.norm(err[3:]) <= IK_TOL_ROT):
            return q
        jac = _jacobian(arm, frames)
        dq = jac.T @ np.linalg.solve(jac @ jac.T + lam * np.eye(6), err)
        step = float(np.linalg.norm(dq))
        if step > 0.5:
            dq *= 0.5 / step
        q_try = np.clip(q + dq, arm.lower, arm.upper)
        frames_try = _mat_frames(arm, q_try)
        err_try = _mat_error(frames_try, target_r, target_t)
        cost_try = float(err_try @ err_try)
        if cost_try < cost:
            q, frames, err, cost = q_try, frames_try, err_try, cost_try
            lam = max(lam * 0.5, 1e-9)
            rejects = 0
        else:
            lam = min(lam * 8.0, 1e6)
            rejects += 1
            if rejects > 12:
                break
    return None


def ik(arm: ArmModel, target: Pose, seed_q) -> np.ndarray:
    """Damped least-squares IK; deterministic restarts after a failed descent."""
    seed_q = np.asarray(seed_q, dtype=np.float64)
    arm.check_limits(seed_q)
    q = _dls_solve(arm, target, seed_q)
    if q is not None:
        return q
    span = arm.upper - arm.lower
    rng = np.random.default_rng(12289)
    for _ in range(IK_RESTARTS):
        q = _dls_solve(arm, target, arm.lower + rng.random(arm.dof) * span)
        if q is not None:
            return q
    raise NoSolution(f"IK failed to reach {target!r}")


# -- collision checking -------------------------------------------------------

def config_in_collision(arm: ArmModel, q, obstacles) -> bool:
    """True when any link capsule comes within its radius of an obstacle."""
    if not obstacles or not arm.capsules:
        return False
    frames = _mat_frames(arm, np.asarray(q, dtype=np.float64))
    for cap in arm.capsules:
        rot, trans = frames[cap.joint]
        seg = np.stack([rot @ cap.p0 + trans, rot @ cap.p1 + trans])
        for hull in obstacles:
            verts = hull.vertices if hasattr(hull, "vertices") else np.asarray(hull)
            if gjk_distance(seg, verts) < cap.radius:
                return True
    return False


def _edge_free(arm, qa, qb, obstacles) -> bool:
    gap = float(np.max(np.abs(qb - qa)))
    steps = max(int(np.ceil(gap / DQ_CHECK)), 1)
    for i in range(steps + 1):
        if config_in_collision(arm, qa + (qb - qa) * (i / steps), obstacles):
            return False
    return True


def _shortcut(arm, path, obstacles):
    """Greedy smoothing: splice out every waypoint a free edge can skip."""
    out = [path[0]]
    i = 0
    while i < len(path) - 1:
        j = len(path) - 1
        while j > i + 1 and not _edge_free(arm, path[i], path[j], obstacles):
            j -= 1
        out.append(path[j])
        i = j
    return out


def plan_path(arm: ArmModel, q_start, q_goal, obstacles, seed: int = 0) -> list:
    """Collision-free joint-space path from q_start to q_goal.

    Straight-line connection is tried first; otherwise a seeded
    bidirectional tree search runs until the trees join, followed by a
    shortcut pass. Waypoints are joint vectors; consecutive waypoints are
    safe at DQ_CHECK interpolation.
    """
    q_start = np.asarray(q_start, dtype=np.float64)
    q_goal = np.asarray(q_goal, dtype=np.float64)
    arm.check_limits(q_start)
    arm.check_limits(q_goal)
    if config_in_collision(arm, q_start, obstacles):
        raise StartInCollision("start configuration intersects an obstacle")
    if config_in_collision(arm, q_goal, obstacles):
        raise GoalInCollision("goal configuration intersects an obstacle")
    if np.array_equal(q_start, q_goal):
        return [q_start.copy()]
    if _edge_free(arm, q_start, q_goal, obstacles):
        return [q_start.copy(), q_goal.copy()]

    rng = np.random.default_rng(seed)
    trees = [{"nodes": [q_start], "parent": [-1]},
             {"nodes": [q_goal], "parent": [-1]}]

    def extend(tree, target):
        """Step the nearest node toward target; returns new index or None."""
        nodes = np.stack(tree["nodes"])
        near = int(np.argmin(np.linalg.norm(nodes - target, axis=1)))
        q_near = tree["nodes"][near]
        delta = target - q_near
        dist = float(np.linalg.norm(delta))
        q_new = target if dist <= RRT_STEP else q_near + delta * (RRT_STEP / dist)
        q_new = np.clip(q_new, arm.lower, arm.upper)
        if not _edge_free(arm, q_near, q_new, obstacles):
            return None
        tree["nodes"].append(q_new)
        tree["parent"].append(near)
        return len(tree["nodes"]) - 1

    def walk_back(tree, idx):
        out = []
        while idx != -1:
            out.append(tree["nodes"][idx])
            idx = tree["parent"][idx]
        return out

    for it in range(RRT_MAX_ITER):
        a, b = trees[it % 2], trees[(it + 1) % 2]
        sample = arm.lower + rng.random(arm.dof) * (arm.upper - arm.lower)
        new_idx = extend(a, sample)
        if new_idx is None:
            continue
        # greedily grow the other tree toward the fresh node
        target = a["nodes"][new_idx]
        idx = extend(b, target)
        while idx is not None:
            if np.linalg.norm(b["nodes"][idx] - target) < 1e-9:
                part_a = walk_back(a, new_idx)[::-1]
                part_b = walk_back(b, b["parent"][idx])
                path = part_a + part_b if it % 2 == 0 else (part_a + part_b)[::-1]
                return [w.copy() for w in _shortcut(arm, path, obstacles)]
            idx = extend(b, target)
    raise PlanTimeout(f"no path found in {RRT_MAX_ITER} iterations")
