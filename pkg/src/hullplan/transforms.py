"""Rigid 6DoF transforms: translation vectors plus unit quaternions.

Quaternions are stored (w, x, y, z) and renormalized on construction so
that downstream code can assume |q| = 1 to within 1e-9.
"""

from __future__ import annotations

import numpy as np

_UNIT_TOL = 1e-9


def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    n = float(np.linalg.norm(q))
    if n < 1e-12:
        raise ValueError("zero-norm quaternion")
    return q / n


def quat_multiply(a, b) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conjugate(q) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q, v) -> np.ndarray:
    """Rotate a (3,) vector or (n, 3) array by unit quaternion q."""
    v = np.asarray(v, dtype=np.float64)
    u = np.asarray(q[1:], dtype=np.float64)
    w = float(q[0])
    uv = np.cross(u, v)
    return v + 2.0 * (w * uv + np.cross(u, uv))


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    n = float(np.linalg.norm(axis))
    if n < 1e-12:
        raise ValueError("zero-length rotation axis")
    half = 0.5 * float(angle)
    return np.concatenate(([np.cos(half)], np.sin(half) * axis / n))


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_angle(q) -> float:
    """Rotation angle in [0, pi] represented by unit quaternion q."""
    # atan2 keeps full precision near identity, unlike arccos(w)
    s = float(np.linalg.norm(q[1:]))
    return 2.0 * float(np.arctan2(s, abs(float(q[0]))))


class Pose:
    """Rigid transform: rotate by ``rotation`` then translate by ``translation``."""

    __slots__ = ("translation", "rotation")

    def __init__(self, translation=(0.0, 0.0, 0.0), rotation=(1.0, 0.0, 0.0, 0.0)):
        t = np.array(translation, dtype=np.float64)
        if t.shape != (3,):
            raise ValueError(f"translation must be a 3-vector, got shape {t.shape}")
        q = np.array(rotation, dtype=np.float64)
        if q.shape != (4,):
            raise ValueError(f"rotation must be a (w,x,y,z) quaternion, got shape {q.shape}")
        n = float(np.linalg.norm(q))
        if abs(n - 1.0) > _UNIT_TOL:
            q = quat_normalize(q)
        self.translation = t
        self.rotation = q

    @staticmethod
    def identity() -> "Pose":
        return Pose()

    def compose(self, other: "Pose") -> "Pose":
        """self @ other: apply ``other`` first, then ``self``."""
        return Pose(
            self.translation + quat_rotate(self.rotation, other.translation),
            quat_multiply(self.rotation, other.rotation),
        )

    def inverse(self) -> "Pose":
        qc = quat_conjugate(self.rotation)
        return Pose(-quat_rotate(qc, self.translation), qc)

    def apply(self, points) -> np.ndarray:
        """Transform a (3,) point or (n, 3) point array into the parent frame."""
        return quat_rotate(self.rotation, points) + self.translation

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = quat_to_matrix(self.rotation)
        m[:3, 3] = self.translation
        return m

    def distance_to(self, other: "Pose") -> tuple[float, float]:
        """(translation distance in meters, rotation distance in radians)."""
        dt = float(np.linalg.norm(self.translation - other.translation))
        dq = quat_multiply(quat_conjugate(self.rotation), other.rotation)
        return dt, quat_angle(dq)

    def almost_equal(self, other: "Pose", tol_t: float = 1e-9, tol_r: float = 1e-9) -> bool:
        dt, dr = self.distance_to(other)
        return dt <= tol_t and dr <= tol_r

    def copy(self) -> "Pose":
        return Pose(self.translation.copy(), self.rotation.copy())

    def to_dict(self) -> dict:
        return {
            "translation": [float(v) for v in self.translation],
            "rotation": [float(v) for v in self.rotation],
        }

    @staticmethod
    def from_dict(d: dict) -> "Pose":
        return Pose(d["translation"], d["rotation"])

    def __repr__(self) -> str:
        t = ", ".join(f"{v:.6g}" for v in self.translation)
        q = ", ".join(f"{v:.6g}" for v in self.rotation)
        return f"Pose(t=({t}), q=({q}))"
