"""Rigid-body poses, 4-D twists and the adjoint machinery.

Everything the simulator and the policies exchange across frames goes
through here: observations and actions live in the gripper frame, the
world integrates in the base frame, and the 6x6 adjoint relates the two.
The 4-D twist (full translation + yaw rate) is embedded into a 6-vector
ordered (wx, wy, wz, vx, vy, vz) with wx = wy = 0; the projection back is
exact whenever the rotation is about z, which is the only case the planar
simulator produces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ORTHO_TOL = 1e-9
PLANAR_TOL = 1e-9


class NonPlanarRotation(ValueError):
    """Twist projection would drop angular components above tolerance."""


class InvalidPose(ValueError):
    pass


@dataclass(frozen=True)
class Pose:
    """Rotation matrix + translation, validated on construction."""

    rotation: np.ndarray   # (3,3)
    translation: np.ndarray  # (3,)

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=np.float64)
        p = np.asarray(self.translation, dtype=np.float64)
        if R.shape != (3, 3) or p.shape != (3,):
            raise InvalidPose(f"bad shapes {R.shape}, {p.shape}")
        if np.max(np.abs(R.T @ R - np.eye(3))) > ORTHO_TOL:
            raise InvalidPose("rotation not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > ORTHO_TOL:
            raise InvalidPose("rotation determinant != 1")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", p)

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))

    @staticmethod
    def planar(x: float, y: float, yaw: float, z: float = 0.0) -> "Pose":
        c, s = math.cos(yaw), math.sin(yaw)
        R = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        return Pose(R, np.array([x, y, z]))

    @property
    def yaw(self) -> float:
        # first column of R = rotated x axis
        return math.atan2(self.rotation[1, 0], self.rotation[0, 0])

    def compose(self, other: "Pose") -> "Pose":
        return Pose(self.rotation @ other.rotation,
                    self.rotation @ other.translation + self.translation)

    def inverse(self) -> "Pose":
        Rt = self.rotation.T
        return Pose(Rt, -Rt @ self.translation)

    def apply(self, point: np.ndarray) -> np.ndarray:
        return self.rotation @ np.asarray(point, dtype=np.float64) + self.translation


@dataclass(frozen=True)
class Twist4:
    """Linear velocity (m/s) plus yaw rate (rad/s)."""

    v: np.ndarray  # (3,)
    wz: float

    def __post_init__(self):
        v = np.asarray(self.v, dtype=np.float64)
        if v.shape != (3,) or not np.all(np.isfinite(v)) or not math.isfinite(self.wz):
            raise ValueError("twist components must be 3 finite values + wz")
        object.__setattr__(self, "v", v)

    @staticmethod
    def zero() -> "Twist4":
        return Twist4(np.zeros(3), 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.v[0], self.v[1], self.v[2], self.wz])

    @staticmethod
    def from_array(a) -> "Twist4":
        a = np.asarray(a, dtype=np.float64)
        return Twist4(a[:3].copy(), float(a[3]))

    def clamped(self, v_max: float, wz_max: float) -> "Twist4":
        return Twist4(np.clip(self.v, -v_max, v_max),
                      float(np.clip(self.wz, -wz_max, wz_max)))


def skew(p) -> np.ndarray:
    """Skew-symmetric matrix of p so that skew(p) @ q == cross(p, q)."""
    p = np.asarray(p, dtype=np.float64)
    if not np.all(np.isfinite(p)):
        raise ValueError("non-finite input to skew")
    return np.array([[0.0, -p[2], p[1]],
                     [p[2], 0.0, -p[0]],
                     [-p[1], p[0], 0.0]])


def adjoint(T: Pose) -> np.ndarray:
    """6x6 adjoint of T, block form [[R, 0], [skew(p) R, R]].

    Acts on twists ordered (w, v): angular rows first.
    """
    A = np.zeros((6, 6))
    R = T.rotation
    A[:3, :3] = R
    A[3:, 3:] = R
    A[3:, :3] = skew(T.translation) @ R
    return A


def embed_twist(V: Twist4) -> np.ndarray:
    """(wx, wy, wz, vx, vy, vz) with zero-padded wx, wy."""
    return np.array([0.0, 0.0, V.wz, V.v[0], V.v[1], V.v[2]])


def project_twist(w6: np.ndarray) -> Twist4:
    if max(abs(w6[0]), abs(w6[1])) > PLANAR_TOL:
        raise NonPlanarRotation(
            f"dropped angular components ({w6[0]:.3e}, {w6[1]:.3e}) exceed tolerance")
    return Twist4(w6[3:6].copy(), float(w6[2]))


def transform_twist(T: Pose, V: Twist4) -> Twist4:
    """Re-express a 4-D twist through Pose T via the 6x6 adjoint."""
    return project_twist(adjoint(T) @ embed_twist(V))


def relative_pose(reset: Pose, current: Pose) -> Pose:
    """current expressed in the reset frame: reset^-1 o current."""
    return reset.inverse().compose(current)


def world_velocity(pose: Pose, body: Twist4) -> tuple:
    """Velocity of the frame origin in world coordinates.

    Returns (pdot (3,), yaw_rate).  The body twist is first mapped to a
    spatial twist with the adjoint, then the origin velocity is recovered
    as v_s + w_s x p.
    """
    spatial = adjoint(pose) @ embed_twist(body)
    w = spatial[:3]
    v = spatial[3:]
    pdot = v + np.cross(w, pose.translation)
    return pdot, float(w[2])


def body_twist_from_world(pose: Pose, pdot, yaw_rate: float) -> Twist4:
    """Inverse of world_velocity: desired world motion -> body twist."""
    pdot = np.asarray(pdot, dtype=np.float64)
    w = np.array([0.0, 0.0, yaw_rate])
    v_s = pdot - np.cross(w, pose.translation)
    w6 = adjoint(pose.inverse()) @ np.concatenate([w, v_s])
    return project_twist(w6)


def wrap_angle(a: float) -> float:
    return math.atan2(math.sin(a), math.cos(a))
