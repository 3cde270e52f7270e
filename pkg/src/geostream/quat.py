"""Unit quaternion attitude math.

Convention: scalar-first (w, x, y, z), Hamilton product, and rotation
matrices R(q) such that v_out = R(q) @ v_in maps a vector from the source
frame into the destination frame named by the quaternion (e.g. an INS
attitude quaternion is body->ENU). q and -q represent the same rotation;
comparisons are sign-agnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class UnitQuaternion:
    w: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        norm = math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)
        if norm < 1e-12:
            raise DomainError("zero-norm quaternion")
        if abs(norm - 1.0) > 1e-9:
            # Renormalize silently; construction from arithmetic may drift.
            object.__setattr__(self, "w", self.w / norm)
            object.__setattr__(self, "x", self.x / norm)
            object.__setattr__(self, "y", self.y / norm)
            object.__setattr__(self, "z", self.z / norm)

    @classmethod
    def identity(cls) -> "UnitQuaternion":
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_wxyz(cls, wxyz) -> "UnitQuaternion":
        w, x, y, z = (float(v) for v in wxyz)
        return cls(w, x, y, z)

    @classmethod
    def from_axis_angle(cls, axis, angle_rad: float) -> "UnitQuaternion":
        axis = np.asarray(axis, dtype=float)
        norm = np.linalg.norm(axis)
        if norm < 1e-12:
            raise DomainError("zero-norm rotation axis")
        axis = axis / norm
        half = 0.5 * angle_rad
        s = math.sin(half)
        return cls(math.cos(half), axis[0] * s, axis[1] * s, axis[2] * s)

    @classmethod
    def from_matrix(cls, mat) -> "UnitQuaternion":
        """Shepperd's method: pick the largest diagonal pivot for stability."""
        m = np.asarray(mat, dtype=float)
        t = np.trace(m)
        if t > 0.0:
            s = math.sqrt(t + 1.0) * 2.0
            return cls(
                0.25 * s,
                (m[2, 1] - m[1, 2]) / s,
                (m[0, 2] - m[2, 0]) / s,
                (m[1, 0] - m[0, 1]) / s,
            )
        if m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
            s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
            return cls(
                (m[2, 1] - m[1, 2]) / s,
                0.25 * s,
                (m[0, 1] + m[1, 0]) / s,
                (m[0, 2] + m[2, 0]) / s,
            )
        if m[1, 1] > m[2, 2]:
            s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
            return cls(
                (m[0, 2] - m[2, 0]) / s,
                (m[0, 1] + m[1, 0]) / s,
                0.25 * s,
                (m[1, 2] + m[2, 1]) / s,
            )
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        return cls(
            (m[1, 0] - m[0, 1]) / s,
            (m[0, 2] + m[2, 0]) / s,
            (m[1, 2] + m[2, 1]) / s,
            0.25 * s,
        )

    @property
    def wxyz(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def conjugate(self) -> "UnitQuaternion":
        return UnitQuaternion(self.w, -self.x, -self.y, -self.z)

    inverse = conjugate

    def __matmul__(self, other: "UnitQuaternion") -> "UnitQuaternion":
        """Hamilton product; composes rotations: R(a @ b) = R(a) R(b)."""
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return UnitQuaternion(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def to_matrix(self) -> np.ndarray:
        w, x, y, z = self.w, self.x, self.y, self.z
        xx, yy, zz = x * x, y * y, z * z
        wx, wy, wz = w * x, w * y, w * z
        xy, xz, yz = x * y, x * z, y * z
        return np.array(
            [
                [1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy)],
                [2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx)],
                [2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy)],
            ]
        )

    def rotate(self, v) -> np.ndarray:
        return self.to_matrix() @ np.asarray(v, dtype=float)

    def angle_to(self, other: "UnitQuaternion") -> float:
        """Sign-agnostic rotation angle in radians between two attitudes."""
        rel = self.conjugate() @ other
        return rel.angle()

    def angle(self) -> float:
        """Rotation angle in radians of this quaternion itself.

        atan2 form: stays accurate for tiny angles where acos saturates.
        """
        return 2.0 * math.atan2(math.hypot(self.x, self.y, self.z), abs(self.w))


def slerp(q0: UnitQuaternion, q1: UnitQuaternion, u: float) -> UnitQuaternion:
    """Shortest-path spherical interpolation, u in [0, 1].

    Negates q1 when the pair straddles hemispheres; an exactly antipodal pair
    is resolved by preferring the positive-w hemisphere for q1.
    """
    a = q0.wxyz
    b = q1.wxyz
    dot = float(np.dot(a, b))
    if dot < 0.0:
        b = -b
        dot = -dot
    elif dot == 0.0 and b[0] < 0.0:
        b = -b
    dot = min(1.0, dot)
    theta = math.acos(dot)
    if theta < 1e-9:
        # Nearly parallel: linear blend then renormalize.
        out = (1.0 - u) * a + u * b
    else:
        sin_theta = math.sin(theta)
        out = (math.sin((1.0 - u) * theta) / sin_theta) * a + (
            math.sin(u * theta) / sin_theta
        ) * b
    return UnitQuaternion.from_wxyz(out / np.linalg.norm(out))
