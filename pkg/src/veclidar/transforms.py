"""Rigid transforms as unit quaternion + translation.

Quaternions are stored scalar-first (w, x, y, z). Vectors are float64
numpy arrays; batched helpers accept (n, 3) arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_UNIT_TOL = 1e-9


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conj(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    half = 0.5 * angle
    return np.concatenate(([np.cos(half)], np.sin(half) * axis))


@dataclass(frozen=True)
class RigidTransform:
    """Rotation (unit quaternion, w-first) followed by translation, meters."""

    rotation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=np.float64)
        trans = np.asarray(self.translation, dtype=np.float64)
        if rot.shape != (4,):
            raise ValueError("rotation must be a quaternion (w, x, y, z)")
        if trans.shape != (3,):
            raise ValueError("translation must be a 3-vector")
        norm = np.linalg.norm(rot)
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"quaternion norm {norm} too far from 1")
        if abs(norm - 1.0) > _UNIT_TOL:
            rot = rot / norm
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", trans)

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform()

    @staticmethod
    def from_translation(t) -> "RigidTransform":
        return RigidTransform(translation=np.asarray(t, dtype=float))

    @staticmethod
    def from_axis_angle(axis, angle: float, translation=(0.0, 0.0, 0.0)) -> "RigidTransform":
        return RigidTransform(quat_from_axis_angle(axis, angle), np.asarray(translation, dtype=float))

    def matrix(self) -> np.ndarray:
        return quat_to_matrix(self.rotation)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform one (3,) point or an (n, 3) batch."""
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.matrix().T + self.translation

    def apply_vector(self, vectors: np.ndarray) -> np.ndarray:
        """Rotate directions without translating."""
        return np.asarray(vectors, dtype=np.float64) @ self.matrix().T

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self ∘ other: apply `other` first, then `self`."""
        return RigidTransform(
            quat_mul(self.rotation, other.rotation),
            self.apply(other.translation),
        )

    def inverse(self) -> "RigidTransform":
        inv_rot = quat_conj(self.rotation)
        mat_inv = quat_to_matrix(inv_rot)
        return RigidTransform(inv_rot, -(mat_inv @ self.translation))

    def as_array(self) -> np.ndarray:
        """Flat (7,) array: qw, qx, qy, qz, tx, ty, tz."""
        return np.concatenate([self.rotation, self.translation])

    @staticmethod
    def from_array(arr) -> "RigidTransform":
        arr = np.asarray(arr, dtype=float).reshape(7)
        return RigidTransform(arr[:4], arr[4:])
