"""SE(3) poses and rotation helpers shared by the kinematics and scene code."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ORTHONORMAL_TOL = 1e-9


def skew(v: np.ndarray) -> np.ndarray:
    """Return the 3x3 skew-symmetric (cross-product) matrix of a 3-vector."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rotation_about_axis(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix about a unit axis."""
    axis = np.asarray(axis, dtype=float)
    k = skew(axis)
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def rpy_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """URDF-convention fixed-axis rotation: Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cy, sy = np.cos(yaw), np.sin(yaw)
    rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]])
    ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
    rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1]])
    return rz @ ry @ rx


def rotation_log(R: np.ndarray) -> np.ndarray:
    """Rotation vector (axis * angle) of a rotation matrix.

    Safe near 0 and pi; the returned angle is in [0, pi].
    """
    trace = np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0)
    angle = np.arccos(trace)
    if angle < 1e-10:
        # First-order: R ~ I + skew(w)
        return np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]]) / 2.0
    if angle > np.pi - 1e-6:
        # Near pi the off-diagonal differences vanish; use the symmetric part.
        B = (R + np.eye(3)) / 2.0
        axis = np.sqrt(np.maximum(np.diag(B), 0.0))
        # Fix signs from the largest component.
        k = int(np.argmax(axis))
        if axis[k] > 0.0:
            signs = np.sign(B[k, :] / axis[k])
            signs[signs == 0.0] = 1.0
            axis = axis * signs * np.sign(axis[k])
        n = np.linalg.norm(axis)
        if n > 0.0:
            axis = axis / n
        return axis * angle
    w = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    return w * (angle / (2.0 * np.sin(angle)))


def is_rotation(R: np.ndarray, tol: float = ORTHONORMAL_TOL) -> bool:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        return False
    return (
        np.linalg.norm(R.T @ R - np.eye(3)) <= tol
        and abs(np.linalg.det(R) - 1.0) <= tol
    )


def _frozen_array(values, shape) -> np.ndarray:
    a = np.array(values, dtype=float).reshape(shape)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Pose:
    """Rigid transform: 3x3 rotation (det +1) plus translation in meters."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.array(self.rotation, dtype=float)
        t = np.array(self.translation, dtype=float).reshape(3)
        if R.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {R.shape}")
        if np.linalg.norm(R.T @ R - np.eye(3)) > ORTHONORMAL_TOL:
            raise ValueError("rotation is not orthonormal within 1e-9")
        if abs(np.linalg.det(R) - 1.0) > ORTHONORMAL_TOL:
            raise ValueError("rotation determinant is not +1 within 1e-9")
        R.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))

    @classmethod
    def from_xyz_rpy(cls, xyz, rpy) -> "Pose":
        return cls(rpy_matrix(*rpy), np.asarray(xyz, dtype=float))

    def compose(self, other: "Pose") -> "Pose":
        """self then other (other expressed in self's frame)."""
        return Pose(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def __matmul__(self, other: "Pose") -> "Pose":
        return self.compose(other)

    def inverse(self) -> "Pose":
        Rt = self.rotation.T.copy()
        return Pose(Rt, -(Rt @ self.translation))

    def transform_point(self, p: np.ndarray) -> np.ndarray:
        return self.rotation @ np.asarray(p, dtype=float) + self.translation

    def transform_direction(self, d: np.ndarray) -> np.ndarray:
        return self.rotation @ np.asarray(d, dtype=float)

    def almost_equal(self, other: "Pose", tol: float = 1e-9) -> bool:
        return (
            np.linalg.norm(self.rotation - other.rotation) <= tol
            and np.linalg.norm(self.translation - other.translation) <= tol
        )

    def to_json(self) -> dict:
        return {
            "rotation": [list(row) for row in self.rotation.tolist()],
            "translation": list(self.translation.tolist()),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Pose":
        return cls(np.array(obj["rotation"], dtype=float), np.array(obj["translation"], dtype=float))
