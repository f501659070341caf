"""Serial-arm kinematics and dynamics.

Forward kinematics, geometric Jacobians, damped least-squares pseudoinverse,
recursive Newton-Euler inverse dynamics, external-wrench estimation from
joint-torque residuals, and the joint-limit guard.

All functions are pure; every value type is immutable after construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from . import kernels
from .geometry import Pose

DEFAULT_DLS_LAMBDA = 0.01
SINGULAR_VALUE_CUTOFF = 1e-10
UNIT_AXIS_TOL = 1e-12


class ModelMismatchError(ValueError):
    """A joint-space quantity does not match the model's joint count."""


class ModelFileError(ValueError):
    """A model file violates the schema or a type invariant."""


def _as_joint_vector(model: "ArmModel", values, name: str = "q") -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.shape != (model.n,):
        raise ModelMismatchError(
            f"{name} has shape {v.shape}, model has {model.n} joints"
        )
    return v


@dataclass(frozen=True)
class JointDescriptor:
    """One revolute joint: fixed mount transform plus a unit rotation axis."""

    parent_transform: Pose
    axis: np.ndarray

    def __post_init__(self):
        a = np.array(self.axis, dtype=float).reshape(3)
        if abs(np.linalg.norm(a) - 1.0) > UNIT_AXIS_TOL:
            raise ValueError(f"joint axis must be unit norm, got {a}")
        a.flags.writeable = False
        object.__setattr__(self, "axis", a)


@dataclass(frozen=True)
class JointLimits:
    lower: np.ndarray
    upper: np.ndarray
    velocity_max: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float)
        hi = np.array(self.upper, dtype=float)
        vm = np.array(self.velocity_max, dtype=float)
        if not (lo.shape == hi.shape == vm.shape):
            raise ValueError("limit arrays must share one shape")
        if not np.all(lo < hi):
            raise ValueError("lower limits must be strictly below upper limits")
        if not np.all(vm > 0):
            raise ValueError("velocity limits must be strictly positive")
        for a in (lo, hi, vm):
            a.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "velocity_max", vm)


@dataclass(frozen=True)
class LinkInertia:
    """Mass, COM (link frame), and 3x3 inertia about the COM."""

    mass: float
    com: np.ndarray
    inertia: np.ndarray

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("link mass must be positive")
        c = np.array(self.com, dtype=float).reshape(3)
        I = np.array(self.inertia, dtype=float).reshape(3, 3)
        if np.linalg.norm(I - I.T) > 1e-9:
            raise ValueError("inertia tensor must be symmetric")
        eig = np.linalg.eigvalsh(I)
        if not np.all(eig > 0):
            raise ValueError("inertia tensor must be positive-definite")
        s = float(np.sum(eig))
        if np.any(eig > s - eig + 1e-12):
            raise ValueError("principal moments violate the triangle inequality")
        c.flags.writeable = False
        I.flags.writeable = False
        object.__setattr__(self, "com", c)
        object.__setattr__(self, "inertia", I)


@dataclass(frozen=True)
class Jacobian:
    """6xN map from joint rates to a base-frame twist at ``point``."""

    matrix: np.ndarray
    reference_point: str
    point: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != 6:
            raise ValueError(f"Jacobian must be 6xN, got {m.shape}")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float).reshape(3))


@dataclass(frozen=True)
class Twist:
    """Spatial velocity: linear m/s + angular rad/s with frame bookkeeping."""

    linear: np.ndarray
    angular: np.ndarray
    frame: str = "base"
    reference_point: str = "tip"

    def __post_init__(self):
        object.__setattr__(self, "linear", np.asarray(self.linear, dtype=float).reshape(3))
        object.__setattr__(self, "angular", np.asarray(self.angular, dtype=float).reshape(3))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.linear, self.angular])

    @classmethod
    def from_vector(cls, v, frame="base", reference_point="tip") -> "Twist":
        v = np.asarray(v, dtype=float).reshape(6)
        return cls(v[:3], v[3:], frame, reference_point)

    def shifted(self, old_point: np.ndarray, new_point: np.ndarray) -> "Twist":
        """Same spatial velocity expressed at a different reference point."""
        lin = self.linear + np.cross(self.angular, np.asarray(new_point) - np.asarray(old_point))
        return Twist(lin, self.angular, self.frame, "custom")


@dataclass(frozen=True)
class Wrench:
    force: np.ndarray
    torque: np.ndarray
    reference_point: str = "tip"

    def __post_init__(self):
        object.__setattr__(self, "force", np.asarray(self.force, dtype=float).reshape(3))
        object.__setattr__(self, "torque", np.asarray(self.torque, dtype=float).reshape(3))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.force, self.torque])

    @classmethod
    def from_vector(cls, v, reference_point="tip") -> "Wrench":
        v = np.asarray(v, dtype=float).reshape(6)
        return cls(v[:3], v[3:], reference_point)


@dataclass(frozen=True)
class LimitEvent:
    """Joints whose command was altered by the limit guard this tick."""

    position_joints: tuple = ()
    velocity_joints: tuple = ()

    def to_payload(self) -> dict:
        return {
            "position_joints": list(self.position_joints),
            "velocity_joints": list(self.velocity_joints),
        }


@dataclass(frozen=True)
class ArmModel:
    """Kinematic and inertial description of an N-joint revolute chain."""

    joints: tuple
    tool_transform: Pose
    limits: JointLimits
    link_inertias: tuple
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))

    def __post_init__(self):
        joints = tuple(self.joints)
        inertias = tuple(self.link_inertias)
        if len(joints) < 1:
            raise ValueError("model needs at least one joint")
        if len(inertias) != len(joints):
            raise ValueError("need one LinkInertia per joint")
        if self.limits.lower.shape != (len(joints),):
            raise ValueError("limit arrays must have one entry per joint")
        g = np.array(self.gravity, dtype=float).reshape(3)
        g.flags.writeable = False
        object.__setattr__(self, "joints", joints)
        object.__setattr__(self, "link_inertias", inertias)
        object.__setattr__(self, "gravity", g)

    @property
    def n(self) -> int:
        return len(self.joints)

    @cached_property
    def _packed(self):
        """Contiguous arrays consumed by the kernel backends."""
        n = self.n
        pR = np.empty((n, 3, 3))
        pp = np.empty((n, 3))
        ax = np.empty((n, 3))
        mass = np.empty(n)
        com = np.empty((n, 3))
        inertia = np.empty((n, 3, 3))
        for i, j in enumerate(self.joints):
            pR[i] = j.parent_transform.rotation
            pp[i] = j.parent_transform.translation
            ax[i] = j.axis
        for i, li in enumerate(self.link_inertias):
            mass[i] = li.mass
            com[i] = li.com
            inertia[i] = li.inertia
        for a in (pR, pp, ax, mass, com, inertia):
            a.flags.writeable = False
        return pR, pp, ax, mass, com, inertia


def forward_kinematics(model: ArmModel, q) -> Pose:
    """Tip pose in the base frame (chain composed with the tool transform)."""
    q = _as_joint_vector(model, q)
    pR, pp, ax, *_ = model._packed
    R, p = kernels.chain_frames(pR, pp, ax, q)
    tool = model.tool_transform
    n = model.n
    return Pose(R[n - 1] @ tool.rotation, R[n - 1] @ tool.translation + p[n - 1])


def link_frame(model: ArmModel, q, link_index: int) -> Pose:
    """Pose of the frame after joint ``link_index`` (1-based joints).

    Index 0 is joint 1's mount frame (its parent transform). Composing index N
    with the tool transform reproduces forward_kinematics.
    """
    q = _as_joint_vector(model, q)
    if not 0 <= link_index <= model.n:
        raise IndexError(f"link_index {link_index} outside [0, {model.n}]")
    if link_index == 0:
        return model.joints[0].parent_transform
    pR, pp, ax, *_ = model._packed
    R, p = kernels.chain_frames(pR, pp, ax, q)
    i = link_index - 1
    return Pose(R[i], p[i])


def _frames(model: ArmModel, q):
    pR, pp, ax, *_ = model._packed
    return kernels.chain_frames(pR, pp, ax, q)


def _tip_from_frames(model: ArmModel, R, p):
    n = model.n
    tool = model.tool_transform
    return R[n - 1] @ tool.rotation, R[n - 1] @ tool.translation + p[n - 1]


def geometric_jacobian(model: ArmModel, q, reference_point: str = "tip") -> Jacobian:
    """Geometric Jacobian (6xN, rows [linear; angular]) in the base frame.

    ``reference_point`` selects the instrument tip or the flange as the point
    whose velocity the linear rows describe.
    """
    q = _as_joint_vector(model, q)
    pR, pp, ax, *_ = model._packed
    R, p = kernels.chain_frames(pR, pp, ax, q)
    if reference_point == "tip":
        _, ref = _tip_from_frames(model, R, p)
    elif reference_point == "flange":
        ref = p[model.n - 1]
    else:
        raise ValueError(f"unknown reference point tag {reference_point!r}")
    J = kernels.point_jacobian(R, p, ax, np.ascontiguousarray(ref), model.n)
    return Jacobian(J, reference_point, ref)


def attached_point_jacobian(model: ArmModel, q, link_index: int, point) -> Jacobian:
    """Jacobian of a point rigidly attached to ``link_index``.

    Columns for joints distal to the link are zero; used to map a wrench
    applied mid-chain (the simulated hand) into joint torques.
    """
    q = _as_joint_vector(model, q)
    if not 1 <= link_index <= model.n:
        raise IndexError(f"link_index {link_index} outside [1, {model.n}]")
    pR, pp, ax, *_ = model._packed
    R, p = kernels.chain_frames(pR, pp, ax, q)
    ref = np.ascontiguousarray(np.asarray(point, dtype=float).reshape(3))
    J = kernels.point_jacobian(R, p, ax, ref, link_index)
    return Jacobian(J, f"link{link_index}", ref)


def dls_pinv(matrix: np.ndarray, lam: float, cutoff: float = SINGULAR_VALUE_CUTOFF) -> np.ndarray:
    """Damped least-squares pseudoinverse via SVD.

    Each singular value sigma maps to sigma / (sigma^2 + lam^2); with lam = 0,
    singular values below ``cutoff`` are dropped (Moore-Penrose behaviour).
    """
    if lam < 0:
        raise ValueError("damping must be >= 0")
    M = np.asarray(matrix, dtype=float)
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if lam == 0.0:
        gains = np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)
    else:
        gains = s / (s * s + lam * lam)
    return (Vt.T * gains) @ U.T


def damped_pseudoinverse(J, lam: float) -> np.ndarray:
    """NxM damped pseudoinverse of a Jacobian (or raw matrix)."""
    matrix = J.matrix if isinstance(J, Jacobian) else J
    return dls_pinv(matrix, lam)


def inverse_dynamics(model: ArmModel, q, qd, qdd, gravity=None) -> np.ndarray:
    """Joint torques realizing (q, qd, qdd) under gravity (recursive Newton-Euler).

    With qd = qdd = 0 this is the gravity torque vector.
    """
    q = _as_joint_vector(model, q)
    qd = _as_joint_vector(model, qd, "qd")
    qdd = _as_joint_vector(model, qdd, "qdd")
    g = model.gravity if gravity is None else np.asarray(gravity, dtype=float).reshape(3)
    pR, pp, ax, mass, com, inertia = model._packed
    return kernels.rne(pR, pp, ax, q, qd, qdd, np.ascontiguousarray(g), mass, com, inertia)


def estimate_external_wrench(J: Jacobian, tau_measured, tau_model, lam: float = 0.0) -> Wrench:
    """Externally applied wrench from the joint-torque residual.

    Computes f = (J^T)^+ (tau_measured - tau_model) at the Jacobian's
    reference point, using the damped SVD machinery.
    """
    tau_measured = np.asarray(tau_measured, dtype=float)
    tau_model = np.asarray(tau_model, dtype=float)
    if tau_measured.shape != tau_model.shape or tau_measured.shape[0] != J.matrix.shape[1]:
        raise ModelMismatchError("torque vectors must match the Jacobian's column count")
    tau_ext = tau_measured - tau_model
    f = dls_pinv(J.matrix.T, lam) @ tau_ext
    return Wrench(f[:3], f[3:], J.reference_point)


def clamp_to_limits(q, dq, limits: JointLimits, dt: float):
    """Cap joint rates and stop exactly at position limits.

    Returns (dq_clamped, LimitEvent or None); the event names the joints whose
    command was altered. One Euler step of the result never exits the limits.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    q = np.asarray(q, dtype=float)
    dq = np.array(dq, dtype=float)
    vel_hit = []
    pos_hit = []
    vmax = limits.velocity_max
    over = np.abs(dq) > vmax
    if np.any(over):
        vel_hit = [int(i) for i in np.nonzero(over)[0]]
        dq = np.clip(dq, -vmax, vmax)
    q_next = q + dq * dt
    over_hi = q_next > limits.upper
    over_lo = q_next < limits.lower
    for i in np.nonzero(over_hi)[0]:
        dq[i] = (limits.upper[i] - q[i]) / dt
        pos_hit.append(int(i))
    for i in np.nonzero(over_lo)[0]:
        dq[i] = (limits.lower[i] - q[i]) / dt
        pos_hit.append(int(i))
    if not vel_hit and not pos_hit:
        return dq, None
    return dq, LimitEvent(tuple(sorted(pos_hit)), tuple(vel_hit))


# ---------------------------------------------------------------------------
# Model file loading


def _line_of_offset(text: str, offset: int) -> int:
    return text.count("\n", 0, offset) + 1


def _array_element_lines(text: str, key: str) -> list:
    """Best-effort 1-based line number of each element of a top-level array."""
    decoder = json.JSONDecoder()
    idx = text.find(f'"{key}"')
    if idx < 0:
        return []
    idx = text.find("[", idx)
    if idx < 0:
        return []
    lines = []
    pos = idx + 1
    while True:
        while pos < len(text) and text[pos] in " \t\r\n,":
            pos += 1
        if pos >= len(text) or text[pos] == "]":
            break
        lines.append(_line_of_offset(text, pos))
        try:
            _, pos = decoder.raw_decode(text, pos)
        except json.JSONDecodeError:
            break
    return lines


def load_arm_model(path) -> ArmModel:
    """Load an ArmModel from a JSON model file.

    Schema: joints[] {origin {xyz, rpy}, axis}, tool {xyz, rpy},
    limits {lower[], upper[], velocity[]}, links[] {mass, com, inertia},
    gravity. Invariant violations are reported with the offending line.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFileError(f"{path}:{e.lineno}: invalid JSON: {e.msg}") from None
    return arm_model_from_dict(doc, source=str(path), text=text)


def arm_model_from_dict(doc: dict, source: str = "<model>", text: str = "") -> ArmModel:
    joint_lines = _array_element_lines(text, "joints") if text else []
    link_lines = _array_element_lines(text, "links") if text else []

    def loc(kind, i, lines):
        if i < len(lines):
            return f"{source}:{lines[i]}"
        return f"{source}: {kind}[{i}]"

    try:
        raw_joints = doc["joints"]
        raw_links = doc["links"]
        raw_limits = doc["limits"]
        raw_tool = doc.get("tool", {"xyz": [0, 0, 0], "rpy": [0, 0, 0]})
    except KeyError as e:
        raise ModelFileError(f"{source}: missing required key {e}") from None

    joints = []
    for i, j in enumerate(raw_joints):
        try:
            origin = j["origin"]
            joints.append(
                JointDescriptor(
                    Pose.from_xyz_rpy(origin["xyz"], origin["rpy"]),
                    np.asarray(j["axis"], dtype=float),
                )
            )
        except (KeyError, ValueError, TypeError) as e:
            raise ModelFileError(f"{loc('joints', i, joint_lines)}: {e}") from None

    links = []
    for i, l in enumerate(raw_links):
        try:
            links.append(LinkInertia(l["mass"], np.asarray(l["com"]), np.asarray(l["inertia"])))
        except (KeyError, ValueError, TypeError) as e:
            raise ModelFileError(f"{loc('links', i, link_lines)}: {e}") from None

    try:
        limits = JointLimits(
            np.asarray(raw_limits["lower"], dtype=float),
            np.asarray(raw_limits["upper"], dtype=float),
            np.asarray(raw_limits["velocity"], dtype=float),
        )
        tool = Pose.from_xyz_rpy(raw_tool["xyz"], raw_tool["rpy"])
        gravity = np.asarray(doc.get("gravity", [0.0, 0.0, -9.81]), dtype=float)
        return ArmModel(tuple(joints), tool, limits, tuple(links), gravity)
    except (KeyError, ValueError, TypeError) as e:
        raise ModelFileError(f"{source}: {e}") from None
