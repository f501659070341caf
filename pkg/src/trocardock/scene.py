"""Docking scene geometry: eye phantom, trocar, straight rod tool.

Contact detection, docking adjudication, rod extrusion, and the tip-camera
pinhole projection used for the camera-inset overlay. Pure geometry over
immutable values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from .geometry import Pose

CONTACT_DEBOUNCE_S = 0.1


class SceneFileError(ValueError):
    """A scene file violates the schema or a type invariant."""


class DockingStatus(Enum):
    AWAY = "away"
    ALIGNED = "aligned"
    DOCKED = "docked"


class ContactKind(Enum):
    CORNEA_CONTACT = "cornea_contact"
    SCLERA_DEFORMATION = "sclera_deformation"
    TROCAR_RIM = "trocar_rim"


class ExtrusionOutcome(Enum):
    ADVANCING = "advancing"
    INSERTED = "inserted"
    BLOCKED = "blocked"


@dataclass(frozen=True)
class EyePhantom:
    """Globe with a spherical-cap cornea zone and a deformation tolerance."""

    globe_center: np.ndarray
    globe_radius: float
    cornea_axis: np.ndarray
    cornea_half_angle: float
    deform_threshold: float

    def __post_init__(self):
        c = np.asarray(self.globe_center, dtype=float).reshape(3)
        a = np.asarray(self.cornea_axis, dtype=float).reshape(3)
        n = np.linalg.norm(a)
        if n == 0:
            raise ValueError("cornea axis must be nonzero")
        a = a / n
        if not self.globe_radius > 0:
            raise ValueError("globe radius must be positive")
        if not 0 < self.cornea_half_angle < np.pi / 2:
            raise ValueError("cornea half-angle must be in (0, pi/2)")
        if not self.deform_threshold > 0:
            raise ValueError("deformation threshold must be positive")
        object.__setattr__(self, "globe_center", c)
        object.__setattr__(self, "cornea_axis", a)


@dataclass(frozen=True)
class TrocarSpec:
    """Trocar entry point: pose on the sclera, z axis along the lumen, into the globe."""

    tep_pose: Pose
    lumen_inner_diameter: float
    lumen_length: float
    funnel_half_angle: float
    clearance_zone_radius: float = 0.0025

    def __post_init__(self):
        if not self.lumen_length > 0:
            raise ValueError("lumen length must be positive")
        if not self.lumen_inner_diameter > 0:
            raise ValueError("lumen diameter must be positive")

    @property
    def origin(self) -> np.ndarray:
        return self.tep_pose.translation

    @property
    def axis(self) -> np.ndarray:
        return self.tep_pose.rotation[:, 2]

    def radial_clearance(self, rod_diameter: float) -> float:
        return (self.lumen_inner_diameter - rod_diameter) / 2.0


@dataclass(frozen=True)
class ToolState:
    """Straight-rod instrument: tip frame (z along the rod) plus rail extrusion."""

    tip_pose: Pose
    rod_diameter: float = 0.0005
    extrusion: float = 0.0

    def __post_init__(self):
        if not self.rod_diameter > 0:
            raise ValueError("rod diameter must be positive")
        if self.extrusion < 0:
            raise ValueError("extrusion must be >= 0")

    @property
    def axis(self) -> np.ndarray:
        return self.tip_pose.rotation[:, 2]


@dataclass(frozen=True)
class ContactEvent:
    kind: ContactKind
    penetration: float
    time: float = 0.0

    def __post_init__(self):
        if self.penetration < 0:
            raise ValueError("penetration must be >= 0")

    def to_payload(self) -> dict:
        return {"kind": self.kind.value, "penetration": self.penetration, "time": self.time}


@dataclass(frozen=True)
class DockingReport:
    lateral_offset: float
    axial_distance: float
    axis_angle: float
    status: DockingStatus

    def to_payload(self) -> dict:
        return {
            "lateral_offset": self.lateral_offset,
            "axial_distance": self.axial_distance,
            "axis_angle": self.axis_angle,
            "status": self.status.value,
        }


@dataclass(frozen=True)
class TipCamera:
    """Pinhole camera rigidly mounted behind the tip, looking along the rod."""

    pose_offset: Pose
    focal_px: float
    principal_point: tuple
    image_size: tuple

    def __post_init__(self):
        if not self.focal_px > 0:
            raise ValueError("focal length must be positive")
        cx, cy = self.principal_point
        w, h = self.image_size
        if not (0 <= cx < w and 0 <= cy < h):
            raise ValueError("principal point must lie inside the image")
        object.__setattr__(self, "principal_point", (float(cx), float(cy)))
        object.__setattr__(self, "image_size", (int(w), int(h)))


def tep_error(tip_pose: Pose, trocar: TrocarSpec):
    """Docking error decomposition: (lateral m, signed axial m, angle rad).

    Lateral is the tip's distance to the lumen axis line; axial is the signed
    projection along the lumen axis (negative = outside the eye); angle is
    between the rod z-axis and the lumen z-axis.
    """
    z = trocar.axis
    d = tip_pose.translation - trocar.origin
    axial = float(d @ z)
    lateral = float(np.linalg.norm(d - axial * z))
    cos = float(np.clip(tip_pose.rotation[:, 2] @ z, -1.0, 1.0))
    angle = float(np.arccos(cos))
    return lateral, axial, angle


def docking_status(tool: ToolState, trocar: TrocarSpec) -> DockingReport:
    """Classify the tool against the trocar: Away, Aligned, or Docked."""
    lateral, axial, angle = tep_error(tool.tip_pose, trocar)
    clearance = trocar.radial_clearance(tool.rod_diameter)
    fits = lateral <= clearance and angle <= trocar.funnel_half_angle
    if fits and 0.0 <= axial <= trocar.lumen_length:
        status = DockingStatus.DOCKED
    elif fits and axial < 0.0:
        status = DockingStatus.ALIGNED
    else:
        status = DockingStatus.AWAY
    return DockingReport(lateral, axial, angle, status)


def _segment_sphere_crossings(p0, p1, center, radius):
    """Parameters t in [0, 1] where the segment p0 + t (p1 - p0) crosses the sphere."""
    d = p1 - p0
    m = p0 - center
    a = d @ d
    if a == 0.0:
        return []
    b = 2.0 * (m @ d)
    c = m @ m - radius * radius
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    sq = np.sqrt(disc)
    out = []
    for t in ((-b - sq) / (2 * a), (-b + sq) / (2 * a)):
        if 0.0 <= t <= 1.0:
            out.append(float(t))
    return out


def detect_contacts(
    tool: ToolState,
    phantom: EyePhantom,
    trocar: TrocarSpec,
    shaft_length: float = 0.04,
    time: float = 0.0,
):
    """Instantaneous rod/eye contacts for one snapshot.

    The rod is a finite cylinder from the (extrusion-advanced) front end back
    along -z for shaft_length + extrusion. Crossings of the globe surface
    inside the trocar clearance zone are the legal port; any other
    interference is a cornea contact (inside the cornea cap) or scleral
    deformation, with penetration = max radial interference. A rod passing
    through the port but exceeding the radial clearance while inside reports
    a trocar-rim contact.
    """
    rod_radius = tool.rod_diameter / 2.0
    front = tool.tip_pose.translation + tool.extrusion * tool.axis
    back = front - (shaft_length + tool.extrusion) * tool.axis
    center = phantom.globe_center
    R = phantom.globe_radius

    # closest point on the segment to the globe center
    d = back - front
    dd = float(d @ d)
    t_min = 0.0 if dd == 0 else float(np.clip(-((front - center) @ d) / dd, 0.0, 1.0))
    closest = front + t_min * d
    dist = float(np.linalg.norm(closest - center))
    penetration = R + rod_radius - dist
    if penetration <= 0.0:
        return []

    # witness points where the rod meets the surface: axis crossings when the
    # rod pierces the sphere, else the grazing closest point
    crossings = _segment_sphere_crossings(front, back, center, R)
    witnesses = [front + t * d for t in crossings] if crossings else [closest]
    outside_port = [
        x for x in witnesses if np.linalg.norm(x - trocar.origin) > trocar.clearance_zone_radius
    ]

    events = []
    if not outside_port:
        # rod meets the surface only at the port; only the rim can be in contact
        lateral, axial, _ = tep_error(tool.tip_pose, trocar)
        clearance = trocar.radial_clearance(tool.rod_diameter)
        if axial >= 0.0 and lateral > clearance:
            events.append(ContactEvent(ContactKind.TROCAR_RIM, lateral - clearance, time))
        return events

    contact_point = outside_port[0]
    w = contact_point - center
    n = np.linalg.norm(w)
    w = w / n if n > 0 else phantom.cornea_axis
    polar = np.arccos(float(np.clip(w @ phantom.cornea_axis, -1.0, 1.0)))
    kind = ContactKind.CORNEA_CONTACT if polar <= phantom.cornea_half_angle else ContactKind.SCLERA_DEFORMATION
    events.append(ContactEvent(kind, penetration, time))
    return events


class ContactDebouncer:
    """Collapse per-tick contacts into discrete episodes.

    A new event of one kind starts only after >= 100 ms out of contact,
    matching how an observer counts distinct collisions.
    """

    def __init__(self, window: float = CONTACT_DEBOUNCE_S):
        self.window = window
        self._in_contact = {}
        self._last_seen = {}

    def update(self, events, time: float):
        """Return the subset of events that begin a new episode."""
        fresh = []
        kinds = {e.kind for e in events}
        for e in events:
            if e.kind in self._in_contact:
                continue
            last = self._last_seen.get(e.kind)
            if last is None or time - last >= self.window:
                fresh.append(e)
            self._in_contact[e.kind] = time
        for kind in list(self._in_contact):
            if kind not in kinds:
                self._last_seen[kind] = self._in_contact.pop(kind)
            else:
                self._in_contact[kind] = time
        return fresh


def extrude(
    tool: ToolState,
    rate: float,
    dt: float,
    trocar: TrocarSpec,
    phantom: EyePhantom,
    insertion_margin: float = 0.002,
):
    """Advance the rod along the rail; returns (new ToolState, outcome).

    Inserted once the extruded segment has passed fully through the lumen;
    attempting to advance while not docked is Blocked (a failure trigger).
    """
    if rate < 0:
        raise ValueError("extrusion rate must be >= 0")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if rate == 0.0:
        return tool, ExtrusionOutcome.ADVANCING
    report = docking_status(tool, trocar)
    if report.status != DockingStatus.DOCKED:
        return tool, ExtrusionOutcome.BLOCKED
    new_tool = replace(tool, extrusion=tool.extrusion + rate * dt)
    if new_tool.extrusion >= trocar.lumen_length + insertion_margin:
        return new_tool, ExtrusionOutcome.INSERTED
    return new_tool, ExtrusionOutcome.ADVANCING


def project_tip_camera(cam: TipCamera, tip_pose: Pose, world_point) -> Optional[tuple]:
    """Pinhole projection of a world point through the tip-mounted camera.

    Returns pixel (u, v) when the point is in front of the camera, else None.
    """
    T_cam = tip_pose @ cam.pose_offset
    p = T_cam.rotation.T @ (np.asarray(world_point, dtype=float) - T_cam.translation)
    if p[2] <= 0.0:
        return None
    u = cam.principal_point[0] + cam.focal_px * p[0] / p[2]
    v = cam.principal_point[1] + cam.focal_px * p[1] / p[2]
    return (float(u), float(v))


@dataclass(frozen=True)
class Scene:
    """Bundle of the docking scene loaded from a scene file."""

    phantom: EyePhantom
    trocar: TrocarSpec
    tool_init: ToolState
    camera: TipCamera
    shaft_length: float = 0.04
    insertion_margin: float = 0.002

    def __post_init__(self):
        if self.trocar.lumen_inner_diameter <= self.tool_init.rod_diameter:
            raise ValueError("lumen inner diameter must exceed the rod diameter")


def _tep_pose_from(doc: dict, phantom: EyePhantom) -> Pose:
    """TEP pose from an explicit pose or from a direction on the globe."""
    if "pose" in doc:
        return Pose.from_json(doc["pose"])
    u = np.asarray(doc["surface_direction"], dtype=float)
    u = u / np.linalg.norm(u)
    origin = phantom.globe_center + phantom.globe_radius * u
    z = -u  # lumen axis points into the globe
    ref = np.array([0.0, 0.0, 1.0])
    if abs(z @ ref) > 0.99:
        ref = np.array([1.0, 0.0, 0.0])
    x = np.cross(ref, z)
    x = x / np.linalg.norm(x)
    y = np.cross(z, x)
    return Pose(np.column_stack([x, y, z]), origin)


def scene_from_dict(doc: dict, source: str = "<scene>") -> Scene:
    try:
        eye = doc["eye"]
        phantom = EyePhantom(
            np.asarray(eye["globe_center"], dtype=float),
            float(eye["globe_radius"]),
            np.asarray(eye["cornea_axis"], dtype=float),
            float(eye["cornea_half_angle"]),
            float(eye["deform_threshold"]),
        )
        tr = doc["trocar"]
        trocar = TrocarSpec(
            _tep_pose_from(tr, phantom),
            float(tr["lumen_inner_diameter"]),
            float(tr["lumen_length"]),
            float(tr["funnel_half_angle"]),
            float(tr.get("clearance_zone_radius", 0.0025)),
        )
        tl = doc.get("tool", {})
        tool = ToolState(
            Pose.from_json(tl["tip_pose"]) if "tip_pose" in tl else Pose.identity(),
            float(tl.get("rod_diameter", 0.0005)),
            float(tl.get("extrusion", 0.0)),
        )
        cm = doc.get("camera", {})
        camera = TipCamera(
            Pose.from_xyz_rpy(cm.get("offset_xyz", [0.0, -0.004, -0.03]), cm.get("offset_rpy", [0.0, 0.0, 0.0])),
            float(cm.get("focal_px", 500.0)),
            tuple(cm.get("principal_point", [160.0, 120.0])),
            tuple(cm.get("image_size", [320, 240])),
        )
        return Scene(
            phantom,
            trocar,
            tool,
            camera,
            float(doc.get("shaft_length", 0.04)),
            float(doc.get("insertion_margin", 0.002)),
        )
    except (KeyError, ValueError, TypeError) as e:
        raise SceneFileError(f"{source}: {e}") from None


def load_scene(path) -> Scene:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SceneFileError(f"{path}:{e.lineno}: invalid JSON: {e.msg}") from None
    return scene_from_dict(doc, source=str(path))
