"""Wire protocol: JSON messages, one per WebSocket text frame.

Tagged union of snapshots (server -> client), pedal frames and trial controls
(client -> server), scene info (server -> client on connect), and errors.
Every message carries protocol_version and session_id.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional

PROTOCOL_VERSION = "1"


class ProtocolError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class StateSnapshot:
    session_id: str
    tick: int
    time: float
    q: list
    link_points: list
    tip_pose: dict
    mode: str
    tep: dict
    docking: str
    extrusion: float
    events: list = field(default_factory=list)
    camera_overlay: Optional[dict] = None
    trial: Optional[dict] = None
    record: Optional[dict] = None
    protocol_version: str = PROTOCOL_VERSION
    type: str = "state_snapshot"


@dataclass(frozen=True)
class PedalFrame:
    session_id: str
    t_client: float
    buttons: list
    joystick: list
    rocker: float
    protocol_version: str = PROTOCOL_VERSION
    type: str = "pedal_frame"

    def __post_init__(self):
        if len(self.buttons) != 4:
            raise ProtocolError("bad_message", "pedal frame needs 4 buttons")
        if len(self.joystick) != 2:
            raise ProtocolError("bad_message", "pedal frame needs 2 joystick axes")
        object.__setattr__(self, "buttons", [bool(b) for b in self.buttons])
        object.__setattr__(self, "joystick", [float(a) for a in self.joystick])
        object.__setattr__(self, "rocker", float(self.rocker))


TRIAL_ACTIONS = ("start", "abort", "reset", "submit_tlx", "camera_inset")


@dataclass(frozen=True)
class TrialControl:
    session_id: str
    action: str
    task_id: Optional[int] = None
    seed: Optional[int] = None
    participant_id: Optional[str] = None
    tlx: Optional[dict] = None
    visible: Optional[bool] = None
    at_time: Optional[float] = None
    protocol_version: str = PROTOCOL_VERSION
    type: str = "trial_control"

    def __post_init__(self):
        if self.action not in TRIAL_ACTIONS:
            raise ProtocolError("bad_message", f"unknown trial action {self.action!r}")
        if self.action == "start" and (self.task_id is None or self.seed is None):
            raise ProtocolError("bad_message", "start requires task_id and seed")
        if self.action == "submit_tlx" and self.tlx is None:
            raise ProtocolError("bad_message", "submit_tlx requires a tlx payload")
        if self.action == "camera_inset" and self.visible is None:
            raise ProtocolError("bad_message", "camera_inset requires visible")


@dataclass(frozen=True)
class SceneInfo:
    session_id: str
    globe_center: list
    globe_radius: float
    cornea_axis: list
    cornea_half_angle: float
    tep_pose: dict
    lumen_inner_diameter: float
    lumen_length: float
    rod_diameter: float
    shaft_length: float
    image_size: list
    protocol_version: str = PROTOCOL_VERSION
    type: str = "scene_info"


@dataclass(frozen=True)
class ErrorMessage:
    session_id: str
    code: str
    message: str
    protocol_version: str = PROTOCOL_VERSION
    type: str = "error"


MESSAGE_TYPES = {
    "state_snapshot": StateSnapshot,
    "pedal_frame": PedalFrame,
    "trial_control": TrialControl,
    "scene_info": SceneInfo,
    "error": ErrorMessage,
}


def encode(msg) -> str:
    obj = {k: v for k, v in asdict(msg).items() if v is not None or k in ("record", "trial", "camera_overlay")}
    return json.dumps(obj, sort_keys=True)


def decode(text: str):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProtocolError("bad_message", f"invalid JSON: {e.msg}") from None
    if not isinstance(obj, dict):
        raise ProtocolError("bad_message", "message must be a JSON object")
    kind = obj.get("type")
    cls = MESSAGE_TYPES.get(kind)
    if cls is None:
        raise ProtocolError("bad_message", f"unknown message type {kind!r}")
    version = obj.get("protocol_version")
    if version != PROTOCOL_VERSION:
        raise ProtocolError("bad_version", f"protocol_version {version!r} != {PROTOCOL_VERSION!r}")
    if "session_id" not in obj:
        raise ProtocolError("bad_message", "missing session_id")
    kwargs = {k: v for k, v in obj.items()}
    try:
        return cls(**kwargs)
    except ProtocolError:
        raise
    except TypeError as e:
        raise ProtocolError("bad_message", str(e)) from None
