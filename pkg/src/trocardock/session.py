"""One trial driven tick by tick: the shared engine behind the headless
batch runner, the live WebSocket session, and deterministic replay.

A session records every applied input against its tick; re-applying the
trace reproduces the state trajectory bit for bit, witnessed by a hash of
the final state and event log.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import replace
from typing import Optional

import numpy as np

from . import kernels
from .arm import forward_kinematics
from .control import ControlMode, ControllerState, PedalState
from .protocol import PROTOCOL_VERSION
from .scene import docking_status
from .simulate import (
    HumanHandModel,
    Scenario,
    SimState,
    _event,
    initial_joint_state,
    sim_step,
)
from .trial import TaskSpec, TrialRecord, adjudicate


def state_hash(log, q, time: float, extrusion: float) -> str:
    """Deterministic witness of a finished session's trajectory."""
    doc = {
        "q": [float(v) for v in q],
        "time": float(time),
        "extrusion": float(extrusion),
        "events": log,
    }
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode("utf-8")).hexdigest()


class TrialSession:
    """Owns one trial's state; exactly one caller advances it."""

    def __init__(
        self,
        scenario: Scenario,
        task_id: int,
        seed: int,
        participant_id: str = "operator",
        attempt_index: int = 1,
    ):
        self.scenario = scenario
        self.task: TaskSpec = scenario.task(task_id)
        self.seed = int(seed)
        self.participant_id = participant_id
        self.attempt_index = attempt_index
        self.cfg = replace(scenario.sim, seed=self.seed)
        self.time_limit = min(self.task.time_limit, self.cfg.max_duration)

        rng = np.random.default_rng(self.seed)
        q0 = initial_joint_state(scenario.model, scenario.scene, self.task, scenario.start, rng)
        tip0 = forward_kinematics(scenario.model, q0)
        tool0 = replace(scenario.scene.tool_init, tip_pose=tip0)
        self.state = SimState(
            time=0.0,
            tick=0,
            q=q0,
            dq=np.zeros(scenario.model.n),
            mode=ControlMode.HOLD,
            tool=tool0,
            docking=docking_status(tool0, scenario.scene.trocar),
            rng=rng,
        )
        self.controller = ControllerState(gains=scenario.gains)
        self.log: list = []
        self.inputs: list = []
        self.controls: list = []
        self._last_pedal: Optional[PedalState] = None
        self._camera_intervals: list = []
        self._camera_on_at: Optional[float] = None
        self._terminal = False
        self._aborted = False

    @property
    def running(self) -> bool:
        return not self._terminal and self.state.time < self.time_limit

    def step(self, pedal: PedalState, hand: Optional[HumanHandModel] = None) -> SimState:
        """Apply one tick with the given (already latest-wins) pedal input."""
        if not self.running:
            return self.state
        if pedal != self._last_pedal:
            self.inputs.append(
                {
                    "tick": self.state.tick,
                    "pedal": {
                        "buttons": list(pedal.buttons),
                        "joystick": list(pedal.joystick),
                        "rocker": pedal.rocker,
                    },
                }
            )
            self._last_pedal = pedal
        self.state, self.controller = sim_step(
            self.state,
            self.scenario.model,
            self.controller,
            pedal,
            hand,
            self.cfg,
            self.scenario.scene,
            self.task,
        )
        for e in self.state.events:
            self.log.append(e)
            if _is_terminal_event(e):
                self._terminal = True
        return self.state

    def abort(self):
        if self._terminal:
            return
        self.log.append(_event(self.state.tick, self.state.time, "abort"))
        self.controls.append({"tick": self.state.tick, "action": "abort"})
        self._terminal = True
        self._aborted = True

    def camera_inset(self, visible: bool, at_time: Optional[float] = None):
        """Accumulate camera-inset visibility (task 3 only; ignored otherwise)."""
        if not self.task.camera_enabled:
            return
        t = self.state.time if at_time is None else float(at_time)
        self.controls.append({"tick": self.state.tick, "action": "camera_inset", "visible": visible, "at_time": t})
        if visible and self._camera_on_at is None:
            self._camera_on_at = t
        elif not visible and self._camera_on_at is not None:
            self._camera_intervals.append((self._camera_on_at, t))
            self._camera_on_at = None

    def camera_view_fraction(self, duration: float) -> float:
        intervals = list(self._camera_intervals)
        if self._camera_on_at is not None:
            intervals.append((self._camera_on_at, duration))
        total = sum(max(0.0, min(b, duration) - max(a, 0.0)) for a, b in intervals)
        return min(1.0, total / duration) if duration > 0 else 0.0

    def finalize(self, event_log_ref: Optional[str] = None, notes: str = "") -> TrialRecord:
        outcome, duration = adjudicate(self.log, replace(self.task, time_limit=self.time_limit))
        success = outcome == "success"
        return TrialRecord(
            task_id=self.task.task_id,
            participant_id=self.participant_id,
            attempt_index=self.attempt_index,
            duration=duration,
            success=success,
            failure_reason=None if success else outcome.value,
            collision_count=sum(1 for e in self.log if e["type"] == "contact"),
            camera_view_fraction=self.camera_view_fraction(duration),
            event_log_ref=event_log_ref,
            notes=notes,
        )

    def state_hash(self) -> str:
        return state_hash(self.log, self.state.q, self.state.time, self.state.tool.extrusion)

    # -- session log for replay ------------------------------------------------

    def header(self) -> dict:
        return {
            "type": "session_header",
            "protocol_version": PROTOCOL_VERSION,
            "scenario": self.scenario.raw,
            "task_id": self.task.task_id,
            "seed": self.seed,
            "participant_id": self.participant_id,
            "attempt_index": self.attempt_index,
            "dt": self.cfg.dt,
            "backend": kernels.active_backend(),
        }

    def session_log_lines(self, record: TrialRecord) -> list:
        from dataclasses import asdict

        lines = [self.header()]
        lines += [{"type": "input", **i} for i in self.inputs]
        lines += [{"type": "control", **c} for c in self.controls]
        lines.append(
            {
                "type": "session_end",
                "ticks": self.state.tick,
                "final_hash": self.state_hash(),
                "record": {k: v for k, v in asdict(record).items() if v is not None},
            }
        )
        return lines


def _is_terminal_event(e: dict) -> bool:
    t = e["type"]
    if t in ("excessive_deformation", "abort"):
        return True
    if t == "contact" and e.get("kind") == "cornea_contact":
        return True
    if t == "extrusion" and e.get("outcome") in ("inserted", "blocked"):
        return True
    return False


class SessionLogError(ValueError):
    """A recorded session log is malformed or truncated."""


def load_session_log(path):
    """Parse (header, inputs, controls, end) from a recorded session log."""
    header = None
    inputs = []
    controls = []
    end = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise SessionLogError(f"{path}:{lineno}: invalid JSON: {e.msg}") from None
            kind = obj.get("type")
            if kind == "session_header":
                header = obj
            elif kind == "input":
                inputs.append(obj)
            elif kind == "control":
                controls.append(obj)
            elif kind == "session_end":
                end = obj
            else:
                raise SessionLogError(f"{path}:{lineno}: unknown line type {kind!r}")
    if header is None:
        raise SessionLogError(f"{path}: missing session_header")
    if end is None:
        raise SessionLogError(f"{path}: truncated log (no session_end)")
    return header, inputs, controls, end


def replay_session(path, on_state=None):
    """Re-drive a recorded session; returns (matches, computed_hash, record).

    ``on_state`` is called with each SimState (the replay HUD hook). The
    recorded kernel backend is selected for the re-run so the arithmetic
    matches bit for bit.
    """
    from .simulate import scenario_from_dict

    header, inputs, controls, end = load_session_log(path)
    previous_backend = kernels.active_backend()
    backend = header.get("backend", previous_backend)
    if backend not in kernels.available_backends():
        raise SessionLogError(f"recorded backend {backend!r} is not available here")
    kernels.use_backend(backend)
    try:
        scenario = scenario_from_dict(header["scenario"], source=f"{path}#scenario")
        session = TrialSession(
            scenario,
            header["task_id"],
            header["seed"],
            participant_id=header.get("participant_id", "operator"),
            attempt_index=header.get("attempt_index", 1),
        )
        input_iter = sorted(inputs, key=lambda i: i["tick"])
        control_iter = sorted(controls, key=lambda c: c["tick"])
        ii = ci = 0
        pedal = PedalState()
        ticks = int(end["ticks"])
        for tick in range(ticks):
            while ii < len(input_iter) and input_iter[ii]["tick"] == tick:
                p = input_iter[ii]["pedal"]
                pedal = PedalState.from_arrays(p["buttons"], p["joystick"], p["rocker"])
                ii += 1
            while ci < len(control_iter) and control_iter[ci]["tick"] == tick:
                c = control_iter[ci]
                if c["action"] == "abort":
                    session.abort()
                elif c["action"] == "camera_inset":
                    session.camera_inset(c["visible"], c.get("at_time"))
                ci += 1
            if not session.running:
                break
            session.step(pedal)
            if on_state is not None:
                on_state(session.state)
        # controls recorded at the final tick (abort at the end)
        while ci < len(control_iter):
            c = control_iter[ci]
            if c["action"] == "abort":
                session.abort()
            elif c["action"] == "camera_inset":
                session.camera_inset(c["visible"], c.get("at_time"))
            ci += 1
        computed = session.state_hash()
        record = session.finalize()
        return computed == end["final_hash"], computed, record
    finally:
        kernels.use_backend(previous_backend)
