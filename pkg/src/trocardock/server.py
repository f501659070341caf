"""Session server: streams simulation snapshots to the operator UI over a
WebSocket and applies pedal frames at tick boundaries.

One interactive session at a time; the network side and the tick loop are
separate asyncio tasks joined by latest-wins mailboxes, so a slow client
drops stale snapshots and never blocks the simulation.
"""

from __future__ import annotations

import asyncio
import logging
import pathlib
import uuid
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from websockets.asyncio.server import serve
from websockets.exceptions import ConnectionClosed

from .control import PedalState
from .protocol import (
    ErrorMessage,
    PedalFrame,
    ProtocolError,
    SceneInfo,
    StateSnapshot,
    TrialControl,
    decode,
    encode,
)
from .scene import project_tip_camera
from .session import TrialSession
from .simulate import Scenario
from .trial import TlxRecord, write_log

logger = logging.getLogger("trocardock.server")


@dataclass(frozen=True)
class SessionConfig:
    port: int = 8787
    host: str = "127.0.0.1"
    snapshot_rate: float = 50.0
    real_time: bool = True
    out_dir: Optional[str] = None

    def __post_init__(self):
        if not 1 <= self.snapshot_rate <= 100:
            raise ValueError("snapshot_rate must be in [1, 100]")


def _pose_json(pose) -> dict:
    return {
        "rotation": [[float(v) for v in row] for row in pose.rotation],
        "translation": [float(v) for v in pose.translation],
    }


def link_points(model, q) -> list:
    """Base-frame polyline through the joint origins, flange, and tip."""
    from .arm import _frames, _tip_from_frames

    R, p = _frames(model, np.asarray(q, dtype=float))
    pts = [[0.0, 0.0, 0.0]] + [[float(v) for v in row] for row in p]
    _, tip = _tip_from_frames(model, R, p)
    pts.append([float(v) for v in tip])
    return pts


class SessionServer:
    def __init__(self, scenario: Scenario, config: SessionConfig):
        self.scenario = scenario
        self.config = config
        self._busy = False
        self._stop = asyncio.Event()
        self.bound_port: Optional[int] = None

    async def run(self):
        async with serve(self._handler, self.config.host, self.config.port) as server:
            self.bound_port = server.sockets[0].getsockname()[1] if server.sockets else self.config.port
            logger.info("serving on %s:%s", self.config.host, self.bound_port)
            await self._stop.wait()

    def stop(self):
        self._stop.set()

    async def _handler(self, ws):
        if self._busy:
            await ws.send(encode(ErrorMessage(session_id="", code="busy",
                                              message="another session is active")))
            await ws.close()
            return
        self._busy = True
        try:
            await _Session(self, ws).run()
        finally:
            self._busy = False


class _Session:
    def __init__(self, server: SessionServer, ws):
        self.server = server
        self.scenario = server.scenario
        self.config = server.config
        self.ws = ws
        self.session_id = uuid.uuid4().hex[:12]
        self.trial: Optional[TrialSession] = None
        self.latest_pedal = PedalState()
        self.outbox: asyncio.Queue = asyncio.Queue(maxsize=1)
        self.finished_record = None
        self._closed = False
        self._last_frame_at: Optional[float] = None
        self.input_stale_after = 0.5  # s without frames => treat deadman as released

    async def run(self):
        scene = self.scenario.scene
        await self.ws.send(
            encode(
                SceneInfo(
                    session_id=self.session_id,
                    globe_center=[float(v) for v in scene.phantom.globe_center],
                    globe_radius=scene.phantom.globe_radius,
                    cornea_axis=[float(v) for v in scene.phantom.cornea_axis],
                    cornea_half_angle=scene.phantom.cornea_half_angle,
                    tep_pose=_pose_json(scene.trocar.tep_pose),
                    lumen_inner_diameter=scene.trocar.lumen_inner_diameter,
                    lumen_length=scene.trocar.lumen_length,
                    rod_diameter=scene.tool_init.rod_diameter,
                    shaft_length=scene.shaft_length,
                    image_size=list(scene.camera.image_size),
                )
            )
        )
        sender = asyncio.create_task(self._send_loop())
        ticker = asyncio.create_task(self._tick_loop())
        try:
            await self._recv_loop()
        finally:
            self._closed = True
            ticker.cancel()
            sender.cancel()

    # -- inbound ---------------------------------------------------------------

    async def _recv_loop(self):
        try:
            async for raw in self.ws:
                try:
                    msg = decode(raw)
                except ProtocolError as e:
                    await self._send_error(e.code, str(e))
                    continue
                if isinstance(msg, PedalFrame):
                    self.latest_pedal = PedalState.from_arrays(msg.buttons, msg.joystick, msg.rocker)
                    self._last_frame_at = asyncio.get_running_loop().time()
                elif isinstance(msg, TrialControl):
                    await self._handle_control(msg)
                else:
                    await self._send_error("bad_message", f"unexpected message type {msg.type}")
        except ConnectionClosed:
            pass

    async def _handle_control(self, msg: TrialControl):
        if msg.action == "start":
            if self.trial is not None and self.trial.running:
                await self._send_error("trial_running", "a trial is already running")
                return
            try:
                self.trial = TrialSession(
                    self.scenario,
                    msg.task_id,
                    msg.seed,
                    participant_id=msg.participant_id or "operator",
                )
            except (ValueError, RuntimeError) as e:
                await self._send_error("bad_control", f"cannot start trial: {e}")
                return
            self.finished_record = None
            self.latest_pedal = PedalState()
            logger.info("trial started: task %s seed %s", msg.task_id, msg.seed)
        elif msg.action == "abort":
            if self.trial is None:
                await self._send_error("no_trial", "nothing to abort")
            elif self.trial.running:
                self.trial.abort()
                self._finish_trial()
        elif msg.action == "reset":
            self.trial = None
            self.finished_record = None
            self.latest_pedal = PedalState()
        elif msg.action == "submit_tlx":
            try:
                record = TlxRecord(**msg.tlx)
            except (TypeError, ValueError) as e:
                await self._send_error("bad_control", f"invalid TLX record: {e}")
                return
            self._append_tlx(record)
        elif msg.action == "camera_inset":
            if self.trial is not None:
                self.trial.camera_inset(msg.visible, msg.at_time)

    # -- tick loop ---------------------------------------------------------------

    async def _tick_loop(self):
        loop = asyncio.get_running_loop()
        stride = max(1, int(round(100.0 / self.config.snapshot_rate)))
        next_deadline = None
        idle_snapshot_at = 0.0
        while not self._closed:
            trial = self.trial
            if trial is None or not trial.running:
                if trial is not None and self.finished_record is None and trial.state.tick > 0:
                    self._finish_trial()
                now = loop.time()
                if now >= idle_snapshot_at:
                    self._push_snapshot()
                    idle_snapshot_at = now + 0.2
                next_deadline = None
                await asyncio.sleep(0.02)
                continue
            if next_deadline is None:
                next_deadline = loop.time()
            pedal = self.latest_pedal
            if (
                self.config.real_time
                and pedal.deadman
                and self._last_frame_at is not None
                and loop.time() - self._last_frame_at > self.input_stale_after
            ):
                # frozen client: no fresh frames means no motion
                pedal = PedalState()
            trial.step(pedal)
            if not trial.running:
                self._finish_trial()
            if trial.state.tick % stride == 0 or not trial.running:
                self._push_snapshot()
            if self.config.real_time:
                next_deadline += trial.cfg.dt
                delay = next_deadline - loop.time()
                if delay > 0:
                    await asyncio.sleep(delay)
                elif delay < -1.0:
                    next_deadline = loop.time()  # fell far behind; resync
            elif trial.state.tick % 500 == 0:
                await asyncio.sleep(0)

    def _finish_trial(self):
        trial = self.trial
        if trial is None or self.finished_record is not None:
            return
        record = trial.finalize()
        self.finished_record = record
        out_dir = self.config.out_dir
        if out_dir:
            out = pathlib.Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            session_path = out / f"session_{self.session_id}_{trial.state.tick}.jsonl"
            write_log(trial.session_log_lines(record), session_path)
            with open(out / "records.jsonl", "a", encoding="utf-8") as fh:
                write_log([record], fh)
        logger.info(
            "trial finished: success=%s reason=%s duration=%.2f",
            record.success, record.failure_reason, record.duration,
        )

    def _append_tlx(self, record: TlxRecord):
        out_dir = self.config.out_dir
        if out_dir:
            out = pathlib.Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            with open(out / "tlx.jsonl", "a", encoding="utf-8") as fh:
                write_log([record], fh)

    # -- outbound ----------------------------------------------------------------

    def _snapshot(self) -> StateSnapshot:
        trial = self.trial
        scenario = self.scenario
        if trial is None:
            return StateSnapshot(
                session_id=self.session_id,
                tick=0,
                time=0.0,
                q=[],
                link_points=[],
                tip_pose=_pose_json(scenario.scene.tool_init.tip_pose),
                mode="hold",
                tep={"lateral": 0.0, "axial": 0.0, "angle": 0.0},
                docking="away",
                extrusion=0.0,
                trial=None,
                record=None,
            )
        state = trial.state
        overlay = None
        if trial.task.camera_enabled:
            cam = scenario.scene.camera
            tep_uv = project_tip_camera(cam, state.tool.tip_pose, scenario.scene.trocar.origin)
            ahead = state.tool.tip_pose.translation + 0.005 * state.tool.tip_pose.rotation[:, 2]
            tool_uv = project_tip_camera(cam, state.tool.tip_pose, ahead)
            overlay = {
                "tep": None if tep_uv is None else [tep_uv[0], tep_uv[1]],
                "tool": None if tool_uv is None else [tool_uv[0], tool_uv[1]],
            }
        record = self.finished_record
        return StateSnapshot(
            session_id=self.session_id,
            tick=state.tick,
            time=state.time,
            q=[float(v) for v in state.q],
            link_points=link_points(scenario.model, state.q),
            tip_pose=_pose_json(state.tool.tip_pose),
            mode=state.mode.value,
            tep={
                "lateral": state.docking.lateral_offset,
                "axial": state.docking.axial_distance,
                "angle": state.docking.axis_angle,
            },
            docking=state.docking.status.value,
            extrusion=state.tool.extrusion,
            events=[dict(e) for e in state.events],
            camera_overlay=overlay,
            trial={
                "task_id": trial.task.task_id,
                "seed": trial.seed,
                "running": trial.running,
                "participant_id": trial.participant_id,
            },
            record=None if record is None else {k: v for k, v in asdict(record).items() if v is not None},
        )

    def _push_snapshot(self):
        snap = self._snapshot()
        if self.outbox.full():
            try:
                self.outbox.get_nowait()  # drop the stale snapshot
            except asyncio.QueueEmpty:
                pass
        self.outbox.put_nowait(snap)

    async def _send_loop(self):
        try:
            while True:
                snap = await self.outbox.get()
                await self.ws.send(encode(snap))
        except ConnectionClosed:
            pass

    async def _send_error(self, code: str, message: str):
        try:
            await self.ws.send(encode(ErrorMessage(session_id=self.session_id, code=code, message=message)))
        except ConnectionClosed:
            pass


async def serve_forever(scenario: Scenario, config: SessionConfig):
    server = SessionServer(scenario, config)
    await server.run()


def replay_snapshots(path, stride: int = 2):
    """Replay a session, returning (matches, hash, record, snapshots).

    Snapshots are plain StateSnapshot messages sampled every ``stride`` ticks,
    ready to stream for UI playback.
    """
    from .session import replay_session
    from .simulate import scenario_from_dict
    from .session import load_session_log

    header, _, _, _ = load_session_log(path)
    scenario = scenario_from_dict(header["scenario"], source=f"{path}#scenario")
    session_id = "replay"
    snaps = []

    def on_state(state):
        if state.tick % stride != 0:
            return
        snaps.append(
            StateSnapshot(
                session_id=session_id,
                tick=state.tick,
                time=state.time,
                q=[float(v) for v in state.q],
                link_points=link_points(scenario.model, state.q),
                tip_pose=_pose_json(state.tool.tip_pose),
                mode=state.mode.value,
                tep={
                    "lateral": state.docking.lateral_offset,
                    "axial": state.docking.axial_distance,
                    "angle": state.docking.axis_angle,
                },
                docking=state.docking.status.value,
                extrusion=state.tool.extrusion,
                events=[dict(e) for e in state.events],
                trial={"task_id": header["task_id"], "seed": header["seed"], "running": True,
                       "participant_id": header.get("participant_id", "operator")},
            )
        )

    matches, computed, record = replay_session(path, on_state=on_state)
    return matches, computed, record, snaps


async def stream_replay(path, speed: float, config: SessionConfig) -> bool:
    """Verify a recorded session and stream its snapshots to one client."""
    matches, computed, record, snaps = replay_snapshots(path)
    if not matches:
        return False
    dt = 0.02 / speed  # snapshots sampled at 50 Hz
    done = asyncio.Event()

    async def handler(ws):
        try:
            for snap in snaps:
                await ws.send(encode(snap))
                await asyncio.sleep(dt)
        except ConnectionClosed:
            pass
        finally:
            done.set()

    async with serve(handler, config.host, config.port):
        logger.info("replay stream on %s:%s (%d snapshots)", config.host, config.port, len(snaps))
        await done.wait()
    return True
