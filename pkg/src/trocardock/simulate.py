"""Deterministic fixed-step simulation at 100 Hz.

Integrates joint commands, synthesizes measured torques (including a
spring-damper stand-in for the co-manipulating hand), hosts the scripted
virtual-operator policies, and runs complete seeded trials headlessly.

Determinism: everything is a fixed-order float64 computation; the only
randomness flows through the per-trial generator seeded from SimConfig.
"""

from __future__ import annotations

import json
import pathlib
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .arm import (
    ArmModel,
    arm_model_from_dict,
    attached_point_jacobian,
    dls_pinv,
    forward_kinematics,
    geometric_jacobian,
    inverse_dynamics,
    load_arm_model,
)
from .control import (
    ControlMode,
    ControllerState,
    Gains,
    PedalState,
    control_tick,
)
from .geometry import Pose, rotation_about_axis, rotation_log
from .scene import (
    ContactDebouncer,
    ContactKind,
    DockingReport,
    DockingStatus,
    ExtrusionOutcome,
    Scene,
    ToolState,
    detect_contacts,
    docking_status,
    extrude,
    load_scene,
    scene_from_dict,
)
from .trial import TaskSpec, TrialRecord, write_log


class ScenarioError(ValueError):
    """A scenario file is malformed or references missing pieces."""


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.01
    max_duration: float = 120.0
    seed: int = 0
    noise_torque_std: float = 0.0
    noise_pedal_std: float = 0.0
    extrusion_rate: float = 0.002
    command_delay_ticks: int = 0

    def __post_init__(self):
        if self.dt <= 0 or self.max_duration <= 0:
            raise ValueError("dt and max_duration must be positive")
        if self.command_delay_ticks < 0:
            raise ValueError("command delay must be >= 0")

    @classmethod
    def from_dict(cls, doc: dict) -> "SimConfig":
        keys = ("dt", "max_duration", "seed", "noise_torque_std", "noise_pedal_std",
                "extrusion_rate", "command_delay_ticks")
        return cls(**{k: doc[k] for k in keys if k in doc})


@dataclass(frozen=True)
class HumanHandModel:
    """Spring-damper hand grasping a link and pulling it toward a target pose."""

    grasp_link: int
    target_pose: Pose
    stiffness: np.ndarray = field(default_factory=lambda: np.array([500.0] * 3 + [5.0] * 3))
    damping: np.ndarray = field(default_factory=lambda: np.array([20.0] * 3 + [0.5] * 3))
    max_force: float = 30.0
    max_torque: float = 5.0

    def __post_init__(self):
        k = np.asarray(self.stiffness, dtype=float).reshape(6)
        d = np.asarray(self.damping, dtype=float).reshape(6)
        if np.any(k < 0) or np.any(d < 0):
            raise ValueError("stiffness and damping must be >= 0")
        if not self.max_force > 0:
            raise ValueError("max_force must be positive")
        object.__setattr__(self, "stiffness", k)
        object.__setattr__(self, "damping", d)


@dataclass
class SimState:
    """Full simulation snapshot; advanced only by sim_step."""

    time: float
    tick: int
    q: np.ndarray
    dq: np.ndarray
    mode: ControlMode
    tool: ToolState
    docking: DockingReport
    events: tuple = ()
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))
    contacts: ContactDebouncer = field(default_factory=ContactDebouncer)
    deform_reported: bool = False
    pending_dq: tuple = ()
    blocked_reported: bool = False


def grasp_frame(model: ArmModel, q, grasp_link: int) -> Pose:
    """Pose the hand grasps: the tool tip for the last link, else the link frame."""
    if grasp_link == model.n:
        return forward_kinematics(model, q)
    from .arm import link_frame

    return link_frame(model, q, grasp_link)


def hand_wrench(model: ArmModel, q, dq, hand: HumanHandModel):
    """Saturated spring-damper wrench of the hand at its grasp point (base frame)."""
    g = grasp_frame(model, q, hand.grasp_link)
    J = attached_point_jacobian(model, q, hand.grasp_link, g.translation)
    v = J.matrix @ dq
    e_p = hand.target_pose.translation - g.translation
    e_r = rotation_log(hand.target_pose.rotation @ g.rotation.T)
    raw = hand.stiffness * np.concatenate([e_p, e_r]) - hand.damping * v
    f, t = raw[:3], raw[3:]
    fn = np.linalg.norm(f)
    if fn > hand.max_force:
        f = f * (hand.max_force / fn)
    tn = np.linalg.norm(t)
    if tn > hand.max_torque:
        t = t * (hand.max_torque / tn)
    return np.concatenate([f, t]), J


def simulate_measured_torques(
    model: ArmModel, state: SimState, hand: Optional[HumanHandModel], cfg: SimConfig
) -> np.ndarray:
    """Synthesized joint-torque measurement for the current state.

    Model torques for the executing motion, plus the hand's wrench mapped
    through the grasp Jacobian, plus optional Gaussian noise.
    """
    tau = inverse_dynamics(model, state.q, state.dq, np.zeros(model.n))
    if hand is not None:
        w, J = hand_wrench(model, state.q, state.dq, hand)
        tau = tau + J.matrix.T @ w
    if cfg.noise_torque_std > 0.0:
        tau = tau + state.rng.normal(0.0, cfg.noise_torque_std, model.n)
    return tau


def _event(tick: int, time: float, type_: str, **payload) -> dict:
    e = {"tick": tick, "time": round(time, 9), "type": type_}
    e.update(payload)
    return e


def sim_step(
    state: SimState,
    model: ArmModel,
    controller: ControllerState,
    pedal: PedalState,
    hand: Optional[HumanHandModel],
    cfg: SimConfig,
    scene: Scene,
    task: TaskSpec,
):
    """Advance one command period; returns (SimState, ControllerState).

    Order per tick: synthesize torques, run the control tick, integrate the
    (possibly delayed) command, extrude if commanded, then detect contacts
    and docking transitions. Events are stamped with the resulting tick.
    """
    if cfg.noise_pedal_std > 0.0:
        jn = state.rng.normal(0.0, cfg.noise_pedal_std, 3)
        pedal = replace(
            pedal,
            joystick=(pedal.joystick[0] + jn[0], pedal.joystick[1] + jn[1]),
            rocker=pedal.rocker + jn[2],
        )

    tau_measured = simulate_measured_torques(model, state, hand, cfg)
    controller, cmd = control_tick(controller, model, state.q, pedal, tau_measured, task.task_id, cfg.dt)

    if cfg.command_delay_ticks > 0:
        queue = state.pending_dq + (cmd.dq,)
        if len(queue) > cfg.command_delay_ticks:
            dq_applied = queue[0]
            queue = queue[1:]
        else:
            dq_applied = np.zeros(model.n)
        pending = queue
    else:
        dq_applied = cmd.dq
        pending = ()

    q_next = np.clip(state.q + dq_applied * cfg.dt, model.limits.lower, model.limits.upper)
    tick = state.tick + 1
    time = tick * cfg.dt

    events = []
    for e in cmd.events:
        name = type(e).__name__
        if name == "ModeChangeEvent":
            events.append(_event(tick, time, "mode_change", **e.to_payload()))
        elif name == "LimitEvent":
            events.append(_event(tick, time, "limit", **e.to_payload()))

    tip = forward_kinematics(model, q_next)
    tool = replace(state.tool, tip_pose=tip)

    extruding = pedal.deadman and pedal.complete and cfg.extrusion_rate > 0.0
    blocked_reported = state.blocked_reported
    if extruding:
        tool, outcome = extrude(
            tool, cfg.extrusion_rate, cfg.dt, scene.trocar, scene.phantom, scene.insertion_margin
        )
        if outcome == ExtrusionOutcome.INSERTED:
            events.append(_event(tick, time, "extrusion", outcome="inserted", extrusion=tool.extrusion))
        elif outcome == ExtrusionOutcome.BLOCKED and not blocked_reported:
            events.append(_event(tick, time, "extrusion", outcome="blocked", extrusion=tool.extrusion))
            blocked_reported = True

    raw_contacts = detect_contacts(tool, scene.phantom, scene.trocar, scene.shaft_length, time)
    for c in state.contacts.update(raw_contacts, time):
        events.append(_event(tick, time, "contact", kind=c.kind.value, penetration=c.penetration))
    deform_reported = state.deform_reported
    if not deform_reported:
        for c in raw_contacts:
            if c.kind == ContactKind.SCLERA_DEFORMATION and c.penetration >= scene.phantom.deform_threshold:
                events.append(_event(tick, time, "excessive_deformation", penetration=c.penetration))
                deform_reported = True
                break

    report = docking_status(tool, scene.trocar)
    if report.status != state.docking.status:
        events.append(
            _event(
                tick,
                time,
                "docking",
                status=report.status.value,
                lateral=report.lateral_offset,
                axial=report.axial_distance,
                angle=report.axis_angle,
            )
        )

    new_state = SimState(
        time=time,
        tick=tick,
        q=q_next,
        dq=dq_applied,
        mode=controller.mode,
        tool=tool,
        docking=report,
        events=tuple(events),
        rng=state.rng,
        contacts=state.contacts,
        deform_reported=deform_reported,
        pending_dq=pending,
        blocked_reported=blocked_reported,
    )
    return new_state, controller


# ---------------------------------------------------------------------------
# Inverse kinematics (used to place the arm at scripted start poses)


class IkError(RuntimeError):
    pass


def solve_ik(
    model: ArmModel,
    target: Pose,
    q0,
    tol_pos: float = 1e-8,
    tol_rot: float = 1e-7,
    max_iter: int = 500,
    lam: float = 0.02,
) -> np.ndarray:
    """Damped least-squares IK toward a tip pose; deterministic.

    Intended for start poses within the dexterous workspace; raises IkError
    when it fails to converge.
    """
    q = np.array(q0, dtype=float)
    for _ in range(max_iter):
        fk = forward_kinematics(model, q)
        e_p = target.translation - fk.translation
        e_r = rotation_log(target.rotation @ fk.rotation.T)
        if np.linalg.norm(e_p) < tol_pos and np.linalg.norm(e_r) < tol_rot:
            return q
        J = geometric_jacobian(model, q, "tip")
        dq = dls_pinv(J.matrix, lam) @ np.concatenate([e_p, e_r])
        step = np.linalg.norm(dq)
        if step > 0.2:
            dq = dq * (0.2 / step)
        q = np.clip(q + dq, model.limits.lower, model.limits.upper)
    raise IkError(
        f"IK did not converge (residual pos {np.linalg.norm(e_p):.2e} m, rot {np.linalg.norm(e_r):.2e} rad)"
    )


# ---------------------------------------------------------------------------
# Start poses


@dataclass(frozen=True)
class StartSpec:
    """Where trials begin: IK seed, trial-start offsets, seeded perturbation."""

    q_home: np.ndarray
    trial_start_axial: float = -0.10
    trial_start_lateral: tuple = (0.04, 0.02)
    trial_start_tilt: tuple = (0.20, -0.10)
    q_override: Optional[np.ndarray] = None
    perturb_lateral: float = 0.002
    perturb_axial: float = 0.005
    perturb_tilt: float = 0.07

    @classmethod
    def from_dict(cls, doc: dict) -> "StartSpec":
        ts = doc.get("trial_start", {})
        pert = doc.get("perturbation", {})
        q_override = doc.get("q_override")
        return cls(
            q_home=np.asarray(doc["q_home"], dtype=float),
            trial_start_axial=float(ts.get("axial", -0.10)),
            trial_start_lateral=tuple(ts.get("lateral", (0.04, 0.02))),
            trial_start_tilt=tuple(ts.get("tilt", (0.20, -0.10))),
            q_override=None if q_override is None else np.asarray(q_override, dtype=float),
            perturb_lateral=float(pert.get("lateral", 0.002)),
            perturb_axial=float(pert.get("axial", 0.005)),
            perturb_tilt=float(pert.get("tilt", 0.07)),
        )


def _pose_near_tep(scene: Scene, axial: float, lateral, tilt) -> Pose:
    R_tep = scene.trocar.tep_pose.rotation
    pos = (
        scene.trocar.origin
        + axial * R_tep[:, 2]
        + lateral[0] * R_tep[:, 0]
        + lateral[1] * R_tep[:, 1]
    )
    R = (
        R_tep
        @ rotation_about_axis(np.array([1.0, 0.0, 0.0]), tilt[0])
        @ rotation_about_axis(np.array([0.0, 1.0, 0.0]), tilt[1])
    )
    return Pose(R, pos)


def initial_joint_state(
    model: ArmModel, scene: Scene, task: TaskSpec, start: StartSpec, rng: np.random.Generator
) -> np.ndarray:
    """Seeded start configuration for a trial (IK onto the scripted pose)."""
    if start.q_override is not None:
        return np.array(start.q_override, dtype=float)
    lat = rng.uniform(-start.perturb_lateral, start.perturb_lateral, 2)
    axial_j = rng.uniform(-start.perturb_axial, start.perturb_axial)
    tilt = rng.uniform(-start.perturb_tilt, start.perturb_tilt, 2)
    if task.start == "handover":
        pose = _pose_near_tep(
            scene, -task.handover_distance + axial_j, (lat[0], lat[1]), (tilt[0], tilt[1])
        )
    else:
        pose = _pose_near_tep(
            scene,
            start.trial_start_axial + axial_j,
            (start.trial_start_lateral[0] + lat[0], start.trial_start_lateral[1] + lat[1]),
            (start.trial_start_tilt[0] + tilt[0], start.trial_start_tilt[1] + tilt[1]),
        )
    return solve_ik(model, pose, start.q_home)


# ---------------------------------------------------------------------------
# Virtual operator policies


@dataclass(frozen=True)
class Observation:
    """What a policy may see each tick (mirrors the operator's display)."""

    time: float
    tick: int
    mode: ControlMode
    tip_pose: Pose
    docking: DockingReport
    extrusion: float


@dataclass(frozen=True)
class PolicyAction:
    pedal: PedalState
    hand: Optional[HumanHandModel] = None
    abort: bool = False


def observe(state: SimState) -> Observation:
    return Observation(
        time=state.time,
        tick=state.tick,
        mode=state.mode,
        tip_pose=state.tool.tip_pose,
        docking=state.docking,
        extrusion=state.tool.extrusion,
    )


@dataclass
class PolicyParams:
    kp_lin: float = 2.0
    kp_ang: float = 2.0
    angle_gate: float = 0.03
    angle_exit: float = 0.01
    insert_depth: float = 0.0015
    hand_stiffness: tuple = (500.0, 500.0, 500.0, 5.0, 5.0, 5.0)
    hand_damping: tuple = (20.0, 20.0, 20.0, 0.5, 0.5, 0.5)
    hand_max_force: float = 30.0
    hand_max_torque: float = 5.0
    gross_speed: float = 0.04
    fine_speed: float = 0.01
    hand_settle: float = 1.0

    @classmethod
    def from_dict(cls, doc: dict) -> "PolicyParams":
        kwargs = {}
        for k in ("kp_lin", "kp_ang", "angle_gate", "angle_exit", "insert_depth",
                  "hand_max_force", "hand_max_torque", "gross_speed", "fine_speed", "hand_settle"):
            if k in doc:
                kwargs[k] = float(doc[k])
        for k in ("hand_stiffness", "hand_damping"):
            if k in doc:
                kwargs[k] = tuple(doc[k])
        return cls(**kwargs)


class DockingTeleopPolicy:
    """Proportional teleoperation policy for tasks 2 and 3.

    Aligns the rod axis in rotational mode while the angle error exceeds the
    gate, then approaches the trocar in translational mode, and holds the
    complete button once docked so the rod extrudes.
    """

    def __init__(self, scene: Scene, gains: Gains, params: PolicyParams):
        self.scene = scene
        self.gains = gains
        self.params = params
        self.reset()

    def reset(self):
        self._want_rotational = False
        self._last_toggle = False

    def act(self, state: SimState, obs: Observation) -> PolicyAction:
        p = self.params
        trocar = self.scene.trocar
        if obs.docking.status == DockingStatus.DOCKED:
            self._last_toggle = False
            return PolicyAction(PedalState(deadman=True, complete=True))

        angle = obs.docking.axis_angle
        if angle > p.angle_gate:
            self._want_rotational = True
        elif angle < p.angle_exit:
            self._want_rotational = False

        in_rotational = obs.mode == ControlMode.TELEOP_ROTATIONAL
        toggle = False
        if obs.mode in (ControlMode.TELEOP_TRANSLATIONAL, ControlMode.TELEOP_ROTATIONAL):
            if self._want_rotational != in_rotational and not self._last_toggle:
                toggle = True
        self._last_toggle = toggle

        R_tip = obs.tip_pose.rotation
        if self._want_rotational and in_rotational:
            z_tool = R_tip[:, 2]
            z_lumen = trocar.axis
            cross = np.cross(z_tool, z_lumen)
            norm = np.linalg.norm(cross)
            ang = float(np.arctan2(norm, float(z_tool @ z_lumen)))
            axis = cross / norm if norm > 1e-12 else np.zeros(3)
            w_world = p.kp_ang * ang * axis
            w_tip = R_tip.T @ w_world
            axes = np.clip(w_tip / self.gains.pedal_angular_scale, -1.0, 1.0)
        elif not self._want_rotational and not in_rotational:
            target = trocar.origin + p.insert_depth * trocar.axis
            e = target - obs.tip_pose.translation
            v_tip = R_tip.T @ (p.kp_lin * e)
            axes = np.clip(v_tip / self.gains.pedal_linear_scale, -1.0, 1.0)
        else:
            axes = np.zeros(3)  # wait for the mode switch to land

        return PolicyAction(
            PedalState(
                deadman=True,
                mode_toggle=toggle,
                joystick=(float(axes[0]), float(axes[1])),
                rocker=float(axes[2]),
            )
        )


class ComanipHandPolicy:
    """Task-1 stand-in: a hand schedule ramping toward the docked pose.

    The pedal merely holds the deadman (enabling admittance) and presses
    complete once docked; motion comes from the simulated hand's wrench.
    """

    def __init__(self, scene: Scene, model: ArmModel, params: PolicyParams):
        self.scene = scene
        self.model = model
        self.params = params
        self.reset()

    def reset(self):
        self._path = None

    def _build_path(self, start_pose: Pose):
        trocar = self.scene.trocar
        p = self.params
        handover = _pose_near_tep(self.scene, -0.03, (0.0, 0.0), (0.0, 0.0))
        dock = _pose_near_tep(self.scene, p.insert_depth, (0.0, 0.0), (0.0, 0.0))
        d1 = float(np.linalg.norm(handover.translation - start_pose.translation))
        d2 = float(np.linalg.norm(dock.translation - handover.translation))
        t1 = d1 / p.gross_speed
        t2 = t1 + d2 / p.fine_speed
        rot_vec = rotation_log(handover.rotation @ start_pose.rotation.T)
        self._path = (start_pose, handover, dock, t1, t2, rot_vec)

    def _target_at(self, t: float) -> Pose:
        start, handover, dock, t1, t2, rot_vec = self._path
        if t <= t1:
            s = t / t1 if t1 > 0 else 1.0
            pos = start.translation + s * (handover.translation - start.translation)
            R = rotation_about_axis_safe(rot_vec, s) @ start.rotation
            return Pose(R, pos)
        if t <= t2:
            s = (t - t1) / (t2 - t1) if t2 > t1 else 1.0
            pos = handover.translation + s * (dock.translation - handover.translation)
            return Pose(handover.rotation, pos)
        return Pose(dock.rotation, dock.translation)

    def act(self, state: SimState, obs: Observation) -> PolicyAction:
        if self._path is None:
            self._build_path(obs.tip_pose)
        target = self._target_at(obs.time)
        hand = HumanHandModel(
            grasp_link=self.model.n,
            target_pose=target,
            stiffness=np.asarray(self.params.hand_stiffness),
            damping=np.asarray(self.params.hand_damping),
            max_force=self.params.hand_max_force,
            max_torque=self.params.hand_max_torque,
        )
        complete = obs.docking.status == DockingStatus.DOCKED
        return PolicyAction(PedalState(deadman=True, complete=complete), hand=hand)


def rotation_about_axis_safe(rot_vec: np.ndarray, scale: float) -> np.ndarray:
    angle = np.linalg.norm(rot_vec)
    if angle < 1e-12:
        return np.eye(3)
    return rotation_about_axis(rot_vec / angle, angle * scale)


class CorneaStrikePolicy:
    """Failure scenario: steers over the cornea and drives the rod into it."""

    def __init__(self, scene: Scene, gains: Gains, kp: float = 3.0):
        self.scene = scene
        self.gains = gains
        self.kp = kp
        self.reset()

    def reset(self):
        self._descending = False

    def act(self, state: SimState, obs: Observation) -> PolicyAction:
        phantom = self.scene.phantom
        apex = phantom.globe_center + phantom.globe_radius * phantom.cornea_axis
        staging = apex + 0.02 * phantom.cornea_axis
        pos = obs.tip_pose.translation
        if not self._descending and np.linalg.norm(pos - staging) <= 0.004:
            self._descending = True
        target = apex - 0.005 * phantom.cornea_axis if self._descending else staging
        v_tip = obs.tip_pose.rotation.T @ (self.kp * (target - pos))
        axes = np.clip(v_tip / self.gains.pedal_linear_scale, -1.0, 1.0)
        return PolicyAction(
            PedalState(deadman=True, joystick=(float(axes[0]), float(axes[1])), rocker=float(axes[2]))
        )


class IdlePolicy:
    """Holds the deadman and does nothing: times out."""

    def reset(self):
        pass

    def act(self, state: SimState, obs: Observation) -> PolicyAction:
        return PolicyAction(PedalState(deadman=True))


class ConstantTwistPolicy:
    """Failure scenario: holds one teleop mode and commands constant axes.

    Spinning the tool axis from a start near the wrist-roll limit reproduces
    the joint-limit failure mode; a constant translation can stretch the arm.
    """

    def __init__(self, gains: Gains, mode: str = "rotational", axes=(0.0, 0.0, 1.0)):
        if mode not in ("translational", "rotational"):
            raise ValueError("mode must be translational or rotational")
        self.gains = gains
        self.mode = mode
        self.axes = tuple(float(a) for a in axes)
        self.reset()

    def reset(self):
        self._last_toggle = False

    def act(self, state: SimState, obs: Observation) -> PolicyAction:
        want_rot = self.mode == "rotational"
        in_rot = obs.mode == ControlMode.TELEOP_ROTATIONAL
        in_teleop = obs.mode in (ControlMode.TELEOP_TRANSLATIONAL, ControlMode.TELEOP_ROTATIONAL)
        toggle = in_teleop and want_rot != in_rot and not self._last_toggle
        self._last_toggle = toggle
        ax = self.axes if (want_rot == in_rot and in_teleop) else (0.0, 0.0, 0.0)
        return PolicyAction(
            PedalState(deadman=True, mode_toggle=toggle, joystick=(ax[0], ax[1]), rocker=ax[2])
        )


def virtual_operator(task: int, params: PolicyParams, scene: Scene, model: ArmModel, gains: Gains):
    """Deterministic stand-in for the participant for the given task."""
    if task == 1:
        return ComanipHandPolicy(scene, model, params)
    if task in (2, 3):
        return DockingTeleopPolicy(scene, gains, params)
    raise ValueError(f"unknown task id {task}")


# ---------------------------------------------------------------------------
# Trial runner


def run_trial(
    model: ArmModel,
    scene: Scene,
    task: TaskSpec,
    policy,
    cfg: SimConfig,
    gains: Gains = None,
    start: StartSpec = None,
    participant_id: str = "virtual",
    attempt_index: int = 1,
    event_log_path=None,
) -> TrialRecord:
    """Run one complete seeded trial headlessly and adjudicate it.

    ``policy`` is an object with act(state, obs) -> PolicyAction (a bare
    HumanHandModel is wrapped in a hold-and-complete pedal policy).
    """
    from .session import TrialSession

    gains = gains or Gains()
    if start is None:
        start = StartSpec(q_home=np.zeros(model.n))
    if isinstance(policy, HumanHandModel):
        policy = _FixedHandPolicy(policy)
    if hasattr(policy, "reset"):
        policy.reset()

    scenario = Scenario(
        model, scene, gains, cfg, start, PolicyParams(), {task.task_id: task}, {}, "<inline>"
    )
    session = TrialSession(scenario, task.task_id, cfg.seed, participant_id, attempt_index)
    while session.running:
        obs = observe(session.state)
        action = policy.act(session.state, obs)
        if action.abort:
            session.abort()
            break
        session.step(action.pedal, action.hand)

    event_log_ref = None
    if event_log_path is not None:
        write_log(session.log, event_log_path)
        event_log_ref = str(event_log_path)
    return session.finalize(event_log_ref)


class _FixedHandPolicy:
    """Wraps a bare HumanHandModel: deadman held, complete once docked."""

    def __init__(self, hand: HumanHandModel):
        self.hand = hand

    def reset(self):
        pass

    def act(self, state, obs) -> PolicyAction:
        complete = obs.docking.status == DockingStatus.DOCKED
        return PolicyAction(PedalState(deadman=True, complete=complete), hand=self.hand)


# ---------------------------------------------------------------------------
# Scenario files


@dataclass(frozen=True)
class Scenario:
    """Everything a trial batch or a live session needs, loaded from one file."""

    model: ArmModel
    scene: Scene
    gains: Gains
    sim: SimConfig
    start: StartSpec
    policy_params: PolicyParams
    tasks: dict
    raw: dict
    source: str = "<scenario>"

    def task(self, task_id: int) -> TaskSpec:
        if task_id in self.tasks:
            return self.tasks[task_id]
        return TaskSpec.for_task(task_id)

    def make_policy(self, task_id: int):
        name = self.raw.get("policy", {}).get("name", "virtual_operator")
        if name == "virtual_operator":
            return virtual_operator(task_id, self.policy_params, self.scene, self.model, self.gains)
        if name == "cornea_strike":
            return CorneaStrikePolicy(self.scene, self.gains)
        if name == "idle":
            return IdlePolicy()
        if name == "constant_twist":
            pdoc = self.raw.get("policy", {})
            return ConstantTwistPolicy(
                self.gains, pdoc.get("mode", "rotational"), pdoc.get("axes", (0.0, 0.0, 1.0))
            )
        raise ScenarioError(f"unknown policy name {name!r}")


def scenario_from_dict(doc: dict, base_dir: pathlib.Path = None, source: str = "<scenario>") -> Scenario:
    base_dir = base_dir or pathlib.Path(".")

    def resolve(key, loader, from_dict):
        v = doc.get(key)
        if v is None:
            raise ScenarioError(f"{source}: missing {key!r}")
        if isinstance(v, str):
            path = base_dir / v
            if not path.exists():
                raise ScenarioError(f"{source}: {key} file not found: {path}")
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
            return loader(path), raw
        return from_dict(v), v

    model, model_raw = resolve("model", load_arm_model, arm_model_from_dict)
    scene, scene_raw = resolve("scene", load_scene, scene_from_dict)
    # self-contained form: session logs embed this so replay needs no files
    doc = {**doc, "model": model_raw, "scene": scene_raw}
    gains = Gains.from_dict(doc.get("gains", {}))
    sim = SimConfig.from_dict(doc.get("sim", {}))
    if "start" not in doc:
        raise ScenarioError(f"{source}: missing 'start' section (needs q_home)")
    start = StartSpec.from_dict(doc["start"])
    params = PolicyParams.from_dict(doc.get("policy", {}))
    tasks = {}
    for key, tdoc in doc.get("tasks", {}).items():
        tid = int(key)
        tasks[tid] = TaskSpec.for_task(
            tid,
            time_limit=float(tdoc.get("time_limit", 120.0)),
            handover_distance=float(tdoc.get("handover_distance", 0.03)),
        )
    return Scenario(model, scene, gains, sim, start, params, tasks, doc, source)


def load_scenario(path) -> Scenario:
    path = pathlib.Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ScenarioError(f"scenario file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{path}:{e.lineno}: invalid JSON: {e.msg}") from None
    return scenario_from_dict(doc, base_dir=path.parent, source=str(path))


def run_scenario_trial(
    scenario: Scenario,
    task_id: int,
    seed: int,
    participant_id: str = "virtual",
    attempt_index: int = 1,
    policy=None,
    event_log_path=None,
) -> TrialRecord:
    cfg = replace(scenario.sim, seed=seed)
    task = scenario.task(task_id)
    policy = policy or scenario.make_policy(task_id)
    return run_trial(
        scenario.model,
        scenario.scene,
        task,
        policy,
        cfg,
        gains=scenario.gains,
        start=scenario.start,
        participant_id=participant_id,
        attempt_index=attempt_index,
        event_log_path=event_log_path,
    )
