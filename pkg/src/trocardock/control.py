"""Operator-facing control laws.

Pedal interpretation, the mode state machine with deadman gating, admittance
from the estimated external wrench, tip-frame / tip-centered-rotation twist
construction, and the 100 Hz resolved-rate tick that produces joint velocity
commands.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from .arm import (
    ArmModel,
    Jacobian,
    Twist,
    Wrench,
    clamp_to_limits,
    damped_pseudoinverse,
    estimate_external_wrench,
    forward_kinematics,
    geometric_jacobian,
    inverse_dynamics,
)
from .geometry import Pose


class ControlMode(Enum):
    CO_MANIPULATION = "co_manipulation"
    TELEOP_TRANSLATIONAL = "teleop_translational"
    TELEOP_ROTATIONAL = "teleop_rotational"
    HOLD = "hold"


class ModeError(RuntimeError):
    """An operation was called in a mode it does not support."""


# Button slots, in wire order.
DEADMAN, MODE_TOGGLE, CLUTCH, COMPLETE = 0, 1, 2, 3


@dataclass(frozen=True)
class PedalState:
    """Foot pedal snapshot: 4 buttons, a 2-axis joystick, and a rocker."""

    deadman: bool = False
    mode_toggle: bool = False
    clutch: bool = False
    complete: bool = False
    joystick: tuple = (0.0, 0.0)
    rocker: float = 0.0

    def __post_init__(self):
        jx, jy = self.joystick
        object.__setattr__(
            self,
            "joystick",
            (float(np.clip(jx, -1.0, 1.0)), float(np.clip(jy, -1.0, 1.0))),
        )
        object.__setattr__(self, "rocker", float(np.clip(self.rocker, -1.0, 1.0)))

    @property
    def buttons(self) -> tuple:
        return (self.deadman, self.mode_toggle, self.clutch, self.complete)

    @classmethod
    def from_arrays(cls, buttons, joystick, rocker) -> "PedalState":
        b = [bool(x) for x in buttons]
        return cls(b[0], b[1], b[2], b[3], (joystick[0], joystick[1]), rocker)


# pedal sources selectable in the axis map
_PEDAL_SOURCES = ("jx", "jy", "rocker")


@dataclass(frozen=True)
class Gains:
    """Controller gains; task-space gain applied before the pseudoinverse.

    ``pedal_axis_map`` assigns a pedal source to each tip-frame axis, each
    entry one of jx/jy/rocker with an optional '-' prefix.
    """

    k_task: np.ndarray = field(default_factory=lambda: np.ones(6))
    k_admittance: np.ndarray = field(
        default_factory=lambda: np.array([0.02, 0.02, 0.02, 0.2, 0.2, 0.2])
    )
    pedal_linear_scale: float = 0.005
    pedal_angular_scale: float = 0.1
    dls_lambda: float = 0.01
    wrench_lambda: float = 0.0
    tau_filter_alpha: Optional[float] = None  # first-order residual smoother, off by default
    pedal_axis_map: tuple = ("jx", "jy", "rocker")

    def __post_init__(self):
        kt = np.asarray(self.k_task, dtype=float).reshape(6)
        ka = np.asarray(self.k_admittance, dtype=float).reshape(6)
        if not (np.all(kt > 0) and np.all(ka > 0)):
            raise ValueError("task and admittance gains must be positive")
        if self.pedal_linear_scale <= 0 or self.pedal_angular_scale <= 0:
            raise ValueError("pedal scales must be positive")
        if self.dls_lambda < 0 or self.wrench_lambda < 0:
            raise ValueError("damping must be >= 0")
        amap = tuple(self.pedal_axis_map)
        if len(amap) != 3 or any(m.lstrip("-") not in _PEDAL_SOURCES for m in amap):
            raise ValueError("pedal_axis_map needs 3 entries drawn from jx/jy/rocker")
        kt.flags.writeable = False
        ka.flags.writeable = False
        object.__setattr__(self, "k_task", kt)
        object.__setattr__(self, "k_admittance", ka)
        object.__setattr__(self, "pedal_axis_map", amap)

    def map_pedal_axes(self, pedal: "PedalState") -> np.ndarray:
        """Tip-frame axis commands in [-1, 1] per the configured mapping."""
        source = {"jx": pedal.joystick[0], "jy": pedal.joystick[1], "rocker": pedal.rocker}
        out = np.empty(3)
        for i, name in enumerate(self.pedal_axis_map):
            sign = -1.0 if name.startswith("-") else 1.0
            out[i] = sign * source[name.lstrip("-")]
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "Gains":
        kwargs = {}
        for key in (
            "k_task",
            "k_admittance",
            "pedal_linear_scale",
            "pedal_angular_scale",
            "dls_lambda",
            "wrench_lambda",
            "tau_filter_alpha",
            "pedal_axis_map",
        ):
            if key in doc:
                kwargs[key] = doc[key]
        for key in ("k_task", "k_admittance"):
            if key in kwargs:
                kwargs[key] = np.asarray(kwargs[key], dtype=float)
        if "pedal_axis_map" in kwargs:
            kwargs["pedal_axis_map"] = tuple(kwargs["pedal_axis_map"])
        return cls(**kwargs)


def load_gains(path) -> Gains:
    with open(path, "r", encoding="utf-8") as fh:
        return Gains.from_dict(json.load(fh))


@dataclass(frozen=True)
class ControllerState:
    """Deterministic controller memory between ticks."""

    mode: ControlMode = ControlMode.HOLD
    previous_buttons: tuple = (False, False, False, False)
    gains: Gains = field(default_factory=Gains)
    last_dq: Optional[np.ndarray] = None  # command issued on the previous tick
    tau_ext_filtered: Optional[np.ndarray] = None


@dataclass(frozen=True)
class ControlCommand:
    dq: np.ndarray
    events: tuple = ()

    def __post_init__(self):
        dq = np.asarray(self.dq, dtype=float)
        if not np.all(np.isfinite(dq)):
            raise ValueError("commanded joint rates must be finite")
        object.__setattr__(self, "dq", dq)


@dataclass(frozen=True)
class ModeChangeEvent:
    old: ControlMode
    new: ControlMode

    def to_payload(self) -> dict:
        return {"old": self.old.value, "new": self.new.value}


def update_mode(state: ControllerState, pedal: PedalState, task: int) -> ControllerState:
    """Advance the mode machine for one pedal snapshot.

    Deadman released always gives Hold. Held deadman selects co-manipulation
    in task 1; in tasks 2/3 it selects teleoperation, starting translational
    and toggling on each rising edge of the mode-toggle button.
    """
    if task not in (1, 2, 3):
        raise ValueError(f"unknown task id {task}")
    if not pedal.deadman:
        mode = ControlMode.HOLD
    elif task == 1:
        mode = ControlMode.CO_MANIPULATION
    else:
        rising = pedal.mode_toggle and not state.previous_buttons[MODE_TOGGLE]
        if state.mode == ControlMode.TELEOP_TRANSLATIONAL:
            mode = ControlMode.TELEOP_ROTATIONAL if rising else ControlMode.TELEOP_TRANSLATIONAL
        elif state.mode == ControlMode.TELEOP_ROTATIONAL:
            mode = ControlMode.TELEOP_TRANSLATIONAL if rising else ControlMode.TELEOP_ROTATIONAL
        else:
            # entering teleop (from Hold or a task switch) starts translational
            mode = ControlMode.TELEOP_TRANSLATIONAL
    return replace(state, mode=mode, previous_buttons=pedal.buttons)


def pedal_to_twist(pedal: PedalState, mode: ControlMode, gains: Gains, tip_pose: Pose) -> Twist:
    """Map pedal axes to a base-frame twist at the tip reference point.

    Translational: joystick x/y and rocker command tip-frame x/y/z velocity.
    Rotational: the same axes command tip-frame angular velocity with zero
    linear velocity at the tip (rotation centred on the tip).
    """
    axes = gains.map_pedal_axes(pedal)
    if mode == ControlMode.TELEOP_TRANSLATIONAL:
        lin = tip_pose.rotation @ (axes * gains.pedal_linear_scale)
        return Twist(lin, np.zeros(3), "base", "tip")
    if mode == ControlMode.TELEOP_ROTATIONAL:
        ang = tip_pose.rotation @ (axes * gains.pedal_angular_scale)
        return Twist(np.zeros(3), ang, "base", "tip")
    raise ModeError(f"pedal_to_twist undefined in mode {mode}")


def admittance_twist(f: Wrench, gains: Gains) -> Twist:
    """Diagonal admittance: commanded twist proportional to the wrench."""
    v = gains.k_admittance * f.as_vector()
    return Twist(v[:3], v[3:], "base", f.reference_point)


def resolved_rate_step(J: Jacobian, dx: Twist, gains: Gains) -> np.ndarray:
    """Joint rates realizing the task twist through the damped pseudoinverse."""
    if J.reference_point != dx.reference_point or dx.frame != "base":
        raise ValueError("Jacobian and twist must share frame and reference point")
    return damped_pseudoinverse(J, gains.dls_lambda) @ (gains.k_task * dx.as_vector())


def control_tick(
    state: ControllerState,
    model: ArmModel,
    q,
    pedal: PedalState,
    tau_measured,
    task: int,
    dt: float,
):
    """One 100 Hz control period: mode update, twist selection, joint command.

    Returns (new ControllerState, ControlCommand). With the deadman released
    the command is exactly zero.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    q = np.asarray(q, dtype=float)
    old_mode = state.mode
    state = update_mode(state, pedal, task)
    events = []
    mode = state.mode
    if mode != old_mode:
        events.append(ModeChangeEvent(old_mode, mode))

    tau_filt = None
    if mode == ControlMode.HOLD:
        dq_raw = np.zeros(model.n)
    else:
        J = geometric_jacobian(model, q, "tip")
        if mode == ControlMode.CO_MANIPULATION:
            last_dq = state.last_dq if state.last_dq is not None else np.zeros(model.n)
            tau_model = inverse_dynamics(model, q, last_dq, np.zeros(model.n))
            tau_ext = np.asarray(tau_measured, dtype=float) - tau_model
            alpha = state.gains.tau_filter_alpha
            if alpha is not None:
                prev = state.tau_ext_filtered
                tau_filt = tau_ext if prev is None else alpha * tau_ext + (1 - alpha) * prev
                tau_ext = tau_filt
            wrench = estimate_external_wrench(J, tau_ext, np.zeros(model.n), lam=state.gains.wrench_lambda)
            dx = admittance_twist(wrench, state.gains)
        else:
            tip_pose = forward_kinematics(model, q)
            dx = pedal_to_twist(pedal, mode, state.gains, tip_pose)
        dq_raw = resolved_rate_step(J, dx, state.gains)

    dq, limit_event = clamp_to_limits(q, dq_raw, model.limits, dt)
    if limit_event is not None:
        events.append(limit_event)
    state = replace(state, last_dq=dq, tau_ext_filtered=tau_filt)
    return state, ControlCommand(dq, tuple(events))
