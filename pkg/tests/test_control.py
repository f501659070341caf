import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trocardock.arm import Wrench, forward_kinematics, geometric_jacobian, inverse_dynamics
from trocardock.control import (
    ControlMode,
    ControllerState,
    Gains,
    ModeError,
    PedalState,
    admittance_twist,
    control_tick,
    pedal_to_twist,
    resolved_rate_step,
    update_mode,
)
from trocardock.geometry import Pose, rotation_about_axis

from conftest import random_q


def held(**kw):
    return PedalState(deadman=True, **kw)


# --- mode machine ----------------------------------------------------------

def test_deadman_press_enters_translational_in_task2():
    s = ControllerState()
    s = update_mode(s, held(), task=2)
    assert s.mode == ControlMode.TELEOP_TRANSLATIONAL


def test_mode_toggle_rising_edge_switches_to_rotational():
    s = ControllerState()
    s = update_mode(s, held(), task=2)
    s = update_mode(s, held(mode_toggle=True), task=2)
    assert s.mode == ControlMode.TELEOP_ROTATIONAL
    # holding the toggle does not keep switching
    s = update_mode(s, held(mode_toggle=True), task=2)
    assert s.mode == ControlMode.TELEOP_ROTATIONAL
    s = update_mode(s, held(), task=2)
    s = update_mode(s, held(mode_toggle=True), task=2)
    assert s.mode == ControlMode.TELEOP_TRANSLATIONAL


def test_deadman_release_always_holds():
    for task in (1, 2, 3):
        s = ControllerState()
        s = update_mode(s, held(), task)
        s = update_mode(s, PedalState(), task)
        assert s.mode == ControlMode.HOLD


def test_task1_deadman_gives_comanipulation():
    s = update_mode(ControllerState(), held(), task=1)
    assert s.mode == ControlMode.CO_MANIPULATION


def test_unknown_task_rejected():
    with pytest.raises(ValueError):
        update_mode(ControllerState(), held(), task=4)


def test_mode_trace_is_deterministic():
    rng = np.random.default_rng(41)
    trace = [
        PedalState(
            deadman=bool(rng.integers(2)),
            mode_toggle=bool(rng.integers(2)),
            joystick=(rng.uniform(-1, 1), rng.uniform(-1, 1)),
            rocker=rng.uniform(-1, 1),
        )
        for _ in range(200)
    ]

    def run():
        s = ControllerState()
        modes = []
        for p in trace:
            s = update_mode(s, p, task=2)
            modes.append(s.mode)
        return modes

    assert run() == run()


# --- pedal twist mapping ----------------------------------------------------

def test_translational_identity_frame_scaling():
    g = Gains()
    tw = pedal_to_twist(held(joystick=(1.0, 0.0)), ControlMode.TELEOP_TRANSLATIONAL, g, Pose.identity())
    assert np.allclose(tw.linear, [0.005, 0.0, 0.0])
    assert np.allclose(tw.angular, 0.0)


def test_translational_follows_tip_frame():
    g = Gains()
    tip = Pose(rotation_about_axis(np.array([0.0, 0.0, 1.0]), np.pi / 2), np.zeros(3))
    tw = pedal_to_twist(held(joystick=(1.0, 0.0)), ControlMode.TELEOP_TRANSLATIONAL, g, tip)
    assert np.allclose(tw.linear, [0.0, 0.005, 0.0], atol=1e-12)


def test_rotational_is_pure_rotation_about_tip():
    g = Gains()
    tw = pedal_to_twist(held(rocker=1.0), ControlMode.TELEOP_ROTATIONAL, g, Pose.identity())
    assert np.allclose(tw.angular, [0.0, 0.0, 0.1])
    assert np.allclose(tw.linear, 0.0)
    assert tw.reference_point == "tip"


def test_pedal_twist_rejects_other_modes():
    with pytest.raises(ModeError):
        pedal_to_twist(held(), ControlMode.HOLD, Gains(), Pose.identity())


def test_axes_clamped_on_construction():
    p = PedalState(joystick=(2.0, -3.0), rocker=9.0)
    assert p.joystick == (1.0, -1.0)
    assert p.rocker == 1.0


# --- admittance -------------------------------------------------------------

def test_admittance_zero_wrench():
    tw = admittance_twist(Wrench(np.zeros(3), np.zeros(3)), Gains())
    assert np.allclose(tw.as_vector(), 0.0)


def test_admittance_diagonal_scaling():
    g = Gains(k_admittance=np.array([0.01, 0.01, 0.01, 0.1, 0.1, 0.1]))
    tw = admittance_twist(Wrench(np.array([10.0, 0.0, 0.0]), np.zeros(3)), g)
    assert np.allclose(tw.linear, [0.1, 0.0, 0.0])
    assert np.allclose(tw.angular, 0.0)


def test_admittance_decouples_torque():
    tw = admittance_twist(Wrench(np.zeros(3), np.array([0.0, 1.0, 0.0])), Gains())
    assert np.allclose(tw.linear, 0.0)
    assert tw.angular[1] > 0


# --- resolved rate ----------------------------------------------------------

def test_resolved_rate_zero_twist(model7):
    q = np.full(7, 0.3)
    J = geometric_jacobian(model7, q)
    dq = resolved_rate_step(J, admittance_twist(Wrench(np.zeros(3), np.zeros(3)), Gains()), Gains())
    assert np.allclose(dq, 0.0)


def test_resolved_rate_dls_bound(model7):
    rng = np.random.default_rng(43)
    g = Gains(dls_lambda=0.01)
    for _ in range(100):
        q = random_q(model7, rng)
        J = geometric_jacobian(model7, q)
        s = np.linalg.svd(J.matrix, compute_uv=False)
        bound = np.max(s / (s**2 + g.dls_lambda**2))
        dx = np.concatenate([rng.uniform(-0.01, 0.01, 3), rng.uniform(-0.1, 0.1, 3)])
        from trocardock.arm import Twist

        dq = resolved_rate_step(J, Twist(dx[:3], dx[3:], "base", "tip"), g)
        assert np.linalg.norm(dq) <= bound * np.linalg.norm(g.k_task * dx) + 1e-12


# --- control tick -----------------------------------------------------------

def test_deadman_released_zero_command(model7):
    s = ControllerState()
    q = np.full(7, 0.3)
    tau = inverse_dynamics(model7, q, np.zeros(7), np.zeros(7))
    s, cmd = control_tick(s, model7, q, PedalState(joystick=(1.0, 1.0), rocker=1.0), tau, 2, 0.01)
    assert np.all(cmd.dq == 0.0)


@settings(max_examples=60, deadline=None)
@given(
    buttons=st.tuples(st.booleans(), st.booleans(), st.booleans()),
    axes=st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)),
    task=st.sampled_from([1, 2, 3]),
)
def test_deadman_property_random_inputs(model7, buttons, axes, task):
    pedal = PedalState(False, *buttons, joystick=(axes[0], axes[1]), rocker=axes[2])
    q = np.full(7, 0.2)
    tau = inverse_dynamics(model7, q, np.zeros(7), np.zeros(7))
    _, cmd = control_tick(ControllerState(), model7, q, pedal, tau, task, 0.01)
    assert np.all(cmd.dq == 0.0)


def test_comanipulation_sign_consistency(model7):
    # A residual injected as J^T f* with f* pushing +x must command motion
    # whose realized tip velocity has positive inner product with +x.
    q = np.array([0.0, 0.6, 0.0, -1.2, 0.0, 0.9, 0.0])
    J = geometric_jacobian(model7, q)
    f_star = np.array([5.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    tau_model = inverse_dynamics(model7, q, np.zeros(7), np.zeros(7))
    tau_measured = tau_model + J.matrix.T @ f_star
    s = ControllerState()
    s, cmd = control_tick(s, model7, q, held(), tau_measured, 1, 0.01)
    v_tip = J.matrix @ cmd.dq
    assert v_tip[0] > 0
    assert f_star @ v_tip > 0


def test_teleop_alignment_with_commanded_axis(model7):
    q = np.array([0.0, 0.6, 0.0, -1.2, 0.0, 0.9, 0.0])
    tip = forward_kinematics(model7, q)
    s = ControllerState()
    s, _ = control_tick(s, model7, q, held(), np.zeros(7), 2, 0.01)  # enter teleop
    s, cmd = control_tick(s, model7, q, held(joystick=(1.0, 0.0)), np.zeros(7), 2, 0.01)
    J = geometric_jacobian(model7, q)
    v = (J.matrix @ cmd.dq)[:3]
    commanded = tip.rotation @ np.array([0.005, 0.0, 0.0])
    cos = v @ commanded / (np.linalg.norm(v) * np.linalg.norm(commanded))
    assert cos > 0.99


def test_passivity_direction(model7):
    # With positive diagonal gains and lambda = 0, the control law's realized
    # tip twist has a positive inner product with the estimated wrench
    # (before the joint-limit guard, which may truncate it to zero).
    rng = np.random.default_rng(47)
    g = Gains(dls_lambda=0.0)
    from trocardock.arm import estimate_external_wrench

    for _ in range(100):
        q = random_q(model7, rng)
        J = geometric_jacobian(model7, q)
        f_star = rng.normal(size=6)
        tau_model = inverse_dynamics(model7, q, np.zeros(7), np.zeros(7))
        tau_measured = tau_model + J.matrix.T @ f_star
        wrench = estimate_external_wrench(J, tau_measured, tau_model, lam=0.0)
        dq = resolved_rate_step(J, admittance_twist(wrench, g), g)
        twist = J.matrix @ dq
        assert wrench.as_vector() @ twist > 0 or np.allclose(f_star, 0)


def test_mode_change_event_emitted(model7):
    q = np.full(7, 0.1)
    s = ControllerState()
    s, cmd = control_tick(s, model7, q, held(), np.zeros(7), 2, 0.01)
    kinds = [type(e).__name__ for e in cmd.events]
    assert "ModeChangeEvent" in kinds


def test_pedal_axis_map_configurable():
    g = Gains(pedal_axis_map=("rocker", "-jx", "jy"))
    tw = pedal_to_twist(held(joystick=(1.0, 0.5), rocker=-0.25),
                        ControlMode.TELEOP_TRANSLATIONAL, g, Pose.identity())
    assert np.allclose(tw.linear, np.array([-0.25, -1.0, 0.5]) * g.pedal_linear_scale)


def test_pedal_axis_map_validated():
    with pytest.raises(ValueError):
        Gains(pedal_axis_map=("jx", "jy"))
    with pytest.raises(ValueError):
        Gains(pedal_axis_map=("jx", "jy", "pitch"))


def test_gains_file_roundtrip(tmp_path):
    import json

    from trocardock.control import load_gains

    doc = {
        "k_task": [1, 1, 1, 1, 1, 1],
        "pedal_linear_scale": 0.01,
        "pedal_axis_map": ["jy", "jx", "-rocker"],
        "tau_filter_alpha": 0.3,
    }
    path = tmp_path / "gains.json"
    path.write_text(json.dumps(doc))
    g = load_gains(path)
    assert g.pedal_linear_scale == 0.01
    assert g.pedal_axis_map == ("jy", "jx", "-rocker")
    assert g.tau_filter_alpha == 0.3


def test_twist_reference_point_shift_preserves_spatial_velocity():
    from trocardock.arm import Twist

    rng = np.random.default_rng(131)
    for _ in range(50):
        v, w = rng.normal(size=3), rng.normal(size=3)
        p_old, p_new = rng.normal(size=3), rng.normal(size=3)
        tw = Twist(v, w)
        shifted = tw.shifted(p_old, p_new)
        back = shifted.shifted(p_new, p_old)
        assert np.allclose(back.linear, tw.linear, atol=1e-12)
        assert np.allclose(shifted.angular, tw.angular)
        # the velocity field is the same: evaluate both at a third point
        p_probe = rng.normal(size=3)
        v_a = tw.linear + np.cross(tw.angular, p_probe - p_old)
        v_b = shifted.linear + np.cross(shifted.angular, p_probe - p_new)
        assert np.allclose(v_a, v_b, atol=1e-12)


def test_tau_filter_smooths_residual_steps(model7):
    # with the optional first-order smoother on, a step in the residual is
    # attenuated on the first tick; by default (off) it passes through
    q = np.array([0.0, 0.6, 0.0, -1.2, 0.0, 0.9, 0.0])
    J = geometric_jacobian(model7, q)
    f_star = np.array([4.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    tau_model = inverse_dynamics(model7, q, np.zeros(7), np.zeros(7))
    tau_step = tau_model + J.matrix.T @ f_star

    def first_tick_speed(alpha):
        g = Gains(tau_filter_alpha=alpha)
        s = ControllerState(gains=g)
        s, _ = control_tick(s, model7, q, held(), tau_model, 1, 0.01)   # settle at zero
        s, cmd = control_tick(s, model7, q, held(), tau_step, 1, 0.01)  # step input
        return np.linalg.norm(cmd.dq)

    assert first_tick_speed(0.25) < 0.5 * first_tick_speed(None)
