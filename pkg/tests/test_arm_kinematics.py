import numpy as np
import pytest

from trocardock import kernels
from trocardock.arm import (
    ModelMismatchError,
    attached_point_jacobian,
    forward_kinematics,
    geometric_jacobian,
    link_frame,
)
from trocardock.geometry import Pose, rotation_log

from conftest import random_q, single_joint_model


def finite_difference_jacobian(model, q, reference_point="tip", h=1e-6):
    """Central-difference oracle for the geometric Jacobian."""
    n = model.n
    J = np.zeros((6, n))
    for i in range(n):
        dq = np.zeros(n)
        dq[i] = h
        plus = forward_kinematics(model, q + dq)
        minus = forward_kinematics(model, q - dq)
        J[0:3, i] = (plus.translation - minus.translation) / (2 * h)
        J[3:6, i] = rotation_log(plus.rotation @ minus.rotation.T) / (2 * h)
    return J


def test_identity_chain_gives_identity_pose():
    m = single_joint_model(tool_xyz=(0.0, 0.0, 0.0))
    assert forward_kinematics(m, [0.7]).almost_equal(
        Pose(np.array([[np.cos(0.7), -np.sin(0.7), 0], [np.sin(0.7), np.cos(0.7), 0], [0, 0, 1]]), np.zeros(3)),
        tol=1e-12,
    )
    assert forward_kinematics(m, [0.0]).almost_equal(Pose.identity(), tol=1e-15)


def test_single_joint_quarter_turn():
    m = single_joint_model()
    tip = forward_kinematics(m, [np.pi / 2])
    assert np.allclose(tip.translation, [0.0, 1.0, 0.0], atol=1e-12)


def test_shipped_profile_zero_pose(model7):
    # Hand-composition of the shipped file: the link offsets stack along z
    # (0.1575 + 0.2025 + 0.2045 + 0.2155 + 0.1845 + 0.2155 + 0.081) plus the
    # 0.305 tool offset.
    tip = forward_kinematics(model7, np.zeros(7))
    assert np.allclose(tip.translation, [0.0, 0.0, 1.566], atol=1e-12)
    assert np.allclose(tip.rotation, np.eye(3), atol=1e-12)


def test_fk_dimension_mismatch(model7):
    with pytest.raises(ModelMismatchError):
        forward_kinematics(model7, np.zeros(6))


def test_fk_rotation_stays_orthonormal(model7):
    rng = np.random.default_rng(7)
    for _ in range(1000):
        R = forward_kinematics(model7, random_q(model7, rng)).rotation
        assert np.linalg.norm(R.T @ R - np.eye(3)) < 1e-9


def test_link_frame_index_zero_is_mount(model7):
    q = np.full(7, 0.3)
    f0 = link_frame(model7, q, 0)
    assert f0.almost_equal(model7.joints[0].parent_transform, tol=1e-15)


def test_link_frame_single_joint_zero_angle():
    parent = Pose.from_xyz_rpy([0.1, 0.2, 0.3], [0.0, 0.4, 0.0])
    m = single_joint_model(parent=parent)
    assert link_frame(m, [0.0], 1).almost_equal(parent, tol=1e-12)


def test_link_frame_tool_composition_matches_fk(model7):
    rng = np.random.default_rng(11)
    for _ in range(100):
        q = random_q(model7, rng)
        composed = link_frame(model7, q, model7.n) @ model7.tool_transform
        assert composed.almost_equal(forward_kinematics(model7, q), tol=1e-9)


def test_link_frame_index_out_of_range(model7):
    with pytest.raises(IndexError):
        link_frame(model7, np.zeros(7), 8)


def test_jacobian_single_joint_hand_value():
    # axis z at origin, reference point (1,0,0): z x x = y.
    m = single_joint_model()
    J = geometric_jacobian(m, [0.0])
    assert np.allclose(J.matrix[:, 0], [0.0, 1.0, 0.0, 0.0, 0.0, 1.0], atol=1e-12)


def test_jacobian_zero_linear_at_joint_origin():
    m = single_joint_model(tool_xyz=(0.0, 0.0, 0.0))
    J = geometric_jacobian(m, [0.9])
    assert np.allclose(J.matrix[0:3, 0], 0.0, atol=1e-15)


def test_jacobian_matches_finite_differences(model7):
    rng = np.random.default_rng(3)
    for _ in range(25):
        q = random_q(model7, rng)
        J = geometric_jacobian(model7, q).matrix
        J_fd = finite_difference_jacobian(model7, q)
        assert np.max(np.abs(J - J_fd)) < 1e-6


def test_jacobian_flange_reference(model7):
    q = np.full(7, 0.2)
    J = geometric_jacobian(model7, q, reference_point="flange")
    flange = link_frame(model7, q, model7.n)
    assert np.allclose(J.point, flange.translation)


def test_attached_point_jacobian_zeroes_distal_columns(model7):
    q = np.full(7, 0.1)
    frame = link_frame(model7, q, 4)
    J = attached_point_jacobian(model7, q, 4, frame.translation)
    assert np.allclose(J.matrix[:, 4:], 0.0)
    assert not np.allclose(J.matrix[:, :4], 0.0)


def test_backends_agree(model7):
    if len(kernels.available_backends()) < 2:
        pytest.skip("compiled backend not built")
    rng = np.random.default_rng(5)
    original = kernels.active_backend()
    try:
        for _ in range(50):
            q = random_q(model7, rng)
            results = {}
            for name in kernels.available_backends():
                kernels.use_backend(name)
                fk = forward_kinematics(model7, q)
                J = geometric_jacobian(model7, q).matrix
                results[name] = (fk.translation, fk.rotation, J)
            a, b = results["python"], results["compiled"]
            assert np.allclose(a[0], b[0], atol=1e-12)
            assert np.allclose(a[1], b[1], atol=1e-12)
            assert np.allclose(a[2], b[2], atol=1e-12)
    finally:
        kernels.use_backend(original)
