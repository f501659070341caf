"""Pure-NumPy kernels: chain frames, point Jacobian, recursive Newton-Euler.

Reference semantics for the compiled backend in ``_fastkin.pyx``; both
operate on the packed arrays produced by ``ArmModel``.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def _rot_axis(axis: np.ndarray, angle: float) -> np.ndarray:
    x, y, z = axis
    c = np.cos(angle)
    s = np.sin(angle)
    v = 1.0 - c
    return np.array(
        [
            [x * x * v + c, x * y * v - z * s, x * z * v + y * s],
            [x * y * v + z * s, y * y * v + c, y * z * v - x * s],
            [x * z * v - y * s, y * z * v + x * s, z * z * v + c],
        ]
    )


def chain_frames(parent_R, parent_p, axis, q):
    """Cumulative pose of the frame after each joint.

    Returns (R, p) with shapes (N, 3, 3) and (N, 3); entry i is the base-frame
    pose after joint i has rotated by q[i].
    """
    n = len(q)
    R = np.empty((n, 3, 3))
    p = np.empty((n, 3))
    cur_R = np.eye(3)
    cur_p = np.zeros(3)
    for i in range(n):
        cur_p = cur_R @ parent_p[i] + cur_p
        cur_R = cur_R @ parent_R[i] @ _rot_axis(axis[i], q[i])
        R[i] = cur_R
        p[i] = cur_p
    return R, p


def point_jacobian(frames_R, frames_p, axis, ref_point, n_active):
    """Geometric Jacobian at ``ref_point`` (base frame), rows [linear; angular].

    Columns with index >= n_active are zero (joints distal to the attachment
    link do not move the point).
    """
    n = frames_R.shape[0]
    J = np.zeros((6, n))
    for i in range(min(n_active, n)):
        a = frames_R[i] @ axis[i]
        r = ref_point - frames_p[i]
        J[0:3, i] = np.cross(a, r)
        J[3:6, i] = a
    return J


def rne(parent_R, parent_p, axis, q, qd, qdd, gravity, mass, com, inertia):
    """Joint torques for the motion (q, qd, qdd) under gravity.

    Local-frame recursive Newton-Euler for a revolute chain; link i's body
    frame is the frame after joint i, with its inertia about the COM.
    """
    n = len(q)
    X_R = np.empty((n, 3, 3))
    w = np.empty((n, 3))
    wd = np.empty((n, 3))
    F = np.empty((n, 3))
    NN = np.empty((n, 3))

    w_prev = np.zeros(3)
    wd_prev = np.zeros(3)
    a_prev = -np.asarray(gravity, dtype=float)
    for i in range(n):
        X_R[i] = parent_R[i] @ _rot_axis(axis[i], q[i])
        Rt = X_R[i].T
        ax = axis[i]
        w_par = Rt @ w_prev
        w_i = w_par + ax * qd[i]
        wd_i = Rt @ wd_prev + ax * qdd[i] + np.cross(w_par, ax * qd[i])
        p = parent_p[i]
        a_i = Rt @ (a_prev + np.cross(wd_prev, p) + np.cross(w_prev, np.cross(w_prev, p)))
        c = com[i]
        a_c = a_i + np.cross(wd_i, c) + np.cross(w_i, np.cross(w_i, c))
        F[i] = mass[i] * a_c
        NN[i] = inertia[i] @ wd_i + np.cross(w_i, inertia[i] @ w_i)
        w[i] = w_i
        wd[i] = wd_i
        w_prev, wd_prev, a_prev = w_i, wd_i, a_i

    tau = np.empty(n)
    f_child = np.zeros(3)
    n_child = np.zeros(3)
    for i in range(n - 1, -1, -1):
        if i == n - 1:
            f_i = F[i].copy()
            n_i = NN[i] + np.cross(com[i], F[i])
        else:
            fc = X_R[i + 1] @ f_child
            f_i = F[i] + fc
            n_i = NN[i] + np.cross(com[i], F[i]) + X_R[i + 1] @ n_child + np.cross(parent_p[i + 1], fc)
        tau[i] = axis[i] @ n_i
        f_child, n_child = f_i, n_i
    return tau
