# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: chain frames, point Jacobian, recursive Newton-Euler.

Semantics match ``numpy_ref``; this module only removes the Python-level
overhead from the 100 Hz simulation loop.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()

BACKEND_NAME = "compiled"


cdef inline void _rot_axis(const double* ax, double angle, double* R) nogil:
    cdef double x = ax[0], y = ax[1], z = ax[2]
    cdef double c = cos(angle), s = sin(angle), v = 1.0 - c
    R[0] = x * x * v + c
    R[1] = x * y * v - z * s
    R[2] = x * z * v + y * s
    R[3] = x * y * v + z * s
    R[4] = y * y * v + c
    R[5] = y * z * v - x * s
    R[6] = x * z * v - y * s
    R[7] = y * z * v + x * s
    R[8] = z * z * v + c


cdef inline void _mat_mul(const double* A, const double* B, double* C) nogil:
    cdef int i, j, k
    cdef double acc
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for k in range(3):
                acc += A[3 * i + k] * B[3 * k + j]
            C[3 * i + j] = acc


cdef inline void _mat_vec(const double* A, const double* b, double* c) nogil:
    cdef int i
    for i in range(3):
        c[i] = A[3 * i] * b[0] + A[3 * i + 1] * b[1] + A[3 * i + 2] * b[2]


cdef inline void _mat_t_vec(const double* A, const double* b, double* c) nogil:
    cdef int i
    for i in range(3):
        c[i] = A[i] * b[0] + A[3 + i] * b[1] + A[6 + i] * b[2]


cdef inline void _cross(const double* a, const double* b, double* c) nogil:
    c[0] = a[1] * b[2] - a[2] * b[1]
    c[1] = a[2] * b[0] - a[0] * b[2]
    c[2] = a[0] * b[1] - a[1] * b[0]


def chain_frames(const double[:, :, ::1] parent_R, const double[:, ::1] parent_p,
                 const double[:, ::1] axis, const double[::1] q):
    """Cumulative pose of the frame after each joint; see numpy_ref."""
    cdef int n = q.shape[0]
    R_out = np.empty((n, 3, 3))
    p_out = np.empty((n, 3))
    cdef double[:, :, ::1] R = R_out
    cdef double[:, ::1] p = p_out
    cdef double cur_R[9]
    cdef double tmp[9]
    cdef double rot[9]
    cdef double mount[9]
    cdef double cur_p[3]
    cdef double v[3]
    cdef int i, j
    for j in range(9):
        cur_R[j] = 0.0
    cur_R[0] = cur_R[4] = cur_R[8] = 1.0
    cur_p[0] = cur_p[1] = cur_p[2] = 0.0
    with nogil:
        for i in range(n):
            _mat_vec(cur_R, &parent_p[i, 0], v)
            cur_p[0] += v[0]
            cur_p[1] += v[1]
            cur_p[2] += v[2]
            _mat_mul(cur_R, &parent_R[i, 0, 0], mount)
            _rot_axis(&axis[i, 0], q[i], rot)
            _mat_mul(mount, rot, tmp)
            for j in range(9):
                cur_R[j] = tmp[j]
            for j in range(9):
                R[i, j // 3, j % 3] = cur_R[j]
            p[i, 0] = cur_p[0]
            p[i, 1] = cur_p[1]
            p[i, 2] = cur_p[2]
    return R_out, p_out


def point_jacobian(const double[:, :, ::1] frames_R, const double[:, ::1] frames_p,
                   const double[:, ::1] axis, const double[::1] ref_point, int n_active):
    """Geometric Jacobian at ref_point, columns >= n_active zero; see numpy_ref."""
    cdef int n = frames_R.shape[0]
    J_out = np.zeros((6, n))
    cdef double[:, ::1] J = J_out
    cdef double a[3]
    cdef double r[3]
    cdef double lin[3]
    cdef int i, m
    m = n_active if n_active < n else n
    with nogil:
        for i in range(m):
            _mat_vec(&frames_R[i, 0, 0], &axis[i, 0], a)
            r[0] = ref_point[0] - frames_p[i, 0]
            r[1] = ref_point[1] - frames_p[i, 1]
            r[2] = ref_point[2] - frames_p[i, 2]
            _cross(a, r, lin)
            J[0, i] = lin[0]
            J[1, i] = lin[1]
            J[2, i] = lin[2]
            J[3, i] = a[0]
            J[4, i] = a[1]
            J[5, i] = a[2]
    return J_out


def rne(const double[:, :, ::1] parent_R, const double[:, ::1] parent_p,
        const double[:, ::1] axis, const double[::1] q, const double[::1] qd,
        const double[::1] qdd, const double[::1] gravity, const double[::1] mass,
        const double[:, ::1] com, const double[:, :, ::1] inertia):
    """Recursive Newton-Euler joint torques; see numpy_ref."""
    cdef int n = q.shape[0]
    tau_out = np.empty(n)
    cdef double[::1] tau = tau_out
    X_R_buf = np.empty((n, 9))
    F_buf = np.empty((n, 3))
    NN_buf = np.empty((n, 3))
    cdef double[:, ::1] X_R = X_R_buf
    cdef double[:, ::1] F = F_buf
    cdef double[:, ::1] NN = NN_buf

    cdef double rot[9]
    cdef double w_prev[3]
    cdef double wd_prev[3]
    cdef double a_prev[3]
    cdef double w_i[3]
    cdef double wd_i[3]
    cdef double a_i[3]
    cdef double w_par[3]
    cdef double t1[3]
    cdef double t2[3]
    cdef double t3[3]
    cdef double a_c[3]
    cdef double f_child[3]
    cdef double n_child[3]
    cdef double f_i[3]
    cdef double n_i[3]
    cdef int i, j

    with nogil:
        for j in range(3):
            w_prev[j] = 0.0
            wd_prev[j] = 0.0
            a_prev[j] = -gravity[j]
        for i in range(n):
            _rot_axis(&axis[i, 0], q[i], rot)
            _mat_mul(&parent_R[i, 0, 0], rot, &X_R[i, 0])
            _mat_t_vec(&X_R[i, 0], w_prev, w_par)
            for j in range(3):
                w_i[j] = w_par[j] + axis[i, j] * qd[i]
            # wd = Rt wd_prev + ax qdd + (Rt w_prev) x (ax qd)
            _mat_t_vec(&X_R[i, 0], wd_prev, t1)
            for j in range(3):
                t2[j] = axis[i, j] * qd[i]
            _cross(w_par, t2, t3)
            for j in range(3):
                wd_i[j] = t1[j] + axis[i, j] * qdd[i] + t3[j]
            # a = Rt (a_prev + wd_prev x p + w_prev x (w_prev x p))
            _cross(wd_prev, &parent_p[i, 0], t1)
            _cross(w_prev, &parent_p[i, 0], t2)
            _cross(w_prev, t2, t3)
            for j in range(3):
                t1[j] += a_prev[j] + t3[j]
            _mat_t_vec(&X_R[i, 0], t1, a_i)
            # a_com = a + wd x c + w x (w x c)
            _cross(wd_i, &com[i, 0], t1)
            _cross(w_i, &com[i, 0], t2)
            _cross(w_i, t2, t3)
            for j in range(3):
                a_c[j] = a_i[j] + t1[j] + t3[j]
            for j in range(3):
                F[i, j] = mass[i] * a_c[j]
            # N = I wd + w x (I w)
            _mat_vec(&inertia[i, 0, 0], wd_i, t1)
            _mat_vec(&inertia[i, 0, 0], w_i, t2)
            _cross(w_i, t2, t3)
            for j in range(3):
                NN[i, j] = t1[j] + t3[j]
            for j in range(3):
                w_prev[j] = w_i[j]
                wd_prev[j] = wd_i[j]
                a_prev[j] = a_i[j]

        for i in range(n - 1, -1, -1):
            if i == n - 1:
                for j in range(3):
                    f_i[j] = F[i, j]
                _cross(&com[i, 0], &F[i, 0], t1)
                for j in range(3):
                    n_i[j] = NN[i, j] + t1[j]
            else:
                _mat_vec(&X_R[i + 1, 0], f_child, t1)
                for j in range(3):
                    f_i[j] = F[i, j] + t1[j]
                _cross(&parent_p[i + 1, 0], t1, t2)
                _mat_vec(&X_R[i + 1, 0], n_child, t3)
                _cross(&com[i, 0], &F[i, 0], n_i)
                for j in range(3):
                    n_i[j] += NN[i, j] + t3[j] + t2[j]
            tau[i] = axis[i, 0] * n_i[0] + axis[i, 1] * n_i[1] + axis[i, 2] * n_i[2]
            for j in range(3):
                f_child[j] = f_i[j]
                n_child[j] = n_i[j]
    return tau_out
