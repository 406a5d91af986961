"""Compiled recursions over the kinematic tree.

Spatial quantities are expressed in world coordinates referenced at the
world origin.  Motion vectors are ordered (v_O, w), force vectors
(f, n_O).  Generalized velocity is [v_base, w_base, qd_joints] with
v_base the world velocity of the base frame origin.

All functions take flat arrays produced by RobotModel._compile so numba
can cache the compiled code across processes.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True)
def _rot_axis(axis, angle):
    """Rodrigues rotation about a unit axis."""
    c = np.cos(angle)
    s = np.sin(angle)
    v = 1.0 - c
    x, y, z = axis[0], axis[1], axis[2]
    R = np.empty((3, 3))
    R[0, 0] = c + x * x * v
    R[0, 1] = x * y * v - z * s
    R[0, 2] = x * z * v + y * s
    R[1, 0] = y * x * v + z * s
    R[1, 1] = c + y * y * v
    R[1, 2] = y * z * v - x * s
    R[2, 0] = z * x * v - y * s
    R[2, 1] = z * y * v + x * s
    R[2, 2] = c + z * z * v
    return R


@njit(cache=True)
def fk_kernel(base_pos, base_R, q, parent_body, joint_origin, joint_rot, joint_axis):
    """Body poses plus world joint axes and anchor points."""
    nj = q.shape[0]
    nb = nj + 1
    body_R = np.empty((nb, 3, 3))
    body_p = np.empty((nb, 3))
    body_R[0] = base_R
    body_p[0] = base_pos
    world_axis = np.empty((nj, 3))
    for j in range(nj):
        p = parent_body[j]
        Rp = body_R[p]
        body_p[j + 1] = body_p[p] + Rp @ joint_origin[j]
        Rj = Rp @ joint_rot[j]
        world_axis[j] = Rj @ joint_axis[j]
        body_R[j + 1] = Rj @ _rot_axis(joint_axis[j], q[j])
    return body_R, body_p, world_axis


@njit(cache=True)
def spatial_velocities(body_p, world_axis, parent_body, qd):
    """Per-body (v_O, w) from the generalized velocity."""
    nj = world_axis.shape[0]
    nb = nj + 1
    v = np.empty((nb, 3))
    w = np.empty((nb, 3))
    w[0] = qd[3:6]
    v[0] = qd[0:3] + _cross(body_p[0], w[0])
    for j in range(nj):
        p = parent_body[j]
        a = world_axis[j]
        w[j + 1] = w[p] + a * qd[6 + j]
        v[j + 1] = v[p] + _cross(body_p[j + 1], a) * qd[6 + j]
    return v, w


@njit(cache=True)
def jacobian_kernel(p_frame, body, base_pos, body_p, world_axis, chain, chain_len, nv):
    """6 x nv frame jacobian, rows [linear; angular]."""
    J = np.zeros((6, nv))
    for k in range(3):
        J[k, k] = 1.0
        J[3 + k, 3 + k] = 1.0
    r = p_frame - base_pos
    # linear block of the base rotation columns: -skew(p_frame - base_pos)
    J[0, 4] = r[2]
    J[0, 5] = -r[1]
    J[1, 3] = -r[2]
    J[1, 5] = r[0]
    J[2, 3] = r[1]
    J[2, 4] = -r[0]
    for c in range(chain_len):
        j = chain[c]
        a = world_axis[j]
        lin = _cross(a, p_frame - body_p[j + 1])
        J[0, 6 + j] = lin[0]
        J[1, 6 + j] = lin[1]
        J[2, 6 + j] = lin[2]
        J[3, 6 + j] = a[0]
        J[4, 6 + j] = a[1]
        J[5, 6 + j] = a[2]
    return J


@njit(cache=True)
def crba_kernel(body_R, body_p, world_axis, parent_body, mass, com, inertia, nv):
    """Mass matrix by composite-rigid-body accumulation at the world origin."""
    nb = body_R.shape[0]
    nj = nb - 1
    m = mass.copy()
    h = np.empty((nb, 3))
    Irot = np.empty((nb, 3, 3))
    eye3 = np.eye(3)
    for b in range(nb):
        cw = body_p[b] + body_R[b] @ com[b]
        h[b] = mass[b] * cw
        Iw = body_R[b] @ inertia[b] @ body_R[b].T
        cc = cw[0] * cw[0] + cw[1] * cw[1] + cw[2] * cw[2]
        for r in range(3):
            for c in range(3):
                Irot[b, r, c] = Iw[r, c] + mass[b] * (cc * eye3[r, c] - cw[r] * cw[c])
    for b in range(nb - 1, 0, -1):
        p = parent_body[b - 1]
        m[p] += m[b]
        h[p] += h[b]
        Irot[p] += Irot[b]

    A = np.zeros((nv, nv))
    for j in range(nj):
        b = j + 1
        a = world_axis[j]
        s_lin = _cross(body_p[b], a)
        f_lin = m[b] * s_lin - _cross(h[b], a)
        f_ang = _cross(h[b], s_lin) + Irot[b] @ a
        A[6 + j, 6 + j] = s_lin @ f_lin + a @ f_ang
        kb = parent_body[j]
        while kb > 0:
            k = kb - 1
            ak = world_axis[k]
            sk_lin = _cross(body_p[kb], ak)
            A[6 + k, 6 + j] = sk_lin @ f_lin + ak @ f_ang
            A[6 + j, 6 + k] = A[6 + k, 6 + j]
            kb = parent_body[k]
        pb = body_p[0]
        n_base = f_ang + _cross(f_lin, pb)
        for r in range(3):
            A[r, 6 + j] = f_lin[r]
            A[6 + j, r] = f_lin[r]
            A[3 + r, 6 + j] = n_base[r]
            A[6 + j, 3 + r] = n_base[r]

    # base block: X^T M X with X = [[E, S(p_b)], [0, E]]
    pb = body_p[0]
    Sh = np.array([[0.0, -h[0, 2], h[0, 1]], [h[0, 2], 0.0, -h[0, 0]], [-h[0, 1], h[0, 0], 0.0]])
    Sp = np.array([[0.0, -pb[2], pb[1]], [pb[2], 0.0, -pb[0]], [-pb[1], pb[0], 0.0]])
    A[0:3, 0:3] = m[0] * eye3
    cp = m[0] * Sp - Sh
    A[0:3, 3:6] = cp
    A[3:6, 0:3] = cp.T
    A[3:6, 3:6] = Irot[0] - m[0] * (Sp @ Sp) + Sp @ Sh + Sh @ Sp
    return A


@njit(cache=True)
def rnea_bias_kernel(body_R, body_p, world_axis, parent_body, mass, com, inertia,
                     qd, a0_lin, with_velocity, nv):
    """Generalized force for qdd = 0.

    with_velocity False and a0_lin = -gravity gives the gravity vector;
    with_velocity True and a0_lin = 0 gives the Coriolis/centrifugal bias.
    """
    nb = body_R.shape[0]
    nj = nb - 1
    v = np.zeros((nb, 3))
    w = np.zeros((nb, 3))
    a = np.zeros((nb, 3))
    al = np.zeros((nb, 3))
    a[0] = a0_lin
    if with_velocity:
        w[0] = qd[3:6]
        v[0] = qd[0:3] + _cross(body_p[0], w[0])
        # [v_base; w] holds the base-point velocity, so a frozen generalized
        # velocity still carries a spatial base acceleration of v_base x w
        a[0] += _cross(qd[0:3], qd[3:6])
    for j in range(nj):
        p = parent_body[j]
        ax = world_axis[j]
        s_lin = _cross(body_p[j + 1], ax)
        if with_velocity:
            qdj = qd[6 + j]
            w[j + 1] = w[p] + ax * qdj
            v[j + 1] = v[p] + s_lin * qdj
            # spatial derivative of the joint axis seen from the moving body
            dl = _cross(w[j + 1], s_lin) + _cross(v[j + 1], ax)
            da = _cross(w[j + 1], ax)
            a[j + 1] = a[p] + dl * qdj
            al[j + 1] = al[p] + da * qdj
        else:
            a[j + 1] = a[p]
            al[j + 1] = al[p]

    f = np.empty((nb, 3))
    n = np.empty((nb, 3))
    eye3 = np.eye(3)
    for b in range(nb):
        cw = body_p[b] + body_R[b] @ com[b]
        hb = mass[b] * cw
        Iw = body_R[b] @ inertia[b] @ body_R[b].T
        cc = cw[0] * cw[0] + cw[1] * cw[1] + cw[2] * cw[2]
        Irot = Iw + mass[b] * (cc * eye3 - np.outer(cw, cw))
        f[b] = mass[b] * a[b] - _cross(hb, al[b])
        n[b] = _cross(hb, a[b]) + Irot @ al[b]
        if with_velocity:
            p_mom = mass[b] * v[b] - _cross(hb, w[b])
            L = _cross(hb, v[b]) + Irot @ w[b]
            f[b] += _cross(w[b], p_mom)
            n[b] += _cross(w[b], L) + _cross(v[b], p_mom)

    tau = np.zeros(nv)
    for b in range(nb - 1, 0, -1):
        j = b - 1
        ax = world_axis[j]
        s_lin = _cross(body_p[b], ax)
        tau[6 + j] = s_lin @ f[b] + ax @ n[b]
        p = parent_body[j]
        f[p] += f[b]
        n[p] += n[b]
    pb = body_p[0]
    tau[0:3] = f[0]
    tau[3:6] = n[0] + _cross(f[0], pb)
    return tau


@njit(cache=True)
def frame_bias_accel_kernel(body_p, world_axis, parent_body, qd, body, p_frame):
    """Classical 6-vector Jdot @ qd of a frame point (linear; angular)."""
    nj = world_axis.shape[0]
    nb = nj + 1
    v = np.zeros((nb, 3))
    w = np.zeros((nb, 3))
    a = np.zeros((nb, 3))
    al = np.zeros((nb, 3))
    w[0] = qd[3:6]
    v[0] = qd[0:3] + _cross(body_p[0], w[0])
    a[0] = _cross(qd[0:3], qd[3:6])
    for j in range(nj):
        p = parent_body[j]
        ax = world_axis[j]
        s_lin = _cross(body_p[j + 1], ax)
        qdj = qd[6 + j]
        w[j + 1] = w[p] + ax * qdj
        v[j + 1] = v[p] + s_lin * qdj
        dl = _cross(w[j + 1], s_lin) + _cross(v[j + 1], ax)
        da = _cross(w[j + 1], ax)
        a[j + 1] = a[p] + dl * qdj
        al[j + 1] = al[p] + da * qdj
    out = np.empty(6)
    vx = v[body] + _cross(w[body], p_frame)
    out[0:3] = a[body] + _cross(al[body], p_frame) + _cross(w[body], vx)
    out[3:6] = al[body]
    return out
