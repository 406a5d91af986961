"""Prioritized task resolution through null-space projections.

Two recursions share the same structure.  The kinematic one produces
position and velocity targets with ordinary pseudo-inverses; the dynamic
one produces an acceleration command using inertia-weighted
pseudo-inverses, so that lower-priority corrections decouple from
higher-priority task dynamics.

Each level works with the task jacobian projected through the null space
of everything above it (contact plus all higher-priority levels).  The
running projector is tightened level by level, which keeps J_k @ N_i at
numerical zero for every k <= i.
"""

from __future__ import annotations

import numpy as np

from .. import math3d as m3
from ..model import Kinematics, RobotModel, RobotState
from .pinv import inv_sqrt_spd, svd_pinv, svd_pinv_rank, weighted_pinv_rank
from .types import ContactSpec, TrackingObjective

_SEL = {"position": slice(0, 3), "orientation": slice(3, 6), "pose": slice(0, 6)}


def _check_priorities(objectives) -> list[TrackingObjective]:
    objs = sorted(objectives, key=lambda o: o.priority)
    if [o.priority for o in objs] != list(range(1, len(objs) + 1)):
        raise ValueError("objective priorities must be distinct and contiguous from 1")
    return objs


def _expand_gains(g: np.ndarray) -> np.ndarray:
    if g.shape == (6,):
        return g
    if g.shape == (3,):
        return np.concatenate([g, g])
    if g.shape == (1,):
        return np.full(6, g[0])
    raise ValueError(f"gain vector must have 1, 3 or 6 entries, got {g.shape}")


def pose_error(x_des, x) -> np.ndarray:
    """6-vector [position error; world rotation-vector error]."""
    e = np.empty(6)
    e[:3] = x_des.pos - x.pos
    e[3:] = m3.orientation_error(x_des.rot, x.rot)
    return e


def acceleration_command(obj: TrackingObjective, x, xd: np.ndarray,
                         index: int = 0) -> np.ndarray:
    """Feed-forward plus PD acceleration for one tracked frame.

    Returns the full 6-vector; the hierarchy slices out the rows the
    objective's selector covers.
    """
    kp = _expand_gains(obj.kp_acc)
    kd = _expand_gains(obj.kd_acc)
    e = pose_error(obj.poses[index], x)
    return obj.acc_des(index) + kp * e + kd * (obj.vel_des(index) - np.asarray(xd))


def contact_jacobian(kin: Kinematics, contact: ContactSpec) -> np.ndarray:
    """Stacked linear jacobian rows of every pinned contact frame."""
    frames = contact.frames
    if not frames:
        return np.zeros((0, kin.model.nv))
    return np.vstack([kin.frame_jacobian(f)[:3] for f in frames])


def contact_bias_accel(kin: Kinematics, contact: ContactSpec) -> np.ndarray:
    frames = contact.frames
    if not frames:
        return np.zeros(0)
    return np.concatenate([kin.jdot_qdot(f)[:3] for f in frames])


def _level_rows(kin: Kinematics, obj: TrackingObjective):
    """Stack jacobian rows, pose errors and reference velocities."""
    sel = _SEL[obj.selector]
    Js, es, vs = [], [], []
    for i, frame in enumerate(obj.frames):
        J6 = kin.frame_jacobian(frame)
        x = kin.frame_pose(frame)
        Js.append(J6[sel])
        es.append(pose_error(obj.poses[i], x)[sel])
        vs.append(obj.vel_des(i)[sel])
    return np.vstack(Js), np.concatenate(es), np.concatenate(vs)


def solve_kinematic_hierarchy(model: RobotModel, state: RobotState,
                              objectives, contact: ContactSpec,
                              diagnostics: dict | None = None,
                              kin: Kinematics | None = None,
                              ) -> tuple[np.ndarray, np.ndarray]:
    """Position and velocity targets honoring the priority ordering.

    Returns 24-vectors: [base position, base roll-pitch-yaw, joints] and
    [base linear velocity, base angular velocity, joint rates].  Joint
    entries are clamped to the model limits; diagnostics notes when
    clamping occurred.
    """
    objs = _check_priorities(objectives)
    kin = kin or Kinematics(model, state)
    nv = model.nv
    Jc = contact_jacobian(kin, contact)
    eye = np.eye(nv)
    if Jc.shape[0]:
        N = eye - svd_pinv(Jc) @ Jc
    else:
        N = eye.copy()
    dq = np.zeros(nv)
    qd = np.zeros(nv)
    partially_satisfied: list[str] = []
    if diagnostics is not None:
        diagnostics["null_spaces"] = [N.copy()]
        diagnostics["projected_jacobians"] = []
    for obj in objs:
        J, e, v_ref = _level_rows(kin, obj)
        Jp = J @ N
        Jp_pinv, rank = svd_pinv_rank(Jp)
        if rank < Jp.shape[0]:
            partially_satisfied.append(obj.name or f"priority {obj.priority}")
        dq = dq + Jp_pinv @ (e - J @ dq)
        qd = qd + Jp_pinv @ (v_ref - J @ qd)
        N = N @ (eye - Jp_pinv @ Jp)
        if diagnostics is not None:
            diagnostics["null_spaces"].append(N.copy())
            diagnostics["projected_jacobians"].append(Jp)
    if diagnostics is not None:
        diagnostics["partially_satisfied"] = partially_satisfied

    q_des = np.empty(nv)
    q_des[0:3] = state.base_pos + dq[0:3]
    q_des[3:6] = m3.quat_to_rpy(
        m3.quat_mul(m3.quat_from_rotvec(dq[3:6]), state.base_quat))
    joints = state.q_joints + dq[6:]
    clamped = np.clip(joints, model.joint_lower, model.joint_upper)
    if diagnostics is not None:
        diagnostics["clamped"] = bool(np.any(clamped != joints))
    q_des[6:] = clamped
    return q_des, qd


def solve_dynamic_hierarchy(model: RobotModel, state: RobotState,
                            objectives, contact: ContactSpec,
                            kin: Kinematics | None = None,
                            A: np.ndarray | None = None,
                            diagnostics: dict | None = None) -> np.ndarray:
    """Acceleration command consistent with contacts and priorities."""
    objs = _check_priorities(objectives)
    kin = kin or Kinematics(model, state)
    if A is None:
        A = kin.mass_matrix()
    B = inv_sqrt_spd(A)
    nv = model.nv
    qd_cur = state.qd
    Jc = contact_jacobian(kin, contact)
    eye = np.eye(nv)
    if Jc.shape[0]:
        Jc_dpinv, _ = weighted_pinv_rank(Jc, B)
        qdd = Jc_dpinv @ (-contact_bias_accel(kin, contact))
        N = eye - Jc_dpinv @ Jc
    else:
        qdd = np.zeros(nv)
        N = eye.copy()
    partially_satisfied: list[str] = []
    if diagnostics is not None:
        diagnostics["null_spaces_dyn"] = [N.copy()]
    for obj in objs:
        sel = _SEL[obj.selector]
        Js, cmds, biases = [], [], []
        for i, frame in enumerate(obj.frames):
            J6 = kin.frame_jacobian(frame)
            x = kin.frame_pose(frame)
            xd = J6 @ qd_cur
            Js.append(J6[sel])
            cmds.append(acceleration_command(obj, x, xd, i)[sel])
            biases.append(kin.jdot_qdot(frame)[sel])
        J = np.vstack(Js)
        xdd_cmd = np.concatenate(cmds)
        jdqd = np.concatenate(biases)
        Jp = J @ N
        T, rank = weighted_pinv_rank(Jp, B)
        if rank < Jp.shape[0]:
            partially_satisfied.append(obj.name or f"priority {obj.priority}")
        qdd = qdd + T @ (xdd_cmd - jdqd - J @ qdd)
        N = N @ (eye - T @ Jp)
        if diagnostics is not None:
            diagnostics["null_spaces_dyn"].append(N.copy())
    if diagnostics is not None:
        diagnostics["partially_satisfied_dyn"] = partially_satisfied
    return qdd
