"""Desk-scale rigid-body simulation: forward dynamics and ground contact.

Penalty ground model (spring-damper normal, Coulomb-capped viscous
tangential) on the foot and heel point frames, semi-implicit Euler at
2000 Hz. Deliberately simple and deterministic; real-robot effects like
foot deformation are out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import math3d as m3
from ..estimator import ImuSample
from ..model import Kinematics, RobotModel, RobotState

# ground-touching point frames, feet first so per-foot views are cheap
CONTACT_FRAMES = ("FR_foot", "FL_foot", "RR_foot", "RL_foot",
                  "RR_heel", "RL_heel")
CONTACT_FORCE_THRESHOLD = 1.0  # N, normal force that counts as contact


class SimDivergence(RuntimeError):
    """Raised when the integrator blows up (velocity norm past limit)."""


@dataclass
class SimConfig:
    dt: float = 5e-4                      # 2000 Hz
    gravity: np.ndarray = field(
        default_factory=lambda: np.array([0.0, 0.0, -9.81]))
    contact_kn: float = 1e4               # N/m, normal stiffness
    contact_dn: float = 2e2               # N*s/m, normal damping
    contact_kt: float = 1e4               # N/m, tangential anchor stiffness
    contact_dt: float = 2e2               # N*s/m, tangential damping
    friction_mu: float = 0.7
    # reflected rotor inertia per joint; the wrist links alone are ~3e-6
    # kg m^2 which no explicit 2000 Hz servo damping can stabilize
    armature: np.ndarray = field(
        default_factory=lambda: np.array([5e-4] * 12 + [1e-3] * 6))
    noise_q: float = 0.0                  # rad, encoder noise
    noise_qd: float = 0.0                 # rad/s
    noise_acc: float = 0.0                # m/s^2, accelerometer
    noise_gyro: float = 0.0               # rad/s
    qd_limit: float = 200.0               # divergence guard
    seed: int = 0

    def __post_init__(self):
        self.gravity = np.asarray(self.gravity, dtype=float).reshape(3)
        self.armature = np.asarray(self.armature, dtype=float).reshape(-1)
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if min(self.contact_kn, self.contact_dn, self.contact_kt,
               self.contact_dt) < 0:
            raise ValueError("contact coefficients must be non-negative")
        if (self.armature < 0).any():
            raise ValueError("armature must be non-negative")


@dataclass
class SensorReadings:
    q: np.ndarray                         # (18,)
    qd: np.ndarray                        # (18,)
    imu: ImuSample
    foot_forces: np.ndarray               # (4, 3), world frame
    contacts: np.ndarray                  # (4,) bool

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float).reshape(-1)
        self.qd = np.asarray(self.qd, dtype=float).reshape(-1)
        self.foot_forces = np.asarray(self.foot_forces, dtype=float).reshape(-1, 3)
        if not (np.isfinite(self.q).all() and np.isfinite(self.qd).all()
                and np.isfinite(self.foot_forces).all()):
            raise ValueError("sensor readings must be finite")


def forward_dynamics(model: RobotModel, state: RobotState, tau_j,
                     contact_forces_frames=None, *,
                     gravity=None, fixed_base: bool = False,
                     armature=None,
                     kin: Kinematics | None = None) -> np.ndarray:
    """Generalized acceleration A^-1 (tau + J^T f - b - g), shape (24,).

    contact_forces_frames maps frame name -> world force 3-vector (or an
    (n, 3) array ordered like CONTACT_FRAMES). fixed_base pins the
    torso and solves the 18x18 joint block only. armature, when given,
    adds reflected rotor inertia to the joint diagonal of A.
    """
    tau_j = np.asarray(tau_j, dtype=float).reshape(-1)
    kin = kin or Kinematics(model, state)
    A = kin.mass_matrix()
    if armature is not None:
        A = A.copy()
        idx = np.arange(6, A.shape[0])
        A[idx, idx] += armature
    b, g = kin.bias_forces(gravity=gravity)
    rhs = -b - g
    rhs[6:6 + len(tau_j)] += tau_j
    if contact_forces_frames is not None:
        if isinstance(contact_forces_frames, dict):
            items = contact_forces_frames.items()
        else:
            forces = np.asarray(contact_forces_frames, dtype=float)
            items = zip(CONTACT_FRAMES, forces)
        for frame, f in items:
            f = np.asarray(f, dtype=float).reshape(3)
            if not f.any():
                continue
            rhs += kin.frame_jacobian(frame)[:3].T @ f
    qdd = np.zeros(24)
    if fixed_base:
        qdd[6:] = np.linalg.solve(A[6:, 6:], rhs[6:])
    else:
        qdd = np.linalg.solve(A, rhs)
    return qdd


@dataclass
class ContactAnchors:
    """Tangential stick anchors, one per CONTACT_FRAMES entry.

    Owned by whoever steps the sim; a fresh instance means every contact
    (re)sticks at its current position.
    """

    xy: np.ndarray = field(
        default_factory=lambda: np.zeros((len(CONTACT_FRAMES), 2)))
    active: np.ndarray = field(
        default_factory=lambda: np.zeros(len(CONTACT_FRAMES), dtype=bool))


def contact_forces(model: RobotModel, state: RobotState,
                   cfg: SimConfig, kin: Kinematics | None = None,
                   anchors: ContactAnchors | None = None) -> np.ndarray:
    """World-frame ground reaction at each CONTACT_FRAMES point, (6, 3).

    Normal: spring-damper on penetration, clamped >= 0. Tangential: a
    Coulomb-capped anchor spring plus damping; when the cap binds the
    anchor slips so the stored force stays on the cone (plain capped
    viscous friction when no anchors are threaded through).
    """
    kin = kin or Kinematics(model, state)
    qd = state.qd
    out = np.zeros((len(CONTACT_FRAMES), 3))
    for i, frame in enumerate(CONTACT_FRAMES):
        p = kin.frame_pose(frame).pos
        depth = -p[2]
        fz = 0.0
        if depth > 0.0:
            v = kin.frame_jacobian(frame)[:3] @ qd
            fz = cfg.contact_kn * depth - cfg.contact_dn * v[2]
        if fz <= 0.0:
            if anchors is not None:
                anchors.active[i] = False
            continue
        ft = -cfg.contact_dt * v[:2]
        if anchors is not None:
            if not anchors.active[i]:
                anchors.active[i] = True
                anchors.xy[i] = p[:2]
            ft = ft - cfg.contact_kt * (p[:2] - anchors.xy[i])
        cap = cfg.friction_mu * fz
        nt = float(np.linalg.norm(ft))
        if nt > cap:
            ft *= cap / nt
            if anchors is not None and cfg.contact_kt > 0.0:
                # slide: move the anchor so the spring alone sits on the cone
                anchors.xy[i] = p[:2] + (ft + cfg.contact_dt * v[:2]) / cfg.contact_kt
        out[i] = [ft[0], ft[1], fz]
    return out


def sim_step(model: RobotModel, state: RobotState, tau_j, cfg: SimConfig,
             rng: np.random.Generator | None = None,
             anchors: ContactAnchors | None = None
             ) -> tuple[RobotState, SensorReadings]:
    """One semi-implicit Euler step; returns the new state and sensors."""
    if np.linalg.norm(state.qd) > cfg.qd_limit:
        raise SimDivergence(
            f"velocity norm {np.linalg.norm(state.qd):.1f} exceeds "
            f"{cfg.qd_limit}")
    kin = Kinematics(model, state)
    forces = contact_forces(model, state, cfg, kin=kin, anchors=anchors)
    qdd = forward_dynamics(model, state, tau_j, forces,
                           gravity=cfg.gravity, armature=cfg.armature,
                           kin=kin)
    v_new = state.qd + qdd * cfg.dt
    base_pos = state.base_pos + v_new[:3] * cfg.dt
    base_quat = m3.quat_integrate(state.base_quat, v_new[3:6], cfg.dt)
    q_new = state.q_joints + v_new[6:] * cfg.dt
    new_state = RobotState(base_pos=base_pos, base_quat=base_quat,
                           q_joints=q_new, base_vel=v_new[:6],
                           qd_joints=v_new[6:])

    q_meas = q_new.copy()
    qd_meas = v_new[6:].copy()
    R = m3.quat_to_mat(base_quat)
    acc_body = R.T @ (qdd[:3] - cfg.gravity)
    gyro_body = R.T @ v_new[3:6]
    if rng is not None:
        if cfg.noise_q > 0:
            q_meas += rng.normal(0.0, cfg.noise_q, q_meas.shape)
        if cfg.noise_qd > 0:
            qd_meas += rng.normal(0.0, cfg.noise_qd, qd_meas.shape)
        if cfg.noise_acc > 0:
            acc_body = acc_body + rng.normal(0.0, cfg.noise_acc, 3)
        if cfg.noise_gyro > 0:
            gyro_body = gyro_body + rng.normal(0.0, cfg.noise_gyro, 3)
    foot_forces = forces[:4]
    # heel load counts toward its leg's contact state when seated
    normal_load = foot_forces[:, 2].copy()
    normal_load[2] += forces[4, 2]
    normal_load[3] += forces[5, 2]
    sensors = SensorReadings(
        q=q_meas, qd=qd_meas,
        imu=ImuSample(lin_acc=acc_body, ang_vel=gyro_body,
                      orientation=base_quat.copy()),
        foot_forces=foot_forces,
        contacts=normal_load > CONTACT_FORCE_THRESHOLD)
    return new_state, sensors
