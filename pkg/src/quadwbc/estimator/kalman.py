"""Linear Kalman filter for locomotion: IMU prediction, leg odometry.

State is [torso position, torso velocity, four foot positions], 18
dimensions. The IMU drives the prediction; stance feet supply relative
position measurements and zero-velocity pseudo-measurements through the
leg Jacobians. Swing feet get large process noise so their states renew
on the next touchdown.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .. import math3d as m3
from ..model import Kinematics, RobotModel, RobotState

GRAVITY = 9.81
LEGS = ("FR", "FL", "RR", "RL")


@dataclass
class ImuSample:
    """Body-frame accelerometer/gyro reading plus orientation estimate."""

    lin_acc: np.ndarray
    ang_vel: np.ndarray
    orientation: np.ndarray  # quaternion wxyz

    def __post_init__(self):
        self.lin_acc = np.asarray(self.lin_acc, dtype=float).reshape(3)
        self.ang_vel = np.asarray(self.ang_vel, dtype=float).reshape(3)
        self.orientation = m3.quat_normalize(
            np.asarray(self.orientation, dtype=float).reshape(4))
        if not (np.isfinite(self.lin_acc).all()
                and np.isfinite(self.ang_vel).all()):
            raise ValueError("IMU sample must be finite")


@dataclass
class KfParams:
    sigma_acc: float = 0.35          # m/s^2, accelerometer noise density
    sigma_foot_stance: float = 1e-3  # m/sqrt(s), stance foot random walk
    sigma_foot_swing: float = 0.5    # m/sqrt(s), swing foot freed
    sigma_pos_meas: float = 0.002    # m, leg-odometry foot position
    sigma_vel_meas: float = 0.02     # m/s, zero-velocity pseudo-measure
    init_pos_var: float = 1e-6
    init_vel_var: float = 1e-2
    init_foot_var: float = 1e-6
    divergence_trace: float = 1.0


def load_kf_params(path=None) -> KfParams:
    if path is None:
        return KfParams()
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    return KfParams(**raw)


@dataclass
class KfState:
    pos: np.ndarray
    vel: np.ndarray
    foot_pos: np.ndarray             # (4, 3)
    cov: np.ndarray                  # (18, 18)
    diverged: bool = False
    innovation: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.pos = np.asarray(self.pos, dtype=float).reshape(3)
        self.vel = np.asarray(self.vel, dtype=float).reshape(3)
        self.foot_pos = np.asarray(self.foot_pos, dtype=float).reshape(4, 3)
        self.cov = np.asarray(self.cov, dtype=float).reshape(18, 18)

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.pos, self.vel, self.foot_pos.ravel()])


def _foot_points_body(model: RobotModel, q_j):
    state = RobotState(base_pos=np.zeros(3),
                       base_quat=np.array([1.0, 0.0, 0.0, 0.0]),
                       q_joints=q_j)
    kin = Kinematics(model, state)
    pts = np.array([kin.frame_pose(f"{leg}_foot").pos for leg in LEGS])
    return pts, kin


def kf_reset(model: RobotModel, q_j, orientation, base_pos=(0.0, 0.0, 0.0),
             params: KfParams | None = None) -> KfState:
    params = params or KfParams()
    R = m3.quat_to_mat(np.asarray(orientation, dtype=float).reshape(4))
    base_pos = np.asarray(base_pos, dtype=float).reshape(3)
    pts, _ = _foot_points_body(model, q_j)
    feet = base_pos + pts @ R.T
    cov = np.zeros((18, 18))
    cov[:3, :3] = np.eye(3) * params.init_pos_var
    cov[3:6, 3:6] = np.eye(3) * params.init_vel_var
    cov[6:, 6:] = np.eye(12) * params.init_foot_var
    return KfState(pos=base_pos, vel=np.zeros(3), foot_pos=feet, cov=cov)


def kf_step(kf: KfState, imu: ImuSample, q_j, qd_j, contacts, dt: float,
            model: RobotModel, params: KfParams | None = None) -> KfState:
    """One predict/update cycle; dt == 0 returns the state unchanged."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if dt == 0.0:
        return replace(kf)
    params = params or KfParams()
    contacts = np.asarray(contacts, dtype=bool).reshape(4)
    R = m3.quat_to_mat(imu.orientation)
    qd_j = np.asarray(qd_j, dtype=float).reshape(-1)

    # predict: accelerometer measures specific force
    a_world = R @ imu.lin_acc - np.array([0.0, 0.0, GRAVITY])
    x = kf.vector
    pos = x[:3] + x[3:6] * dt + 0.5 * a_world * dt * dt
    vel = x[3:6] + a_world * dt
    feet = x[6:].copy()

    F = np.eye(18)
    F[:3, 3:6] = np.eye(3) * dt
    Q = np.zeros((18, 18))
    sa2 = params.sigma_acc ** 2
    Q[:3, :3] = np.eye(3) * 0.25 * dt ** 4 * sa2
    Q[:3, 3:6] = Q[3:6, :3] = np.eye(3) * 0.5 * dt ** 3 * sa2
    Q[3:6, 3:6] = np.eye(3) * dt ** 2 * sa2
    for i in range(4):
        s = params.sigma_foot_stance if contacts[i] else params.sigma_foot_swing
        Q[6 + 3 * i:9 + 3 * i, 6 + 3 * i:9 + 3 * i] = np.eye(3) * s ** 2 * dt
    P = F @ kf.cov @ F.T + Q

    x_pred = np.concatenate([pos, vel, feet])

    # update with stance-leg odometry
    pts, kin = _foot_points_body(model, q_j)
    H_rows = []
    z_res = []
    r_diag = []
    for i, leg in enumerate(LEGS):
        if not contacts[i]:
            continue
        # relative foot position: z = R p_foot^B = foot_i - pos
        z = R @ pts[i]
        h = feet[3 * i:3 * i + 3] - pos
        Hr = np.zeros((3, 18))
        Hr[:, :3] = -np.eye(3)
        Hr[:, 6 + 3 * i:9 + 3 * i] = np.eye(3)
        H_rows.append(Hr)
        z_res.append(z - h)
        r_diag.extend([params.sigma_pos_meas ** 2] * 3)
        # stance foot is still: base velocity from the leg Jacobian
        J = kin.frame_jacobian(f"{leg}_foot")[:3, 6:]
        zv = -R @ (J @ qd_j) - np.cross(R @ imu.ang_vel, R @ pts[i])
        Hv = np.zeros((3, 18))
        Hv[:, 3:6] = np.eye(3)
        H_rows.append(Hv)
        z_res.append(zv - vel)
        r_diag.extend([params.sigma_vel_meas ** 2] * 3)

    innovation = np.zeros(0)
    if H_rows:
        H = np.vstack(H_rows)
        y = np.concatenate(z_res)
        Rm = np.diag(r_diag)
        S = H @ P @ H.T + Rm
        K = P @ H.T @ np.linalg.inv(S)
        x_new = x_pred + K @ y
        IKH = np.eye(18) - K @ H
        P = IKH @ P @ IKH.T + K @ Rm @ K.T
        innovation = y
    else:
        x_new = x_pred
    P = 0.5 * (P + P.T)

    return KfState(pos=x_new[:3], vel=x_new[3:6],
                   foot_pos=x_new[6:].reshape(4, 3), cov=P,
                   diverged=float(np.trace(P)) > params.divergence_trace,
                   innovation=innovation)
