"""Kinematics-based torso estimator for stance-anchored manipulation.

At reset the current base frame becomes the world frame and the stance
foot positions are recorded. While those feet hold still, the rigid
transform between the recorded points and their current body-frame
positions is the base pose; Procrustes analysis solves it in closed
form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .. import math3d as m3
from ..model import FramePose, Kinematics, RobotModel, RobotState

SLIP_THRESHOLD = 0.005  # m, residual RMS above this flags a moved foot


def procrustes(P, Q) -> tuple[np.ndarray, np.ndarray]:
    """Rigid transform (R, t) minimizing sum ||R p_i + t - q_i||^2.

    Raises ValueError when the point set is too small or degenerate
    (coincident or collinear points leave the rotation unobservable).
    """
    P = np.asarray(P, dtype=float).reshape(-1, 3)
    Q = np.asarray(Q, dtype=float).reshape(-1, 3)
    if P.shape != Q.shape:
        raise ValueError("point sets must have matching shapes")
    if len(P) < 3:
        raise ValueError("need at least 3 point pairs")
    pc = P.mean(axis=0)
    qc = Q.mean(axis=0)
    Pt = P - pc
    Qt = Q - qc
    H = Pt.T @ Qt
    U, S, Vt = np.linalg.svd(H)
    # two significant singular values pin the rotation; a single one
    # means the points lie on a line
    if S[1] <= 1e-12 * max(S[0], 1e-30):
        raise ValueError("degenerate point set: collinear or coincident")
    d = np.sign(np.linalg.det(Vt.T @ U.T))
    R = Vt.T @ np.diag([1.0, 1.0, d]) @ U.T
    t = qc - R @ pc
    return R, t


class _Biquad:
    """Second-order Butterworth low-pass, one state per channel."""

    def __init__(self, fs: float, fc: float, channels: int):
        wc = np.tan(np.pi * fc / fs)
        k1 = np.sqrt(2.0) * wc
        k2 = wc * wc
        a0 = 1.0 + k1 + k2
        self.b = np.array([k2, 2.0 * k2, k2]) / a0
        self.a = np.array([2.0 * (k2 - 1.0) / a0, (1.0 - k1 + k2) / a0])
        self.x = np.zeros((2, channels))
        self.y = np.zeros((2, channels))

    def seed(self, value):
        self.x[:] = value
        self.y[:] = value

    def step(self, u):
        u = np.asarray(u, dtype=float)
        y = (self.b[0] * u + self.b[1] * self.x[0] + self.b[2] * self.x[1]
             - self.a[0] * self.y[0] - self.a[1] * self.y[1])
        self.x[1] = self.x[0]
        self.x[0] = u
        self.y[1] = self.y[0]
        self.y[0] = y
        return y


class KinematicEstimate(NamedTuple):
    pose: FramePose
    twist: np.ndarray
    residual_rms: float
    slipped: bool


@dataclass
class KinematicAnchor:
    """World-frame definition captured at a reset instant."""

    model: RobotModel
    frames: tuple
    p_init: np.ndarray               # (n, 3) world = reset base frame
    rate: float = 400.0
    slip_threshold: float = SLIP_THRESHOLD
    cutoff_hz: float = 30.0
    _filter: _Biquad = field(default=None, repr=False)
    _prev: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        self.p_init = np.asarray(self.p_init, dtype=float).reshape(-1, 3)
        if self._filter is None:
            self._filter = _Biquad(self.rate, self.cutoff_hz, 6)


def _body_frame_points(model: RobotModel, q_j, frames) -> np.ndarray:
    state = RobotState(base_pos=np.zeros(3),
                       base_quat=np.array([1.0, 0.0, 0.0, 0.0]),
                       q_joints=q_j)
    kin = Kinematics(model, state)
    return np.array([kin.frame_pose(f).pos for f in frames]), kin


def reset_kinematic_estimator(model: RobotModel, q_j, contacts,
                              frames=None, rate: float = 400.0,
                              qd_j=None) -> KinematicAnchor:
    """Declare the current base frame as the world frame.

    contacts are per-leg flags (FR, FL, RR, RL); frames overrides the
    default foot-point selection, e.g. to add heels when seated.
    """
    contacts = np.asarray(contacts, dtype=bool).reshape(4)
    if frames is None:
        legs = ("FR", "FL", "RR", "RL")
        frames = tuple(f"{leg}_foot" for leg, c in zip(legs, contacts) if c)
    if len(frames) < 3:
        raise ValueError("kinematic reset needs at least 3 contact points")
    p_init, kin = _body_frame_points(model, q_j, frames)
    spread = np.linalg.svd(p_init - p_init.mean(axis=0), compute_uv=False)
    if spread[1] <= 1e-9:
        raise ValueError("contact points are collinear")
    anchor = KinematicAnchor(model=model, frames=tuple(frames),
                             p_init=p_init, rate=rate)
    twist0 = np.zeros(6)
    if qd_j is not None:
        twist0 = _twist_from_joints(kin, frames, p_init, np.eye(3), qd_j)
    anchor._filter.seed(twist0)
    anchor._prev = (np.zeros(3), np.eye(3), twist0)
    return anchor


def _twist_from_joints(kin, frames, p_body, R, qd_j) -> np.ndarray:
    """Base twist that keeps the given points still in the world."""
    qd_j = np.asarray(qd_j, dtype=float).reshape(-1)
    rows = []
    rhs = []
    for i, f in enumerate(frames):
        J = kin.frame_jacobian(f)[:3]
        # world foot velocity = R (J_j qd) + v + w x (R p_body) = 0
        block = np.zeros((3, 6))
        block[:, :3] = np.eye(3)
        block[:, 3:] = -m3.skew(R @ p_body[i])
        rows.append(block)
        rhs.append(-R @ (J[:, 6:] @ qd_j))
    sol, *_ = np.linalg.lstsq(np.vstack(rows), np.concatenate(rhs),
                              rcond=None)
    return sol


def kinematic_estimate(anchor: KinematicAnchor, q_j,
                       qd_j=None) -> KinematicEstimate:
    """Torso pose and low-pass-filtered twist from the stance anchor."""
    p_cur, _ = _body_frame_points(anchor.model, q_j, anchor.frames)
    R, t = procrustes(p_cur, anchor.p_init)
    res = (p_cur @ R.T + t) - anchor.p_init
    rms = float(np.sqrt(np.mean(np.sum(res * res, axis=1))))

    p_prev, R_prev, _ = anchor._prev
    dt = 1.0 / anchor.rate
    raw = np.zeros(6)
    raw[:3] = (t - p_prev) / dt
    raw[3:] = m3.log_so3(R @ R_prev.T) / dt
    twist = anchor._filter.step(raw)
    anchor._prev = (t.copy(), R.copy(), twist.copy())
    return KinematicEstimate(
        pose=FramePose(pos=t, rot=R), twist=twist,
        residual_rms=rms, slipped=rms > anchor.slip_threshold)
