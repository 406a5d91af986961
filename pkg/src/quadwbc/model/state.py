"""Robot state container and the R^24 export used for logging.

Internally orientation is a unit quaternion.  The exported 24-vector
uses Z-Y-X roll-pitch-yaw for the base orientation, which is fine for
logs and trajectories but not for integration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..math3d import quat_normalize, quat_to_rpy, rpy_to_quat
from .spec import JOINT_COUNT


@dataclass
class RobotState:
    base_pos: np.ndarray = field(default_factory=lambda: np.zeros(3))
    base_quat: np.ndarray = field(default_factory=lambda: np.array([1.0, 0, 0, 0]))
    q_joints: np.ndarray = field(default_factory=lambda: np.zeros(JOINT_COUNT))
    base_vel: np.ndarray = field(default_factory=lambda: np.zeros(6))  # [v_world; w_world]
    qd_joints: np.ndarray = field(default_factory=lambda: np.zeros(JOINT_COUNT))

    def __post_init__(self):
        self.base_pos = np.asarray(self.base_pos, dtype=float).reshape(3)
        self.base_quat = quat_normalize(np.asarray(self.base_quat, dtype=float).reshape(4))
        self.q_joints = np.asarray(self.q_joints, dtype=float).reshape(JOINT_COUNT)
        self.base_vel = np.asarray(self.base_vel, dtype=float).reshape(6)
        self.qd_joints = np.asarray(self.qd_joints, dtype=float).reshape(JOINT_COUNT)

    def copy(self) -> "RobotState":
        return RobotState(
            self.base_pos.copy(),
            self.base_quat.copy(),
            self.q_joints.copy(),
            self.base_vel.copy(),
            self.qd_joints.copy(),
        )

    @property
    def qd(self) -> np.ndarray:
        """Generalized velocity [v_base; w_base; qd_joints], shape (24,)."""
        return np.concatenate([self.base_vel, self.qd_joints])


def state_to_vector(state: RobotState) -> np.ndarray:
    """Export configuration as [base_pos, base_rpy, q_joints], shape (24,)."""
    return np.concatenate([state.base_pos, quat_to_rpy(state.base_quat), state.q_joints])


def vector_to_state(q: np.ndarray, qd: np.ndarray | None = None) -> RobotState:
    q = np.asarray(q, dtype=float).reshape(6 + JOINT_COUNT)
    state = RobotState(
        base_pos=q[:3], base_quat=rpy_to_quat(q[3:6]), q_joints=q[6:]
    )
    if qd is not None:
        qd = np.asarray(qd, dtype=float).reshape(6 + JOINT_COUNT)
        state.base_vel = qd[:6].copy()
        state.qd_joints = qd[6:].copy()
    return state
