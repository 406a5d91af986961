"""Public kinematics and dynamics queries.

The functional entry points (forward_kinematics, frame_jacobian, ...)
recompute the tree pass each call.  Hot loops build a Kinematics object
once per tick and query it repeatedly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..math3d import quat_to_mat
from .kernels import (
    crba_kernel,
    fk_kernel,
    frame_bias_accel_kernel,
    jacobian_kernel,
    rnea_bias_kernel,
    spatial_velocities,
)
from .spec import RobotModel
from .state import RobotState


@dataclass
class FramePose:
    pos: np.ndarray
    rot: np.ndarray


class Kinematics:
    """One forward pass over the tree, queryable by frame name."""

    def __init__(self, model: RobotModel, state: RobotState):
        self.model = model
        self.state = state
        base_R = quat_to_mat(state.base_quat)
        self.body_R, self.body_p, self.world_axis = fk_kernel(
            state.base_pos,
            base_R,
            state.q_joints,
            model.parent_body,
            model.joint_origin,
            model.joint_rot,
            model.joint_axis,
        )
        self._chains = {}

    def _chain(self, body: int) -> np.ndarray:
        if body not in self._chains:
            self._chains[body] = np.asarray(self.model.body_chain[body], dtype=np.int64)
        return self._chains[body]

    def frame_pose(self, name: str) -> FramePose:
        f = self.model.frame_id(name)
        b = self.model.frame_body[f]
        pos = self.body_p[b] + self.body_R[b] @ self.model.frame_offset[f]
        rot = self.body_R[b] @ self.model.frame_rot[f]
        return FramePose(pos=pos, rot=rot)

    def frame_jacobian(self, name: str) -> np.ndarray:
        f = self.model.frame_id(name)
        b = int(self.model.frame_body[f])
        pos = self.body_p[b] + self.body_R[b] @ self.model.frame_offset[f]
        chain = self._chain(b)
        return jacobian_kernel(
            pos,
            b,
            self.state.base_pos,
            self.body_p,
            self.world_axis,
            chain,
            len(chain),
            self.model.nv,
        )

    def frame_velocity(self, name: str) -> np.ndarray:
        """World twist [linear; angular] of a named frame."""
        return self.frame_jacobian(name) @ self.state.qd

    def jdot_qdot(self, name: str) -> np.ndarray:
        f = self.model.frame_id(name)
        b = int(self.model.frame_body[f])
        pos = self.body_p[b] + self.body_R[b] @ self.model.frame_offset[f]
        return frame_bias_accel_kernel(
            self.body_p, self.world_axis, self.model.parent_body, self.state.qd, b, pos
        )

    def mass_matrix(self) -> np.ndarray:
        return crba_kernel(
            self.body_R,
            self.body_p,
            self.world_axis,
            self.model.parent_body,
            self.model.body_mass,
            self.model.body_com,
            self.model.body_inertia,
            self.model.nv,
        )

    def bias_forces(self, gravity=None) -> tuple[np.ndarray, np.ndarray]:
        """Velocity bias b and gravity vector g with A qdd + b + g = tau."""
        m = self.model
        gvec = m.gravity if gravity is None else np.asarray(gravity, dtype=float)
        b = rnea_bias_kernel(
            self.body_R, self.body_p, self.world_axis, m.parent_body,
            m.body_mass, m.body_com, m.body_inertia,
            self.state.qd, np.zeros(3), True, m.nv,
        )
        g = rnea_bias_kernel(
            self.body_R, self.body_p, self.world_axis, m.parent_body,
            m.body_mass, m.body_com, m.body_inertia,
            self.state.qd, -gvec, False, m.nv,
        )
        return b, g

    def com_position(self) -> np.ndarray:
        m = self.model.body_mass
        com_w = self.body_p + np.einsum("bij,bj->bi", self.body_R, self.model.body_com)
        return (m[:, None] * com_w).sum(axis=0) / m.sum()

    def body_twists(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-body origin-referenced (v_O, w) arrays."""
        return spatial_velocities(self.body_p, self.world_axis, self.model.parent_body, self.state.qd)


# -- functional wrappers --------------------------------------------------


def forward_kinematics(model: RobotModel, state: RobotState) -> dict[str, FramePose]:
    """World pose of every named frame."""
    kin = Kinematics(model, state)
    return {f.name: kin.frame_pose(f.name) for f in model.frames}


def frame_pose(model: RobotModel, state: RobotState, frame: str) -> FramePose:
    return Kinematics(model, state).frame_pose(frame)


def frame_jacobian(model: RobotModel, state: RobotState, frame: str) -> np.ndarray:
    return Kinematics(model, state).frame_jacobian(frame)


def jdot_qdot(model: RobotModel, state: RobotState, frame: str) -> np.ndarray:
    return Kinematics(model, state).jdot_qdot(frame)


def mass_matrix(model: RobotModel, state: RobotState) -> np.ndarray:
    return Kinematics(model, state).mass_matrix()


def bias_forces(model: RobotModel, state: RobotState) -> tuple[np.ndarray, np.ndarray]:
    return Kinematics(model, state).bias_forces()


def total_mass(model: RobotModel) -> float:
    return float(model.body_mass.sum())


def com_position(model: RobotModel, state: RobotState) -> np.ndarray:
    return Kinematics(model, state).com_position()
