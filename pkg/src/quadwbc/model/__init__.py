"""Floating-base robot model: schema, kinematics and dynamics."""

from .spec import (
    Capsule,
    JointSpec,
    LinkSpec,
    FrameSpec,
    RobotModel,
    ModelError,
    load_model,
    serialize_model,
    default_model_path,
)
from .state import RobotState, state_to_vector, vector_to_state
from .geometry import (
    segment_distance,
    collision_pairs,
    capsule_world_segments,
    self_collision_margin,
)
from .dynamics import (
    FramePose,
    Kinematics,
    forward_kinematics,
    frame_pose,
    frame_jacobian,
    jdot_qdot,
    mass_matrix,
    bias_forces,
    total_mass,
    com_position,
)

__all__ = [
    "Capsule",
    "JointSpec",
    "LinkSpec",
    "FrameSpec",
    "RobotModel",
    "ModelError",
    "load_model",
    "serialize_model",
    "default_model_path",
    "RobotState",
    "state_to_vector",
    "vector_to_state",
    "segment_distance",
    "collision_pairs",
    "capsule_world_segments",
    "self_collision_margin",
    "FramePose",
    "Kinematics",
    "forward_kinematics",
    "frame_pose",
    "frame_jacobian",
    "jdot_qdot",
    "mass_matrix",
    "bias_forces",
    "total_mass",
    "com_position",
]
