"""Operation modes, transition FSM, gait clock, and objective builders."""

from .builder import (
    EEF_BOX,
    SWING_HEIGHT,
    Commander,
    build_desired,
    gait_flags,
)
from .fsm import (
    HALT_LIN,
    HALT_YAW,
    SHIFT_MARGIN,
    SIT_PITCH,
    Fsm,
    fsm_step,
    stance_legs_for,
    support_margin,
)
from .gait import foothold_target, gait_scheduler
from .script import ScriptSource, load_script, parse_command
from .trajectory import bezier_trajectory, evaluate_path, swing_foot_trajectory
from .types import (
    LEGS,
    MANIPULATION_MODES,
    MODE_OBJECTIVES,
    SIDE_LEG,
    STAND_HEIGHT,
    WALKING_MODES,
    DesiredState,
    GaitState,
    OperationMode,
    PlanStep,
    Trajectory,
    TransitionPlan,
    UserCommand,
    hold_pose,
    leg_index,
    objective_names,
)

__all__ = [
    "EEF_BOX",
    "SWING_HEIGHT",
    "Commander",
    "build_desired",
    "gait_flags",
    "HALT_LIN",
    "HALT_YAW",
    "SHIFT_MARGIN",
    "SIT_PITCH",
    "Fsm",
    "fsm_step",
    "stance_legs_for",
    "support_margin",
    "foothold_target",
    "gait_scheduler",
    "ScriptSource",
    "load_script",
    "parse_command",
    "bezier_trajectory",
    "evaluate_path",
    "swing_foot_trajectory",
    "LEGS",
    "MANIPULATION_MODES",
    "MODE_OBJECTIVES",
    "SIDE_LEG",
    "STAND_HEIGHT",
    "WALKING_MODES",
    "DesiredState",
    "GaitState",
    "OperationMode",
    "PlanStep",
    "Trajectory",
    "TransitionPlan",
    "UserCommand",
    "hold_pose",
    "leg_index",
    "objective_names",
]
