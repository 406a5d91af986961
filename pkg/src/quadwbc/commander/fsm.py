"""Operation-mode state machine and transition plans.

Mode changes never happen directly: every request builds a plan whose
steps gate on the measured robot state (standstill, contact, weight
shift), and the new mode only activates once the last gate clears.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import math3d as m3
from ..model import Kinematics, RobotModel, RobotState
from .types import (
    LEGS,
    MANIPULATION_MODES,
    WALKING_MODES,
    OperationMode,
    PlanStep,
    SIDE_LEG,
    TransitionPlan,
    UserCommand,
    leg_index,
)

SIT_PITCH = -1.25         # rad, seated torso pitch; negative = nose up
SHIFT_MARGIN = 0.03       # m, CoM clearance inside the support polygon
HALT_LIN = 0.03           # m/s
HALT_YAW = 0.05           # rad/s


def stance_legs_for(mode: OperationMode, side: str) -> tuple:
    if mode is OperationMode.BIMANUAL:
        return ("RR", "RL")
    if mode in (OperationMode.SINGLE_FOOT, OperationMode.SINGLE_GRIPPER):
        manip = SIDE_LEG[side]
        return tuple(leg for leg in LEGS if leg != manip)
    return LEGS


def support_margin(points_xy, p_xy) -> float:
    """Distance from p to the nearest support polygon edge, negative
    outside. Points are hull-ordered by angle around their centroid."""
    pts = np.asarray(points_xy, dtype=float).reshape(-1, 2)
    if len(pts) < 3:
        return -np.inf
    center = pts.mean(axis=0)
    order = np.argsort(np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0]))
    pts = pts[order]
    p = np.asarray(p_xy, dtype=float).reshape(2)
    margin = np.inf
    n = len(pts)
    # polygon is counter-clockwise after the angle sort, so the inward
    # distance is the left-of-edge signed distance
    for i in range(n):
        a, b = pts[i], pts[(i + 1) % n]
        edge = b - a
        length = np.linalg.norm(edge)
        if length < 1e-9:
            continue
        d = (edge[0] * (p[1] - a[1]) - edge[1] * (p[0] - a[0])) / length
        margin = min(margin, d)
    return float(margin)


@dataclass
class Fsm:
    """Mode, in-flight transition, and the model needed for its gates."""

    model: RobotModel
    mode: OperationMode = OperationMode.LOCOMOTION
    side: str = "right"
    plan: TransitionPlan | None = None
    last_rejection: str | None = None
    mode_changed: bool = field(default=False, repr=False)


def _step_done(fsm: Fsm, step: PlanStep, robot: RobotState,
               contacts: np.ndarray) -> bool:
    kind = step.kind
    if kind == "engage":
        return True
    if kind == "halt":
        return (np.linalg.norm(robot.base_vel[:3]) < HALT_LIN
                and abs(robot.base_vel[5]) < HALT_YAW)
    if kind == "settle":
        return bool(contacts.all())
    if kind == "foot_down":
        return bool(contacts[leg_index(step.params["leg"])])
    if kind == "shift":
        kin = Kinematics(fsm.model, robot)
        feet = [kin.frame_pose(frame).pos[:2]
                for frame in step.params["support"]]
        com = kin.com_position()
        return support_margin(feet, com[:2]) >= step.params["margin"]
    if kind == "sit_up":
        pitch = m3.quat_to_rpy(robot.base_quat)[1]
        return (pitch <= step.params["pitch"] + 0.1
                and bool(contacts[2]) and bool(contacts[3]))
    if kind == "stand_down":
        pitch = m3.quat_to_rpy(robot.base_quat)[1]
        return abs(pitch) < 0.15 and bool(contacts.all())
    raise ValueError(f"unknown plan step {kind!r}")


def _support_frames(legs, with_heels: bool) -> tuple:
    frames = tuple(f"{leg}_foot" for leg in legs)
    if with_heels:
        frames = frames + tuple(f"{leg}_heel" for leg in legs if leg in ("RR", "RL"))
    return frames


def _make_plan(from_mode: OperationMode, to_mode: OperationMode,
               side: str, from_side: str) -> TransitionPlan:
    steps = []
    if from_mode in WALKING_MODES:
        steps += [PlanStep("halt"), PlanStep("settle")]
    elif from_mode is OperationMode.BIMANUAL:
        steps += [PlanStep("stand_down"), PlanStep("settle")]
    else:
        steps += [PlanStep("foot_down", {"leg": SIDE_LEG[from_side]}),
                  PlanStep("settle")]
    if to_mode in WALKING_MODES:
        steps += [PlanStep("engage")]
    elif to_mode is OperationMode.BIMANUAL:
        support = _support_frames(("RR", "RL"), with_heels=True)
        steps += [PlanStep("shift", {"support": support,
                                     "margin": SHIFT_MARGIN}),
                  PlanStep("sit_up", {"pitch": SIT_PITCH})]
    else:
        legs = stance_legs_for(to_mode, side)
        steps += [PlanStep("shift", {"support": _support_frames(legs, False),
                                     "margin": SHIFT_MARGIN})]
    return TransitionPlan(target_mode=to_mode, steps=tuple(steps))


def _activation_contacts_ok(mode: OperationMode, contacts: np.ndarray) -> bool:
    if mode is OperationMode.BIMANUAL:
        # upright sitting: the rear support must hold; the front feet
        # have already left the ground during the sit-up
        return bool(contacts[2] and contacts[3])
    if mode in MANIPULATION_MODES:
        return bool(contacts.all())
    return True


def _validate_request(fsm: Fsm, req: OperationMode, user: UserCommand,
                      robot: RobotState) -> str | None:
    if req is OperationMode.BIMANUAL and fsm.mode in WALKING_MODES:
        moving = (np.linalg.norm(robot.base_vel[:3]) > 0.05
                  or (user.torso_twist is not None
                      and np.any(np.abs(user.torso_twist) > 1e-9)))
        if moving:
            return "stop walking before requesting bimanual manipulation"
    return None


def fsm_step(fsm: Fsm, user: UserCommand, robot: RobotState, contacts):
    """Advance the state machine one tick.

    Returns (mode, active transition plan or None). Rejected requests
    leave the mode unchanged and record the reason in
    fsm.last_rejection.
    """
    contacts = np.asarray(contacts, dtype=bool).reshape(4)
    fsm.last_rejection = None
    fsm.mode_changed = False

    if fsm.plan is not None:
        plan = fsm.plan
        while not plan.done and _step_done(fsm, plan.current, robot, contacts):
            plan.index += 1
        if plan.done and _activation_contacts_ok(plan.target_mode, contacts):
            fsm.mode = plan.target_mode
            fsm.plan = None
            fsm.mode_changed = True
        if (user.mode_request is not None
                and fsm.plan is not None
                and user.mode_request is not fsm.plan.target_mode):
            fsm.last_rejection = "transition in progress"
        return fsm.mode, fsm.plan

    req = user.mode_request
    if req is None or req is fsm.mode:
        return fsm.mode, None
    reason = _validate_request(fsm, req, user, robot)
    if reason is not None:
        fsm.last_rejection = reason
        return fsm.mode, None
    fsm.plan = _make_plan(fsm.mode, req, user.side, fsm.side)
    if req in (OperationMode.SINGLE_FOOT, OperationMode.SINGLE_GRIPPER):
        fsm.side = user.side
    return fsm.mode, fsm.plan
