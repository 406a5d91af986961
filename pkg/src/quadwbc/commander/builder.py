"""Per-mode translation of user commands into tracking objectives.

build_desired is the stateless core: given a mode, a command, the robot
state, and the gait clock it emits the mode's objective stack and
contact set. Commander wraps it with the bookkeeping a running session
needs: the FSM, gait advancement, swing-foot anchors, and entry-pose
holds.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .. import math3d as m3
from ..model import FramePose, Kinematics, RobotModel, RobotState
from ..wbc import ContactSpec, GainTable, TrackingObjective
from .fsm import Fsm, fsm_step, stance_legs_for
from .gait import foothold_target, gait_scheduler
from .trajectory import swing_foot_trajectory
from .types import (
    LEGS,
    MANIPULATION_MODES,
    SIDE_LEG,
    STAND_HEIGHT,
    WALKING_MODES,
    DesiredState,
    GaitState,
    OperationMode,
    UserCommand,
    hold_pose,
    leg_index,
)

SWING_HEIGHT = 0.06
SIT_SUPPORT = ("RR_heel", "RL_heel")

# conservative reach box for end-effector targets, torso frame; the
# workspace sampler can hand a tighter one to Commander
EEF_BOX = (np.array([-0.7, -0.6, -0.65]), np.array([0.7, 0.6, 0.6]))
TORSO_XY_RANGE = 0.25
TORSO_Z_RANGE = (0.1, 0.55)
TORSO_ROLL = 0.6
# nose-up (seated) postures are negative pitch
TORSO_PITCH = (-1.6, 0.7)


def _clamp_eef(pos, torso: FramePose, box) -> tuple[np.ndarray, bool]:
    local = torso.rot.T @ (np.asarray(pos, dtype=float) - torso.pos)
    clipped = np.clip(local, box[0], box[1])
    changed = bool(np.any(clipped != local))
    return torso.pos + torso.rot @ clipped, changed


def _clamp_torso(pos, rpy, center_xy) -> tuple[np.ndarray, np.ndarray, bool]:
    pos = np.asarray(pos, dtype=float).copy()
    rpy = np.asarray(rpy, dtype=float).copy()
    lo = np.array([center_xy[0] - TORSO_XY_RANGE,
                   center_xy[1] - TORSO_XY_RANGE, TORSO_Z_RANGE[0]])
    hi = np.array([center_xy[0] + TORSO_XY_RANGE,
                   center_xy[1] + TORSO_XY_RANGE, TORSO_Z_RANGE[1]])
    cp = np.clip(pos, lo, hi)
    crpy = rpy.copy()
    crpy[0] = np.clip(rpy[0], -TORSO_ROLL, TORSO_ROLL)
    crpy[1] = np.clip(rpy[1], TORSO_PITCH[0], TORSO_PITCH[1])
    changed = bool(np.any(cp != pos) or np.any(crpy != rpy))
    return cp, crpy, changed


def _ff6(value) -> np.ndarray:
    return np.zeros(6) if value is None else np.asarray(value, dtype=float).reshape(6)


def gait_flags(gait: GaitState):
    """Stance flags and swing phases at the gait's current phase."""
    local = (gait.phase - gait.offsets) % 1.0
    stance = local < gait.duty
    swing = np.where(stance, 0.0, (local - gait.duty) / gait.swing_duration)
    return stance, swing


def _torso_objectives(torso_des, vel_ff, acc_ff, gains: GainTable):
    kp, kd = gains.tracking_gains(soft_torso=True)
    return [
        TrackingObjective(
            priority=1, frame="torso", selector="position", x_des=torso_des,
            xd_des=vel_ff, xdd_des=acc_ff, kp_acc=kp, kd_acc=kd,
            name="Torso Position"),
        TrackingObjective(
            priority=2, frame="torso", selector="orientation", x_des=torso_des,
            xd_des=vel_ff, xdd_des=acc_ff, kp_acc=kp, kd_acc=kd,
            name="Torso Orientation"),
    ]


def _eef_pose(user: UserCommand, side: str, anchors, kin) -> FramePose:
    target = user.eef_targets.get(side)
    if target is not None:
        return target
    if anchors and side in anchors.get("eef", {}):
        return anchors["eef"][side]
    return kin.frame_pose(f"{side}_gripper")


def build_desired(model: RobotModel, gains: GainTable, mode: OperationMode,
                  user: UserCommand, robot: RobotState, gait: GaitState,
                  *, side: str | None = None, anchors: dict | None = None,
                  swing_plan: dict | None = None,
                  contact_override: ContactSpec | None = None,
                  stance_flags=None, swing_phase=None,
                  eef_box=EEF_BOX) -> DesiredState:
    reason = user.check(mode)
    if reason is not None:
        raise ValueError(reason)
    side = side or user.side
    kin = Kinematics(model, robot)
    mu = gains.friction_mu
    clamped = False

    if mode in MANIPULATION_MODES and mode is not OperationMode.BIMANUAL:
        torso_hold = (anchors or {}).get("torso") or hold_pose(
            kin.frame_pose("torso"))
        feet_xy = np.mean([kin.frame_pose(f"{leg}_foot").pos[:2]
                           for leg in LEGS], axis=0)
        if user.torso_pose_target is not None:
            pos, rpy, c = _clamp_torso(
                user.torso_pose_target[:3], user.torso_pose_target[3:], feet_xy)
            clamped |= c
            torso_des = FramePose(pos=pos, rot=m3.rpy_to_mat(rpy))
        else:
            torso_des = torso_hold
        objs = _torso_objectives(
            torso_des, _ff6(user.torso_vel_ff), _ff6(user.torso_acc_ff), gains)
        kp_e, kd_e = gains.tracking_gains()
        manip_leg = SIDE_LEG[side]
        stance = stance_legs_for(mode, side)

        if mode is OperationMode.SINGLE_FOOT:
            foot = user.eef_targets.get("foot")
            if foot is None:
                # standing variant: torso objectives over a full stance
                contact = contact_override or ContactSpec(
                    feet_in_contact=LEGS, friction_mu=mu)
                return DesiredState(objs, contact, user.gripper_opening, clamped)
            pos, c = _clamp_eef(foot, kin.frame_pose("torso"), eef_box)
            clamped |= c
            objs.append(TrackingObjective(
                priority=3, frame=f"{manip_leg}_foot", selector="position",
                x_des=FramePose(pos=pos, rot=np.eye(3)),
                xd_des=_ff6(user.eef_vel_ff.get("foot")),
                xdd_des=_ff6(user.eef_acc_ff.get("foot")),
                kp_acc=kp_e, kd_acc=kd_e, name="Foot_m Position"))
        else:
            target = _eef_pose(user, side, anchors, kin)
            pos, c = _clamp_eef(target.pos, kin.frame_pose("torso"), eef_box)
            clamped |= c
            pose = FramePose(pos=pos, rot=target.rot)
            vel = _ff6(user.eef_vel_ff.get(side))
            acc = _ff6(user.eef_acc_ff.get(side))
            frame = f"{side}_gripper"
            objs.append(TrackingObjective(
                priority=3, frame=frame, selector="position", x_des=pose,
                xd_des=vel, xdd_des=acc, kp_acc=kp_e, kd_acc=kd_e,
                name="Gripper_m Position"))
            objs.append(TrackingObjective(
                priority=4, frame=frame, selector="orientation", x_des=pose,
                xd_des=vel, xdd_des=acc, kp_acc=kp_e, kd_acc=kd_e,
                name="Gripper_m Orientation"))
        contact = contact_override or ContactSpec(
            feet_in_contact=stance, friction_mu=mu)
        return DesiredState(objs, contact, user.gripper_opening, clamped)

    if mode is OperationMode.BIMANUAL:
        kp_e, kd_e = gains.tracking_gains()
        torso = kin.frame_pose("torso")
        poses = []
        vels = np.zeros((2, 6))
        accs = np.zeros((2, 6))
        for i, s in enumerate(("left", "right")):
            target = _eef_pose(user, s, anchors, kin)
            pos, c = _clamp_eef(target.pos, torso, eef_box)
            clamped |= c
            poses.append(FramePose(pos=pos, rot=target.rot))
            vels[i] = _ff6(user.eef_vel_ff.get(s))
            accs[i] = _ff6(user.eef_acc_ff.get(s))
        frames = ("left_gripper", "right_gripper")
        objs = [
            TrackingObjective(
                priority=1, frame=frames, selector="position",
                x_des=tuple(poses), xd_des=vels, xdd_des=accs,
                kp_acc=kp_e, kd_acc=kd_e, name="Gripper_{l,r} Positions"),
            TrackingObjective(
                priority=2, frame=frames, selector="orientation",
                x_des=tuple(poses), xd_des=vels, xdd_des=accs,
                kp_acc=kp_e, kd_acc=kd_e, name="Gripper_{l,r} Orientations"),
        ]
        contact = contact_override or ContactSpec(
            feet_in_contact=("RR", "RL"), friction_mu=mu,
            extra_frames=SIT_SUPPORT)
        return DesiredState(objs, contact, user.gripper_opening, clamped)

    # walking modes
    twist = user.torso_twist if user.torso_twist is not None else np.zeros(3)
    rpy_cur = m3.quat_to_rpy(robot.base_quat)
    yaw = rpy_cur[2]
    v_world = m3.rpy_to_mat(np.array([0.0, 0.0, yaw])) @ np.array(
        [twist[0], twist[1], 0.0])
    kp_def = gains.track_kp_default
    kd_def = gains.track_kd_default
    torso = kin.frame_pose("torso")
    pose_vel = FramePose(
        pos=np.array([torso.pos[0], torso.pos[1], user.height]),
        rot=np.eye(3))
    vel1 = np.concatenate([v_world, np.zeros(3)])
    objs = [
        TrackingObjective(
            priority=1, frame="torso", selector="position", x_des=pose_vel,
            xd_des=vel1, xdd_des=np.zeros(6),
            kp_acc=np.array([0.0, 0.0, kp_def]), kd_acc=np.full(3, kd_def),
            name="Torso Velocity"),
        TrackingObjective(
            priority=2, frame="torso", selector="orientation",
            x_des=FramePose(
                pos=torso.pos,
                rot=m3.rpy_to_mat(np.array([user.roll, user.pitch, yaw]))),
            xd_des=np.array([0.0, 0.0, 0.0, 0.0, 0.0, twist[2]]),
            xdd_des=np.zeros(6),
            kp_acc=np.array([kp_def, kp_def, 0.0]), kd_acc=np.full(3, kd_def),
            name="Torso Orientation"),
    ]
    if stance_flags is None or swing_phase is None:
        stance_flags, swing_phase = gait_flags(gait)
    stance_flags = np.asarray(stance_flags, dtype=bool).reshape(4)
    swing_legs = [leg for i, leg in enumerate(LEGS) if not stance_flags[i]]
    priority = 3
    if swing_legs:
        phase_rate = gait.frequency / gait.swing_duration
        poses, vels, accs = [], [], []
        for leg in swing_legs:
            cur = kin.frame_pose(f"{leg}_foot").pos
            if swing_plan and leg in swing_plan:
                start, target = swing_plan[leg]
            else:
                hip = kin.body_p[model.link_index[f"{leg}_hip_link"]]
                start = cur
                target = foothold_target(v_world, gait, cur, hip,
                                         v_measured=robot.base_vel[:3],
                                         height=robot.base_pos[2])
            p, dv, da = swing_foot_trajectory(
                float(swing_phase[leg_index(leg)]), start, target, SWING_HEIGHT)
            poses.append(FramePose(pos=p, rot=np.eye(3)))
            vels.append(np.concatenate([dv * phase_rate, np.zeros(3)]))
            accs.append(np.concatenate([da * phase_rate ** 2, np.zeros(3)]))
        frames = tuple(f"{leg}_foot" for leg in swing_legs)
        objs.append(TrackingObjective(
            priority=priority, frame=frames, selector="position",
            x_des=tuple(poses), xd_des=np.array(vels), xdd_des=np.array(accs),
            kp_acc=np.full(3, kp_def), kd_acc=np.full(3, kd_def),
            name="Foot_s Positions"))
        priority += 1
    if mode is OperationMode.LOCOMANIPULATION:
        kp_e, kd_e = gains.tracking_gains()
        poses, vels, accs = [], [], []
        for i, s in enumerate(("left", "right")):
            target = _eef_pose(user, s, anchors, kin)
            poses.append(FramePose(pos=target.pos, rot=target.rot))
            vels.append(_ff6(user.eef_vel_ff.get(s)))
            accs.append(_ff6(user.eef_acc_ff.get(s)))
        objs.append(TrackingObjective(
            priority=priority, frame=("left_gripper", "right_gripper"),
            selector="orientation", x_des=tuple(poses),
            xd_des=np.array(vels), xdd_des=np.array(accs),
            kp_acc=kp_e, kd_acc=kd_e, name="Gripper_{l,r} Orientations"))
    stance = tuple(leg for i, leg in enumerate(LEGS) if stance_flags[i])
    contact = contact_override or ContactSpec(
        feet_in_contact=stance, friction_mu=mu)
    return DesiredState(objs, contact, user.gripper_opening, clamped)


class Commander:
    """Session-level command pipeline: FSM, gait clock, anchors.

    tick() runs one cycle and returns the DesiredState plus the joint
    gain set matching the effective mode and stance.
    """

    def __init__(self, model: RobotModel, gains: GainTable,
                 eef_box=None):
        self.model = model
        self.gains = gains
        self.fsm = Fsm(model)
        self.gait = GaitState()
        self.cycling = False
        self.anchors: dict = {}
        self.swing_plan: dict = {}
        self.stance_flags = np.ones(4, dtype=bool)
        self.eef_box = eef_box if eef_box is not None else EEF_BOX
        self.last_desired: DesiredState | None = None

    def _refresh_anchors(self, robot: RobotState):
        kin = Kinematics(self.model, robot)
        self.anchors = {
            "torso": hold_pose(kin.frame_pose("torso")),
            "eef": {s: hold_pose(kin.frame_pose(f"{s}_gripper"))
                    for s in ("left", "right")},
            "foot_home": {leg: kin.frame_pose(f"{leg}_foot").pos.copy()
                          for leg in LEGS},
        }

    def _plan_effective(self, plan, user: UserCommand, robot: RobotState):
        """Mode, command, and contact override while a transition runs."""
        step = plan.current
        if step is None or step.kind in ("halt", "settle", "engage"):
            cmd = replace(user, mode_request=None,
                          torso_twist=np.zeros(3), torso_pose_target=None)
            return OperationMode.LOCOMOTION, cmd, None
        kin = Kinematics(self.model, robot)
        rpy = m3.quat_to_rpy(robot.base_quat)
        if step.kind == "foot_down":
            leg = step.params["leg"]
            home = self.anchors.get("foot_home", {}).get(
                leg, kin.frame_pose(f"{leg}_foot").pos)
            side = "right" if leg == "FR" else "left"
            cmd = UserCommand(side=side, eef_targets={"foot": home})
            stance = tuple(l for l in LEGS if l != leg)
            override = ContactSpec(feet_in_contact=stance,
                                   friction_mu=self.gains.friction_mu)
            return OperationMode.SINGLE_FOOT, cmd, override
        if step.kind == "shift":
            pts = np.array([kin.frame_pose(f).pos[:2]
                            for f in step.params["support"]])
            center = pts.mean(axis=0)
            target = np.array([center[0], center[1], STAND_HEIGHT,
                               0.0, 0.0, rpy[2]])
            cmd = UserCommand(torso_pose_target=target)
            override = ContactSpec(feet_in_contact=LEGS,
                                   friction_mu=self.gains.friction_mu)
            return OperationMode.SINGLE_FOOT, cmd, override
        if step.kind == "sit_up":
            # nose-up keyframes: pitch walks down toward the (negative)
            # seated goal while the torso rises over the rear feet
            goal = step.params["pitch"]
            pitch = max(goal - 0.05, rpy[1] - 0.25)
            rear = np.array([kin.frame_pose(f"{leg}_foot").pos[:2]
                             for leg in ("RR", "RL")]).mean(axis=0)
            progress = min(1.0, max(0.0, rpy[1] / goal))
            height = STAND_HEIGHT + 0.10 * progress
            target = np.array([rear[0], rear[1], height, 0.0, pitch, rpy[2]])
            cmd = UserCommand(torso_pose_target=target)
            if rpy[1] < -0.35:
                override = ContactSpec(
                    feet_in_contact=("RR", "RL"),
                    friction_mu=self.gains.friction_mu,
                    extra_frames=SIT_SUPPORT)
            else:
                override = ContactSpec(feet_in_contact=LEGS,
                                       friction_mu=self.gains.friction_mu)
            return OperationMode.SINGLE_FOOT, cmd, override
        if step.kind == "stand_down":
            pitch = min(0.0, rpy[1] + 0.25)
            center = np.array([kin.frame_pose(f"{leg}_foot").pos[:2]
                               for leg in LEGS]).mean(axis=0)
            target = np.array([center[0], center[1], STAND_HEIGHT,
                               0.0, pitch, rpy[2]])
            cmd = UserCommand(torso_pose_target=target)
            if rpy[1] < -0.35:
                override = ContactSpec(
                    feet_in_contact=("RR", "RL"),
                    friction_mu=self.gains.friction_mu,
                    extra_frames=SIT_SUPPORT)
            else:
                override = ContactSpec(feet_in_contact=LEGS,
                                       friction_mu=self.gains.friction_mu)
            return OperationMode.SINGLE_FOOT, cmd, override
        raise ValueError(f"unknown plan step {step.kind!r}")

    def _advance_gait(self, walking: bool, twist, robot: RobotState, dt):
        want = walking and float(np.linalg.norm(twist)) > 1e-3
        if not want:
            self.cycling = False
            self.gait = replace(self.gait, phase=0.0)
            self.swing_plan.clear()
            return np.ones(4, dtype=bool), np.zeros(4)
        if not self.cycling:
            self.cycling = True
            self.gait = replace(self.gait, phase=0.0)
        self.gait, stance, swing = gait_scheduler(self.gait, dt)
        kin = Kinematics(self.model, robot)
        yaw = m3.quat_to_rpy(robot.base_quat)[2]
        v_world = m3.rpy_to_mat(np.array([0.0, 0.0, yaw])) @ np.array(
            [twist[0], twist[1], 0.0])
        for i, leg in enumerate(LEGS):
            if stance[i]:
                self.swing_plan.pop(leg, None)
                self.anchors.setdefault("foot_home", {})[leg] = (
                    kin.frame_pose(f"{leg}_foot").pos.copy())
            else:
                # target tracks the velocity error through the swing;
                # the start point stays anchored at the liftoff pose
                if leg in self.swing_plan:
                    start = self.swing_plan[leg][0]
                else:
                    start = kin.frame_pose(f"{leg}_foot").pos.copy()
                hip = kin.body_p[self.model.link_index[f"{leg}_hip_link"]]
                self.swing_plan[leg] = (
                    start, foothold_target(v_world, self.gait, start, hip,
                                           v_measured=robot.base_vel[:3],
                                           height=robot.base_pos[2]))
        return stance, swing

    def tick(self, user: UserCommand, robot: RobotState, contacts, dt: float):
        mode, plan = fsm_step(self.fsm, user, robot, contacts)
        if self.fsm.mode_changed or not self.anchors:
            self._refresh_anchors(robot)
        if plan is not None:
            eff_mode, eff_user, override = self._plan_effective(
                plan, user, robot)
        else:
            eff_mode, eff_user, override = mode, user, None
        walking = eff_mode in WALKING_MODES
        twist = (eff_user.torso_twist if eff_user.torso_twist is not None
                 else np.zeros(3))
        stance, swing = self._advance_gait(walking, twist, robot, dt)
        self.stance_flags = stance
        desired = build_desired(
            self.model, self.gains, eff_mode, eff_user, robot, self.gait,
            side=self.fsm.side, anchors=self.anchors,
            swing_plan=self.swing_plan, contact_override=override,
            stance_flags=stance, swing_phase=swing, eef_box=self.eef_box)
        self.last_desired = desired
        return desired, self.gains.resolve(eff_mode.value, stance)
