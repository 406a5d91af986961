"""Command-side data types: modes, user commands, gait and trajectories."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..model import FramePose
from ..wbc import ContactSpec, TrackingObjective

# default standing height used by spawn, gait, and torso defaults
STAND_HEIGHT = 0.32

LEGS = ("FR", "FL", "RR", "RL")


class OperationMode(str, Enum):
    SINGLE_FOOT = "single_foot"
    SINGLE_GRIPPER = "single_gripper"
    BIMANUAL = "bimanual"
    LOCOMOTION = "locomotion"
    LOCOMANIPULATION = "locomanipulation"


MANIPULATION_MODES = (
    OperationMode.SINGLE_FOOT,
    OperationMode.SINGLE_GRIPPER,
    OperationMode.BIMANUAL,
)
WALKING_MODES = (OperationMode.LOCOMOTION, OperationMode.LOCOMANIPULATION)

# objective rows per mode, in priority order; the builder must emit
# exactly these names
MODE_OBJECTIVES = {
    OperationMode.SINGLE_FOOT: (
        "Torso Position", "Torso Orientation", "Foot_m Position"),
    OperationMode.SINGLE_GRIPPER: (
        "Torso Position", "Torso Orientation",
        "Gripper_m Position", "Gripper_m Orientation"),
    OperationMode.BIMANUAL: (
        "Gripper_{l,r} Positions", "Gripper_{l,r} Orientations"),
    OperationMode.LOCOMOTION: (
        "Torso Velocity", "Torso Orientation", "Foot_s Positions"),
    OperationMode.LOCOMANIPULATION: (
        "Torso Velocity", "Torso Orientation", "Foot_s Positions",
        "Gripper_{l,r} Orientations"),
}

# arm side to the leg whose calf carries it
SIDE_LEG = {"right": "FR", "left": "FL"}


@dataclass
class UserCommand:
    """One teleop or script command frame.

    Manipulation modes use torso_pose_target and eef_targets; walking
    modes use torso_twist plus the posture fields. Optional feed-forward
    twists ride along for trajectory playback.
    """

    mode_request: OperationMode | None = None
    side: str = "right"
    torso_pose_target: np.ndarray | None = None   # xyz + rpy
    torso_vel_ff: np.ndarray | None = None        # 6
    torso_acc_ff: np.ndarray | None = None
    torso_twist: np.ndarray | None = None         # vx, vy, yaw rate
    roll: float = 0.0
    pitch: float = 0.0
    height: float = STAND_HEIGHT
    eef_targets: dict = field(default_factory=dict)  # side -> FramePose, "foot" -> 3-vec
    eef_vel_ff: dict = field(default_factory=dict)   # side -> 6-vector
    eef_acc_ff: dict = field(default_factory=dict)
    gripper_opening: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        if self.side not in SIDE_LEG:
            raise ValueError(f"side must be left or right, got {self.side!r}")
        self.gripper_opening = np.clip(
            np.asarray(self.gripper_opening, dtype=float).reshape(2), 0.0, 1.0)
        if self.torso_pose_target is not None:
            self.torso_pose_target = np.asarray(
                self.torso_pose_target, dtype=float).reshape(6)
        if self.torso_twist is not None:
            self.torso_twist = np.asarray(
                self.torso_twist, dtype=float).reshape(3)

    def check(self, mode: OperationMode) -> str | None:
        """Reason the command is inconsistent with the mode, else None."""
        if mode in MANIPULATION_MODES and self.torso_twist is not None:
            if np.any(self.torso_twist != 0.0):
                return "twist commands are not valid in manipulation modes"
        if mode in WALKING_MODES and self.torso_pose_target is not None:
            return "torso pose targets are not valid in walking modes"
        if mode is not OperationMode.SINGLE_FOOT and "foot" in self.eef_targets:
            return "foot targets only apply to single-foot manipulation"
        return None


@dataclass
class DesiredState:
    """Standardized command for one control tick."""

    objectives: list
    contact: ContactSpec
    gripper_openings: np.ndarray
    clamped: bool = False  # a target was pulled back inside the reach box

    def __post_init__(self):
        self.gripper_openings = np.asarray(
            self.gripper_openings, dtype=float).reshape(2)
        for obj in self.objectives:
            if not isinstance(obj, TrackingObjective):
                raise TypeError("objectives must be TrackingObjective")


@dataclass
class GaitState:
    """Trot phase generator state.

    offsets holds each foot's phase shift within the cycle; diagonal
    pairs share an offset so they swing together.
    """

    phase: float = 0.0
    frequency: float = 2.0
    swing_duration: float = 0.5
    offsets: np.ndarray = field(
        default_factory=lambda: np.array([0.0, 0.5, 0.5, 0.0]))

    def __post_init__(self):
        self.offsets = np.asarray(self.offsets, dtype=float).reshape(4)
        if not 0.0 <= self.phase < 1.0:
            raise ValueError("phase must be in [0, 1)")
        if self.frequency < 0.0:
            raise ValueError("frequency must be >= 0")
        if not 0.0 < self.swing_duration <= 0.5:
            raise ValueError(
                "swing_duration must be in (0, 0.5]; longer swings leave "
                "fewer than two feet in stance")
        if self.offsets[0] != self.offsets[3] or self.offsets[1] != self.offsets[2]:
            raise ValueError("diagonal pairs must share a phase offset")
        if abs(abs(self.offsets[0] - self.offsets[1]) - 0.5) > 1e-12:
            raise ValueError("diagonal pairs must alternate half a cycle apart")

    @property
    def duty(self) -> float:
        return 1.0 - self.swing_duration


@dataclass
class Trajectory:
    """Sampled pose trajectory: (t, FramePose, twist, acceleration)."""

    samples: list
    rate: float

    def __post_init__(self):
        times = [s[0] for s in self.samples]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("sample times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return float(self.samples[-1][0]) if self.samples else 0.0


@dataclass
class PlanStep:
    """One stage of a mode transition."""

    kind: str
    params: dict = field(default_factory=dict)


@dataclass
class TransitionPlan:
    """Ordered steps carrying the robot from one mode to another."""

    target_mode: OperationMode
    steps: tuple
    index: int = 0

    @property
    def current(self) -> PlanStep | None:
        return self.steps[self.index] if self.index < len(self.steps) else None

    @property
    def done(self) -> bool:
        return self.index >= len(self.steps)


def leg_index(leg: str) -> int:
    return LEGS.index(leg)


def objective_names(desired: DesiredState) -> tuple:
    return tuple(obj.name for obj in desired.objectives)


def hold_pose(pose: FramePose) -> FramePose:
    return FramePose(pos=pose.pos.copy(), rot=pose.rot.copy())
