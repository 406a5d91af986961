"""Controller-facing data types and the gain table loader."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

import numpy as np
import yaml

from ..model import FramePose

MODE_NAMES = (
    "single_foot",
    "single_gripper",
    "bimanual",
    "locomotion",
    "locomanipulation",
)

SELECTORS = ("position", "orientation", "pose")


@dataclass
class TrackingObjective:
    """One priority level of the tracking hierarchy.

    frame may name several frames; their rows stack within the level.
    """

    priority: int
    frame: str | tuple[str, ...]
    selector: str
    x_des: FramePose | tuple[FramePose, ...]
    xd_des: np.ndarray
    xdd_des: np.ndarray
    kp_acc: np.ndarray
    kd_acc: np.ndarray
    name: str = ""

    def __post_init__(self):
        if self.priority < 1:
            raise ValueError(f"priority must be >= 1, got {self.priority}")
        if self.selector not in SELECTORS:
            raise ValueError(f"unknown selector {self.selector!r}")
        # targets are one 6-vector shared by every frame of the level, or
        # one row per frame
        self.xd_des = np.asarray(self.xd_des, dtype=float)
        self.xdd_des = np.asarray(self.xdd_des, dtype=float)
        self.kp_acc = np.asarray(self.kp_acc, dtype=float).reshape(-1)
        self.kd_acc = np.asarray(self.kd_acc, dtype=float).reshape(-1)
        if np.any(self.kp_acc < 0) or np.any(self.kd_acc < 0):
            raise ValueError("gains must be nonnegative")

    @property
    def frames(self) -> tuple[str, ...]:
        return (self.frame,) if isinstance(self.frame, str) else tuple(self.frame)

    @property
    def poses(self) -> tuple[FramePose, ...]:
        if isinstance(self.x_des, FramePose):
            return (self.x_des,)
        return tuple(self.x_des)

    def vel_des(self, i: int) -> np.ndarray:
        return self.xd_des if self.xd_des.ndim == 1 else self.xd_des[i]

    def acc_des(self, i: int) -> np.ndarray:
        return self.xdd_des if self.xdd_des.ndim == 1 else self.xdd_des[i]


@dataclass
class ContactSpec:
    """Which feet carry the robot, plus friction parameters.

    extra_frames lists additional pinned contact frames (the rear-calf
    heel pads used while sitting); they contribute rows to the contact
    jacobian exactly like feet.
    """

    feet_in_contact: tuple[str, ...]
    friction_mu: float = 0.5
    fz_max: float = np.inf
    extra_frames: tuple[str, ...] = ()

    def __post_init__(self):
        self.feet_in_contact = tuple(self.feet_in_contact)
        self.extra_frames = tuple(self.extra_frames)
        for leg in self.feet_in_contact:
            if leg not in ("FR", "FL", "RR", "RL"):
                raise ValueError(f"unknown leg {leg!r}")
        if self.friction_mu < 0.0:
            raise ValueError("friction_mu must be >= 0")
        if self.fz_max <= 0.0:
            raise ValueError("fz_max must be > 0")

    @property
    def frames(self) -> tuple[str, ...]:
        return tuple(f"{leg}_foot" for leg in self.feet_in_contact) + self.extra_frames

    @property
    def count(self) -> int:
        return len(self.feet_in_contact) + len(self.extra_frames)


class QpInfeasible(RuntimeError):
    """Raised when the reaction-force problem has no admissible solution."""


@dataclass
class WbcCommand:
    """Per-tick output of the whole-body controller."""

    q_des: np.ndarray           # 18 joint position targets, limit-clamped
    qd_des: np.ndarray          # 18 joint velocity targets
    tau_ff: np.ndarray          # 18 feed-forward torques
    f_r: np.ndarray             # (n_contacts, 3) reaction forces
    delta_t: np.ndarray         # 6 torso acceleration relaxation
    tau_torso_residual: np.ndarray  # 6, diagnostic only, ~0 when QP feasible
    clamped: bool = False       # q_des hit a joint limit
    diagnostics: dict = field(default_factory=dict)


@dataclass
class GainSet:
    """Joint-space PD gains resolved for one tick: 18 kp and 18 kd."""

    kp: np.ndarray
    kd: np.ndarray


class GainTable:
    """Mode- and phase-keyed joint gains plus tracking gain defaults.

    Legs use the (mode, stance|swing) table; manipulator joints always
    use the servo emulation gains.
    """

    def __init__(self, raw: dict):
        self.joint_pd = {}
        for mode, phases in raw["joint_pd"].items():
            if mode not in MODE_NAMES:
                raise ValueError(f"unknown mode {mode!r} in gain table")
            for phase in ("stance", "swing"):
                entry = phases[phase]
                kp = np.asarray(entry["kp"], dtype=float)
                kd = np.asarray(entry["kd"], dtype=float)
                if kp.shape != (3,) or kd.shape != (3,):
                    raise ValueError("leg gains must be per joint triples")
                self.joint_pd[(mode, phase)] = (kp, kd)
        for mode in MODE_NAMES:
            for phase in ("stance", "swing"):
                if (mode, phase) not in self.joint_pd:
                    raise ValueError(f"gain table missing ({mode}, {phase})")
        servo = raw["arm_servo"]
        self.arm_kp = np.asarray(servo["kp"], dtype=float)
        self.arm_kd = np.asarray(servo["kd"], dtype=float)
        track = raw["tracking"]
        self.track_kp_default = float(track["kp_default"])
        self.track_kd_default = float(track["kd_default"])
        self.track_kd_soft = float(track["kd_torso_manipulation"])
        qp = raw["qp"]
        self.q1 = float(qp["q1"])
        self.q2 = float(qp["q2"])
        self.friction_mu = float(qp["friction_mu"])

    def resolve(self, mode: str, leg_stance: np.ndarray) -> GainSet:
        """Per-joint gains for one tick given the four leg contact flags."""
        if mode not in MODE_NAMES:
            raise ValueError(f"unknown mode {mode!r}")
        kp = np.empty(18)
        kd = np.empty(18)
        for leg in range(4):
            phase = "stance" if leg_stance[leg] else "swing"
            kp3, kd3 = self.joint_pd[(mode, phase)]
            kp[3 * leg:3 * leg + 3] = kp3
            kd[3 * leg:3 * leg + 3] = kd3
        kp[12:15] = kp[15:18] = self.arm_kp
        kd[12:15] = kd[15:18] = self.arm_kd
        return GainSet(kp=kp, kd=kd)

    def tracking_gains(self, soft_torso: bool = False) -> tuple[np.ndarray, np.ndarray]:
        kp = np.full(3, self.track_kp_default)
        kd = np.full(3, self.track_kd_soft if soft_torso else self.track_kd_default)
        return kp, kd


def default_gains_path() -> str:
    return str(resources.files("quadwbc").joinpath("data/gains.yaml"))


def load_gain_table(path: str | None = None) -> GainTable:
    with open(path or default_gains_path()) as fh:
        return GainTable(yaml.safe_load(fh))
