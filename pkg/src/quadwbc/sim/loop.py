"""Closed-loop runner: commander + whole-body controller + simulation.

The plant steps at the simulation rate (2000 Hz default) while the
controller recomputes every wbc_every steps (400 Hz), with the joint PD
tracking the last command in between. State estimators run in shadow
mode on the simulated sensors and are logged next to ground truth; the
controller itself consumes the true state, so estimator quality is
measured without feeding its errors back into the plant.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .. import math3d as m3
from ..commander import Commander
from ..estimator import (
    ESTIMATOR_BY_MODE,
    kf_reset,
    kf_step,
    kinematic_estimate,
    reset_kinematic_estimator,
)
from ..model import Kinematics, RobotModel, RobotState
from ..wbc import GainTable, QpInfeasible, QpWarmStart, WbcCommand, joint_pd, wbc_step
from .core import ContactAnchors, SimConfig, sim_step

# arms ride folded against the shank so the grippers clear the ground
CROUCH_Q = np.array([0.0, 0.9, -1.8] * 4 + [-1.9, 0.0, 0.0] * 2)
INFEASIBLE_HOLD_TICKS = 10  # controller ticks to reuse the last command

_SCALARS = ("t", "qp_ok")
_VECTORS = (
    ("base_pos", 3), ("base_rpy", 3), ("base_vel", 6),
    ("q", 18), ("qd", 18), ("tau", 18),
    ("foot_force", 12), ("contact", 4),
    ("gripper_l", 6), ("gripper_r", 6),
    ("est_pos", 3), ("est_rpy", 3), ("est_vel", 3),
)


class LoopLog:
    """Per-tick record accumulator with CSV and npz serialization."""

    def __init__(self):
        self.mode: list[str] = []
        self.rows: list[np.ndarray] = []

    def add(self, mode: str, values: np.ndarray):
        self.mode.append(mode)
        self.rows.append(values)

    def __len__(self):
        return len(self.rows)

    def array(self) -> np.ndarray:
        return np.array(self.rows) if self.rows else np.zeros((0, self.width))

    def column(self, name: str) -> np.ndarray:
        """All rows of one named field, scalar -> (n,), vector -> (n, k)."""
        data = self.array()
        off = 0
        for s in _SCALARS:
            if s == name:
                return data[:, off]
            off += 1
        for vec, k in _VECTORS:
            if vec == name:
                return data[:, off:off + k]
            off += k
        raise KeyError(name)

    @property
    def width(self) -> int:
        return len(_SCALARS) + sum(k for _, k in _VECTORS)

    @property
    def header(self) -> list[str]:
        cols = list(_SCALARS)
        for name, k in _VECTORS:
            cols += [f"{name}_{i}" for i in range(k)]
        return cols

    def save_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["mode"] + self.header)
            for mode, row in zip(self.mode, self.rows):
                w.writerow([mode] + [repr(float(v)) for v in row])

    def save_npz(self, path):
        np.savez_compressed(
            path, data=self.array(), mode=np.array(self.mode),
            header=np.array(self.header))

    @classmethod
    def load_npz(cls, path) -> "LoopLog":
        raw = np.load(path, allow_pickle=False)
        log = cls()
        log.mode = [str(s) for s in raw["mode"]]
        log.rows = [row for row in raw["data"]]
        return log


@dataclass
class LoopResult:
    state: RobotState
    log: LoopLog
    commander: Commander
    infeasible_ticks: int = 0


def crouch_state(model: RobotModel, base_xy=(0.0, 0.0),
                 preload: float = 0.0) -> RobotState:
    """Nominal crouch with the lowest foot on the floor.

    preload sinks the feet by that many metres so a penalty ground
    carries weight from the first step.
    """
    probe = RobotState(base_pos=np.zeros(3),
                       base_quat=np.array([1.0, 0.0, 0.0, 0.0]),
                       q_joints=CROUCH_Q.copy(),
                       base_vel=np.zeros(6), qd_joints=np.zeros(18))
    kin = Kinematics(model, probe)
    lowest = min(kin.frame_pose(f"{leg}_foot").pos[2]
                 for leg in ("FR", "FL", "RR", "RL"))
    base = np.array([base_xy[0], base_xy[1], -lowest - preload])
    return RobotState(base_pos=base,
                      base_quat=np.array([1.0, 0.0, 0.0, 0.0]),
                      q_joints=CROUCH_Q.copy(),
                      base_vel=np.zeros(6), qd_joints=np.zeros(18))


def settle_state(model: RobotModel, cfg: SimConfig | None = None,
                 duration: float = 2.0, gains: GainTable | None = None
                 ) -> RobotState:
    """Crouch dropped onto the ground and held by a joint PD until quiet.

    Leg joints hold at stiff stance gains; arm joints must use the servo
    emulation gains since their reflected inertia is far too small for
    leg-scale damping at this step size.
    """
    from ..wbc import default_gains_path, load_gain_table

    cfg = cfg or SimConfig()
    gains = gains or load_gain_table(default_gains_path())
    mg = float(model.body_mass.sum()) * 9.81
    state = crouch_state(model, preload=mg / (4.0 * cfg.contact_kn))
    kp_v = np.full(18, 60.0)
    kd_v = np.full(18, 2.0)
    kp_v[12:15] = kp_v[15:18] = gains.arm_kp
    kd_v[12:15] = kd_v[15:18] = gains.arm_kd
    anchors = ContactAnchors()
    for _ in range(round(duration / cfg.dt)):
        tau = kp_v * (CROUCH_Q - state.q_joints) - kd_v * state.qd_joints
        state, _ = sim_step(model, state, tau, cfg, anchors=anchors)
    return state


def _hold_command(state: RobotState) -> WbcCommand:
    """Damping-only fallback after sustained controller infeasibility."""
    return WbcCommand(q_des=state.q_joints.copy(), qd_des=np.zeros(18),
                      tau_ff=np.zeros(18), f_r=np.zeros((0, 3)),
                      delta_t=np.zeros(6), tau_torso_residual=np.zeros(6))


def run_loop(model: RobotModel, gains: GainTable, command_fn, duration: float,
             *, sim_cfg: SimConfig | None = None,
             initial_state: RobotState | None = None,
             commander: Commander | None = None,
             wbc_every: int = 5, log_every: int = 5,
             noisy: bool = False) -> LoopResult:
    """Run the closed loop for duration seconds and return state + log.

    command_fn maps time in seconds to a UserCommand. Identical inputs
    produce bit-identical logs; sensor noise only enters when noisy is
    set and draws from a generator seeded by sim_cfg.seed.
    """
    cfg = sim_cfg or SimConfig()
    state = initial_state if initial_state is not None else settle_state(model, cfg)
    commander = commander or Commander(model, gains)
    rng = np.random.default_rng(cfg.seed) if noisy else None
    warm = QpWarmStart()
    anchors = ContactAnchors()
    log = LoopLog()
    wbc_dt = cfg.dt * wbc_every

    contacts = np.ones(4, dtype=bool)
    sensors = None
    cmd: WbcCommand | None = None
    gainset = None
    hold = 0
    infeasible_total = 0
    kf = kf_reset(model, state.q_joints, state.base_quat, state.base_pos)
    anchor = None
    est_pos = np.full(3, np.nan)
    est_rpy = np.full(3, np.nan)
    est_vel = np.full(3, np.nan)
    qp_ok = 1.0

    n = round(duration / cfg.dt)
    for k in range(n):
        t = k * cfg.dt
        if k % wbc_every == 0:
            user = command_fn(t)
            desired, gainset = commander.tick(user, state, contacts, wbc_dt)
            try:
                cmd = wbc_step(model, state, desired, gains, warm_start=warm)
                hold = 0
                qp_ok = 1.0
            except QpInfeasible:
                infeasible_total += 1
                hold += 1
                qp_ok = 0.0
                if cmd is None or hold > INFEASIBLE_HOLD_TICKS:
                    cmd = _hold_command(state)
            if sensors is not None:
                mode = commander.fsm.mode
                if ESTIMATOR_BY_MODE[mode] == "kinematic":
                    if anchor is None or commander.fsm.mode_changed:
                        anchor = reset_kinematic_estimator(
                            model, sensors.q, contacts, rate=1.0 / wbc_dt,
                            qd_j=sensors.qd)
                    est = kinematic_estimate(anchor, sensors.q, sensors.qd)
                    est_pos = est.pose.pos
                    est_rpy = m3.mat_to_rpy(est.pose.rot)
                    est_vel = est.twist[:3]
                else:
                    anchor = None
                    kf = kf_step(kf, sensors.imu, sensors.q, sensors.qd,
                                 contacts, wbc_dt, model)
                    est_pos = kf.pos
                    est_rpy = m3.quat_to_rpy(sensors.imu.orientation)
                    est_vel = kf.vel

        tau = joint_pd(cmd, state.q_joints, state.qd_joints, gainset,
                       effort_limit=model.joint_effort)
        state, sensors = sim_step(model, state, tau, cfg, rng=rng,
                                  anchors=anchors)
        contacts = sensors.contacts

        if k % log_every == 0:
            kin = Kinematics(model, state)
            gl = kin.frame_pose("left_gripper")
            gr = kin.frame_pose("right_gripper")
            row = np.concatenate([
                [t + cfg.dt, qp_ok],
                state.base_pos, m3.quat_to_rpy(state.base_quat),
                state.base_vel, state.q_joints, state.qd_joints, tau,
                sensors.foot_forces.ravel(),
                sensors.contacts.astype(float),
                gl.pos, m3.mat_to_rpy(gl.rot),
                gr.pos, m3.mat_to_rpy(gr.rot),
                est_pos, est_rpy, est_vel,
            ])
            log.add(commander.fsm.mode.value, row)

    return LoopResult(state=state, log=log, commander=commander,
                      infeasible_ticks=infeasible_total)
