"""Torque synthesis and the per-tick controller entry point."""

from __future__ import annotations

import numpy as np

from ..model import Kinematics, RobotModel, RobotState
from .hierarchy import (
    contact_jacobian,
    solve_dynamic_hierarchy,
    solve_kinematic_hierarchy,
)
from .qp import QpWarmStart, solve_reaction_qp
from .types import GainSet, GainTable, WbcCommand


def compute_torques(A, b, g, J_c, qdd_cmd, f_r) -> tuple[np.ndarray, np.ndarray]:
    """Generalized forces for a commanded acceleration under contact.

    Returns (floating-base residual, joint torques).  The residual is
    unactuated and stays at numerical zero whenever f_r came from a
    feasible reaction solve; it is surfaced for monitoring rather than
    silently dropped.
    """
    f = np.asarray(f_r).reshape(-1)
    tau = A @ qdd_cmd + b + g
    if f.size:
        tau = tau - J_c.T @ f
    return tau[:6], tau[6:]


def joint_pd(cmd: WbcCommand, q_j, qd_j, gains: GainSet,
             effort_limit: np.ndarray | None = None) -> np.ndarray:
    """High-rate joint servo layered on top of the feed-forward torque.

    Leg gains come from the (mode, stance/swing) table; manipulator
    joints run their servo emulation gains.  Torques saturate at the
    model effort limits when provided, with the event flagged in the
    command diagnostics.
    """
    tau = cmd.tau_ff + gains.kp * (cmd.q_des - q_j) + gains.kd * (cmd.qd_des - qd_j)
    if effort_limit is not None:
        clipped = np.clip(tau, -effort_limit, effort_limit)
        if np.any(clipped != tau):
            cmd.diagnostics["torque_saturated"] = True
            tau = clipped
    return tau


def wbc_step(model: RobotModel, state_est: RobotState, desired,
             gains: GainTable, weights: tuple | None = None,
             warm_start: QpWarmStart | None = None) -> WbcCommand:
    """One whole-body control tick.

    desired supplies .objectives (the mode's priority list) and .contact.
    Pure function of its arguments plus the warm-start handle; raises
    QpInfeasible for the caller to hold or damp the previous command.
    """
    objectives = desired.objectives
    contact = desired.contact
    kin = Kinematics(model, state_est)
    A = kin.mass_matrix()
    b, g = kin.bias_forces()

    kin_diag: dict = {}
    q_des, qd_des = solve_kinematic_hierarchy(
        model, state_est, objectives, contact, diagnostics=kin_diag, kin=kin)
    qdd_des = solve_dynamic_hierarchy(
        model, state_est, objectives, contact, kin=kin, A=A)

    diagnostics: dict = {"clamped": kin_diag.get("clamped", False)}
    J_c = contact_jacobian(kin, contact)
    q1, q2 = weights if weights is not None else (gains.q1, gains.q2)
    f_r, delta_t = solve_reaction_qp(
        A, b, g, J_c, qdd_des, q1, q2, contact,
        warm_start=warm_start, diagnostics=diagnostics)
    qdd_cmd = qdd_des.copy()
    qdd_cmd[:6] += delta_t
    tau_torso, tau_j = compute_torques(A, b, g, J_c, qdd_cmd, f_r)
    diagnostics["torso_residual"] = float(np.abs(tau_torso).max(initial=0.0))
    return WbcCommand(
        q_des=q_des[6:],
        qd_des=qd_des[6:],
        tau_ff=tau_j,
        f_r=f_r,
        delta_t=delta_t,
        tau_torso_residual=tau_torso,
        clamped=diagnostics["clamped"],
        diagnostics=diagnostics,
    )
