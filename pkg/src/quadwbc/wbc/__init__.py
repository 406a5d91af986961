"""Whole-body controller: hierarchical tracking, reaction QP, torques."""

from .pinv import svd_pinv, dyn_pinv, inv_sqrt_spd, weighted_pinv
from .types import (
    TrackingObjective,
    ContactSpec,
    WbcCommand,
    QpInfeasible,
    GainSet,
    GainTable,
    default_gains_path,
    load_gain_table,
)
from .hierarchy import (
    acceleration_command,
    contact_jacobian,
    solve_kinematic_hierarchy,
    solve_dynamic_hierarchy,
)
from .qp import QpWarmStart, solve_reaction_qp
from .controller import compute_torques, joint_pd, wbc_step

__all__ = [
    "svd_pinv",
    "dyn_pinv",
    "inv_sqrt_spd",
    "weighted_pinv",
    "TrackingObjective",
    "ContactSpec",
    "WbcCommand",
    "QpInfeasible",
    "GainSet",
    "GainTable",
    "default_gains_path",
    "load_gain_table",
    "acceleration_command",
    "contact_jacobian",
    "solve_kinematic_hierarchy",
    "solve_dynamic_hierarchy",
    "QpWarmStart",
    "solve_reaction_qp",
    "compute_torques",
    "joint_pd",
    "wbc_step",
]
