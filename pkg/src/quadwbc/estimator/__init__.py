"""State estimation: stance-anchored kinematics and locomotion KF."""

from ..commander import OperationMode
from .kalman import (
    GRAVITY,
    ImuSample,
    KfParams,
    KfState,
    kf_reset,
    kf_step,
    load_kf_params,
)
from .kinematic import (
    SLIP_THRESHOLD,
    KinematicAnchor,
    KinematicEstimate,
    kinematic_estimate,
    procrustes,
    reset_kinematic_estimator,
)

# which estimator serves each operation mode
ESTIMATOR_BY_MODE = {
    OperationMode.SINGLE_FOOT: "kinematic",
    OperationMode.SINGLE_GRIPPER: "kinematic",
    OperationMode.BIMANUAL: "kinematic",
    OperationMode.LOCOMOTION: "kalman",
    OperationMode.LOCOMANIPULATION: "kalman",
}

__all__ = [
    "GRAVITY",
    "ImuSample",
    "KfParams",
    "KfState",
    "kf_reset",
    "kf_step",
    "load_kf_params",
    "SLIP_THRESHOLD",
    "KinematicAnchor",
    "KinematicEstimate",
    "kinematic_estimate",
    "procrustes",
    "reset_kinematic_estimator",
    "ESTIMATOR_BY_MODE",
]
