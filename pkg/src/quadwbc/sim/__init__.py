"""Rigid-body simulation with penalty ground contact and a closed-loop runner."""

from .core import (
    CONTACT_FORCE_THRESHOLD,
    CONTACT_FRAMES,
    ContactAnchors,
    SensorReadings,
    SimConfig,
    SimDivergence,
    contact_forces,
    forward_dynamics,
    sim_step,
)
from .loop import (
    CROUCH_Q,
    INFEASIBLE_HOLD_TICKS,
    LoopLog,
    LoopResult,
    crouch_state,
    run_loop,
    settle_state,
)

__all__ = [
    "CONTACT_FORCE_THRESHOLD",
    "CONTACT_FRAMES",
    "ContactAnchors",
    "SensorReadings",
    "SimConfig",
    "SimDivergence",
    "contact_forces",
    "forward_dynamics",
    "sim_step",
    "CROUCH_Q",
    "INFEASIBLE_HOLD_TICKS",
    "LoopLog",
    "LoopResult",
    "crouch_state",
    "run_loop",
    "settle_state",
]
