"""Trot scheduling and foothold selection."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .types import GaitState


def gait_scheduler(gait: GaitState, dt: float):
    """Advance the gait clock one step.

    Returns (new gait state, per-foot stance flags, per-foot swing
    phase). Swing phase is 0 while a foot is in stance and runs 0 to 1
    across its swing window.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    phase = (gait.phase + gait.frequency * dt) % 1.0
    local = (phase - gait.offsets) % 1.0
    stance = local < gait.duty
    swing_phase = np.where(
        stance, 0.0, (local - gait.duty) / gait.swing_duration)
    return replace(gait, phase=phase), stance, swing_phase


def foothold_target(torso_twist_cmd, gait: GaitState, current_foot,
                    hip_position, v_measured=None,
                    height: float | None = None) -> np.ndarray:
    """Touchdown point for a swing foot.

    Raibert heuristic: the hip's ground projection plus half a stance
    period of commanded travel. When the measured torso velocity is
    supplied, the travel term uses it and a capture-point correction
    sqrt(h/g) * (v_measured - v_cmd) leans the touchdown into any
    velocity error; without it placement is purely feed-forward.
    """
    twist = np.asarray(torso_twist_cmd, dtype=float)
    foot = np.asarray(current_foot, dtype=float)
    hip = np.asarray(hip_position, dtype=float)
    t_stance = gait.duty / gait.frequency if gait.frequency > 0.0 else 0.0
    target = np.empty(3)
    if v_measured is None:
        target[:2] = hip[:2] + 0.5 * t_stance * twist[:2]
    else:
        v = np.asarray(v_measured, dtype=float)
        h = hip[2] if height is None else height
        k_cap = np.sqrt(max(h, 0.0) / 9.81)
        target[:2] = (hip[:2] + 0.5 * t_stance * v[:2]
                      + k_cap * (v[:2] - twist[:2]))
    target[2] = foot[2]
    return target
