"""Pose trajectory generation and the swing-foot curve.

Position runs a cubic ease curve per waypoint segment; orientation
follows the geodesic between the segment endpoints with the same cubic
time warp, so velocity vanishes at every join and the sampled path is C1
throughout.
"""

from __future__ import annotations

import numpy as np

from .. import math3d as m3
from ..model import FramePose
from .types import Trajectory


def _warp(s: float) -> tuple[float, float, float]:
    # cubic Bezier with both inner control points at the endpoints
    return (s * s * (3.0 - 2.0 * s), 6.0 * s * (1.0 - s), 6.0 - 12.0 * s)


def _eval_segment(pa: FramePose, pb: FramePose, phi: np.ndarray, s: float,
                  t_seg: float):
    if s <= 0.0:
        return (FramePose(pa.pos.copy(), pa.rot.copy()),
                np.zeros(6), _accel(pa, pb, phi, 0.0, t_seg))
    if s >= 1.0:
        return (FramePose(pb.pos.copy(), pb.rot.copy()),
                np.zeros(6), _accel(pa, pb, phi, 1.0, t_seg))
    w, wd, wdd = _warp(s)
    pos = pa.pos + (pb.pos - pa.pos) * w
    rot = pa.rot @ m3.mat_from_rotvec(phi * w)
    # the geodesic axis is fixed in both end frames, so the world rate is
    # the start frame's image of it
    axis = pa.rot @ phi
    vel = np.concatenate([(pb.pos - pa.pos) * wd / t_seg,
                          axis * (wd / t_seg)])
    acc = np.concatenate([(pb.pos - pa.pos) * wdd / t_seg ** 2,
                          axis * (wdd / t_seg ** 2)])
    return FramePose(pos, rot), vel, acc


def _accel(pa, pb, phi, s, t_seg):
    wdd = _warp(s)[2]
    axis = pa.rot @ phi
    return np.concatenate([(pb.pos - pa.pos) * wdd / t_seg ** 2,
                           axis * (wdd / t_seg ** 2)])


def bezier_trajectory(waypoints, duration: float, rate: float) -> Trajectory:
    """Sample a piecewise cubic pose path through the waypoints.

    Samples span [0, duration] inclusive; the count is duration*rate.
    """
    if len(waypoints) < 2:
        raise ValueError("need at least two waypoints")
    if duration <= 0.0 or rate <= 0.0:
        raise ValueError("duration and rate must be positive")
    n = int(round(duration * rate))
    if n < 2:
        raise ValueError("duration*rate must give at least two samples")
    m = len(waypoints) - 1
    t_seg = duration / m
    phis = [m3.log_so3(waypoints[i].rot.T @ waypoints[i + 1].rot)
            for i in range(m)]
    samples = []
    for k in range(n):
        t = duration * k / (n - 1)
        i = min(int(t / t_seg), m - 1)
        s = t / t_seg - i
        pose, vel, acc = _eval_segment(
            waypoints[i], waypoints[i + 1], phis[i], s, t_seg)
        samples.append((t, pose, vel, acc))
    return Trajectory(samples=samples, rate=rate)


def evaluate_path(waypoints, duration: float, t: float):
    """Pose, twist, and acceleration of the same path at an arbitrary t."""
    m = len(waypoints) - 1
    t_seg = duration / m
    t = min(max(t, 0.0), duration)
    i = min(int(t / t_seg), m - 1)
    phi = m3.log_so3(waypoints[i].rot.T @ waypoints[i + 1].rot)
    return _eval_segment(waypoints[i], waypoints[i + 1], phi,
                         t / t_seg - i, t_seg)


def _ease(u: float) -> tuple[float, float, float]:
    # half-cosine rise with zero end slopes
    c = 0.5 * (1.0 - np.cos(np.pi * u))
    cd = 0.5 * np.pi * np.sin(np.pi * u)
    cdd = 0.5 * np.pi ** 2 * np.cos(np.pi * u)
    return c, cd, cdd


def swing_foot_trajectory(phase: float, start, target, height: float):
    """Lift-swing-touchdown curve for one swing period.

    phase runs 0 to 1 over the swing. Horizontal motion follows a
    cycloid, the vertical profile rises to exactly
    max(start_z, target_z) + height at mid-swing and descends to the
    target. Derivatives are with respect to phase; scale by the phase
    rate for time derivatives.
    """
    if not 0.0 <= phase <= 1.0:
        raise ValueError("phase must be within [0, 1]")
    start = np.asarray(start, dtype=float)
    target = np.asarray(target, dtype=float)
    two_pi = 2.0 * np.pi
    s = phase - np.sin(two_pi * phase) / two_pi
    sd = 1.0 - np.cos(two_pi * phase)
    sdd = two_pi * np.sin(two_pi * phase)
    pos = start + (target - start) * s
    vel = (target - start) * sd
    acc = (target - start) * sdd
    apex = max(start[2], target[2]) + height
    if phase < 0.5:
        c, cd, cdd = _ease(2.0 * phase)
        dz = apex - start[2]
        pos[2] = start[2] + dz * c
        vel[2] = dz * cd * 2.0
        acc[2] = dz * cdd * 4.0
    else:
        c, cd, cdd = _ease(2.0 * phase - 1.0)
        dz = target[2] - apex
        pos[2] = apex + dz * c
        vel[2] = dz * cd * 2.0
        acc[2] = dz * cdd * 4.0
    return pos, vel, acc
