"""Capsule clearance checks over the robot's collision primitives.

Each link carries zero or more capsules (a sphere is a capsule with
coincident endpoints).  Self-collision queries skip capsule pairs on the
same link and on directly connected links, which overlap by construction
at every joint.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .spec import RobotModel


@njit(cache=True)
def segment_distance(p0, p1, q0, q1):
    """Closest distance between segments [p0,p1] and [q0,q1].

    Handles degenerate (point) segments, so sphere primitives work too.
    """
    d1 = p1 - p0
    d2 = q1 - q0
    r = p0 - q0
    a = d1[0] * d1[0] + d1[1] * d1[1] + d1[2] * d1[2]
    e = d2[0] * d2[0] + d2[1] * d2[1] + d2[2] * d2[2]
    f = d2[0] * r[0] + d2[1] * r[1] + d2[2] * r[2]
    tiny = 1e-14
    if a <= tiny and e <= tiny:
        s = 0.0
        t = 0.0
    elif a <= tiny:
        s = 0.0
        t = min(max(f / e, 0.0), 1.0)
    else:
        c = d1[0] * r[0] + d1[1] * r[1] + d1[2] * r[2]
        if e <= tiny:
            t = 0.0
            s = min(max(-c / a, 0.0), 1.0)
        else:
            b = d1[0] * d2[0] + d1[1] * d2[1] + d1[2] * d2[2]
            denom = a * e - b * b
            if denom > tiny:
                s = min(max((b * f - c * e) / denom, 0.0), 1.0)
            else:
                s = 0.0
            t = b * s + f
            if t < 0.0:
                t = 0.0
                s = min(max(-c / a, 0.0), 1.0)
            elif t > e:
                t = 1.0
                s = min(max((b - c) / a, 0.0), 1.0)
            else:
                t = t / e
    dx = (p0[0] + d1[0] * s) - (q0[0] + d2[0] * t)
    dy = (p0[1] + d1[1] * s) - (q0[1] + d2[1] * t)
    dz = (p0[2] + d1[2] * s) - (q0[2] + d2[2] * t)
    return np.sqrt(dx * dx + dy * dy + dz * dz)


@njit(cache=True)
def min_pair_margin(P0, P1, radii, pair_i, pair_j):
    """Smallest surface clearance over the given capsule pairs.

    Negative means penetration.  Returns (margin, pair index).
    """
    best = np.inf
    best_k = -1
    for k in range(pair_i.shape[0]):
        i = pair_i[k]
        j = pair_j[k]
        d = segment_distance(P0[i], P1[i], P0[j], P1[j])
        m = d - radii[i] - radii[j]
        if m < best:
            best = m
            best_k = k
    return best, best_k


def collision_pairs(model: RobotModel) -> tuple[np.ndarray, np.ndarray]:
    """Capsule index pairs eligible for self-collision checks."""
    body = model.capsule_body
    n = body.shape[0]
    pi = []
    pj = []
    for i in range(n):
        for j in range(i + 1, n):
            bi, bj = body[i], body[j]
            if bi == bj or model.body_adjacent[bi, bj]:
                continue
            pi.append(i)
            pj.append(j)
    return np.asarray(pi, dtype=np.int64), np.asarray(pj, dtype=np.int64)


def capsule_world_segments(model: RobotModel, body_R: np.ndarray,
                           body_p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Capsule endpoints in world coordinates for the given body poses."""
    b = model.capsule_body
    P0 = body_p[b] + np.einsum("kij,kj->ki", body_R[b], model.capsule_p0)
    P1 = body_p[b] + np.einsum("kij,kj->ki", body_R[b], model.capsule_p1)
    return P0, P1


def self_collision_margin(model: RobotModel, body_R: np.ndarray, body_p: np.ndarray,
                          pairs: tuple[np.ndarray, np.ndarray] | None = None,
                          ) -> tuple[float, tuple[int, int]]:
    """Worst surface clearance between non-connected capsules.

    Returns the margin and the offending capsule index pair.  A margin
    below zero means the configuration self-collides.
    """
    if pairs is None:
        pairs = collision_pairs(model)
    pair_i, pair_j = pairs
    P0, P1 = capsule_world_segments(model, body_R, body_p)
    margin, k = min_pair_margin(P0, P1, model.capsule_radius, pair_i, pair_j)
    return float(margin), (int(pair_i[k]), int(pair_j[k]))
