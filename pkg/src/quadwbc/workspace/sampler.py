"""Reachable-volume analysis for single limbs.

A limb is swept over a dense joint grid, configurations that put any two
non-connected collision capsules in contact are discarded, and the
surviving end-effector positions are voxelized to estimate workspace
volume.  Positions are expressed in the torso frame; the torso pose only
enters when clouds from different stances are merged into one report.

The sweep is split at the leg/manipulator boundary: leg kinematics and
leg clearance checks run once per leg configuration and are shared by
every manipulator sub-sample under it.  Evaluation order is fixed, so
repeated runs produce identical clouds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..commander.fsm import SIT_PITCH
from ..commander.types import STAND_HEIGHT
from ..math3d import rpy_to_mat
from ..model import Kinematics, RobotModel, RobotState
from ..model.geometry import collision_pairs, segment_distance, self_collision_margin
from ..model.kernels import _rot_axis

# grids default to the same total budget regardless of limb width: a
# six-joint limb gets 12 steps per joint, a bare three-joint leg 144
DEFAULT_BUDGET = 12 ** 6
DEFAULT_VOXEL = 0.02

# posture for the limbs that are not being swept; arms folded clear of
# the ground as in locomotion
PARKED_Q = np.array([0.0, 0.9, -1.8] * 4 + [-1.9, 0.0, 0.0] * 2)

# end-effector frame -> does the robot carry its manipulators?  Foot
# clouds describe the unmodified robot, so its arm capsules do not exist.
SELECTORS = {
    "right_gripper": True,
    "left_gripper": True,
    "FR_foot": False,
    "FL_foot": False,
    "RR_foot": False,
    "RL_foot": False,
}

ARM_LINKS = ("arm_r1_link", "arm_r2_link", "arm_r3_link",
             "arm_l1_link", "arm_l2_link", "arm_l3_link")


@dataclass
class WorkspaceCloud:
    """Collision-free end-effector positions over a joint grid."""

    points: np.ndarray          # (n, 3) torso frame
    limb_config: str
    sample_grid: tuple[int, ...]
    n_candidates: int

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if not np.isfinite(self.points).all():
            raise ValueError("cloud points must be finite")


@dataclass
class VolumeReport:
    volume_m3: float
    voxel_size: float
    baseline_volume_m3: float
    expansion_ratio: float

    def __post_init__(self):
        if self.volume_m3 < 0.0 or self.baseline_volume_m3 < 0.0:
            raise ValueError("volumes must be nonnegative")


def self_collision(model: RobotModel, q: np.ndarray, pairs=None) -> bool:
    """True when any two non-connected capsules intersect at q."""
    state = RobotState(q_joints=np.asarray(q, dtype=float))
    kin = Kinematics(model, state)
    margin, _ = self_collision_margin(model, kin.body_R, kin.body_p, pairs)
    return margin < 0.0


def chain_joints(model: RobotModel, frame: str) -> list[int]:
    """Joint indices from the trunk out to the frame's link."""
    b = int(model.frame_body[model.frame_id(frame)])
    out = []
    while b != 0:
        out.append(b - 1)  # joint j drives body j + 1
        b = int(model.parent_body[b - 1])
    return out[::-1]


@njit(cache=True)
def _sweep(grid, glen, stride, split, origins, rots, axes, eef_off,
           cap_body, cap_p0, cap_p1, cap_r, n_out_caps,
           stat_p0, stat_p1, stat_r,
           out_pm, out_ps, in_pm, in_ps, in_qi, in_qj,
           out_pts, out_ok):
    """Grid sweep with the chain split at `split`.

    Joints before the split (the leg) are swept in the outer loop, the
    rest (the manipulator) in the inner one, so leg kinematics and
    leg-vs-static clearance checks are shared by every inner sample.
    Capsules 0..n_out_caps-1 ride outer-chain links.
    """
    nj = origins.shape[0]
    nm = cap_body.shape[0]
    n_outer = 1
    for c in range(split):
        n_outer *= glen[c]
    n_inner = 1
    for c in range(split, nj):
        n_inner *= glen[c]

    Rs = np.empty((nj, 3, 3))
    ps = np.empty((nj, 3))
    a0 = np.empty((nm, 3))
    a1 = np.empty((nm, 3))
    for so in range(n_outer):
        R = np.eye(3)
        p = np.zeros(3)
        for c in range(split):
            digit = (so // (stride[c] // n_inner)) % glen[c]
            p = p + R @ origins[c]
            R = R @ rots[c] @ _rot_axis(axes[c], grid[c, digit])
            Rs[c] = R
            ps[c] = p
        for m in range(n_out_caps):
            b = cap_body[m]
            a0[m] = ps[b] + Rs[b] @ cap_p0[m]
            a1[m] = ps[b] + Rs[b] @ cap_p1[m]
        leg_ok = True
        for t in range(out_pm.shape[0]):
            m = out_pm[t]
            st = out_ps[t]
            d = segment_distance(a0[m], a1[m], stat_p0[st], stat_p1[st])
            if d < cap_r[m] + stat_r[st]:
                leg_ok = False
                break
        base = so * n_inner
        if not leg_ok:
            continue  # out_ok stays False for the whole block

        R_split = Rs[split - 1].copy()
        p_split = ps[split - 1].copy()
        for si in range(n_inner):
            s = base + si
            R = R_split
            p = p_split
            for c in range(split, nj):
                digit = (si // stride[c]) % glen[c]
                p = p + R @ origins[c]
                R = R @ rots[c] @ _rot_axis(axes[c], grid[c, digit])
                Rs[c] = R
                ps[c] = p
            out_pts[s] = ps[nj - 1] + Rs[nj - 1] @ eef_off
            for m in range(n_out_caps, nm):
                b = cap_body[m]
                a0[m] = ps[b] + Rs[b] @ cap_p0[m]
                a1[m] = ps[b] + Rs[b] @ cap_p1[m]
            ok = True
            for t in range(in_pm.shape[0]):
                m = in_pm[t]
                st = in_ps[t]
                d = segment_distance(a0[m], a1[m], stat_p0[st], stat_p1[st])
                if d < cap_r[m] + stat_r[st]:
                    ok = False
                    break
            if ok:
                for t in range(in_qi.shape[0]):
                    i = in_qi[t]
                    j = in_qj[t]
                    d = segment_distance(a0[i], a1[i], a0[j], a1[j])
                    if d < cap_r[i] + cap_r[j]:
                        ok = False
                        break
            out_ok[s] = ok


def _auto_steps(origins, rots, axes, lo, hi, eef_off,
                budget: int = DEFAULT_BUDGET) -> tuple[int, ...]:
    """Split a fixed sample budget across joints by end-effector arc.

    Each joint's sweep moves the end effector along an arc of roughly
    lever * range; giving joints step counts proportional to that arc
    equalizes spatial resolution.  A joint the end effector sits on
    (zero lever) gets the minimum two steps.  Lever arms are measured
    at the mid-range pose.
    """
    nj = origins.shape[0]
    R = np.eye(3)
    p = np.zeros(3)
    jp = np.zeros((nj, 3))
    ja = np.zeros((nj, 3))
    for c in range(nj):
        p = p + R @ origins[c]
        jp[c] = p
        R = R @ rots[c] @ _rot_axis(axes[c], 0.5 * (lo[c] + hi[c]))
        ja[c] = R @ axes[c]
    eef = p + R @ eef_off
    arc = np.zeros(nj)
    for c in range(nj):
        r = eef - jp[c]
        arc[c] = np.linalg.norm(r - (r @ ja[c]) * ja[c]) * (hi[c] - lo[c])

    def counts(scale):
        return tuple(max(2, int(round(scale * a))) for a in arc)

    c_lo, c_hi = 0.0, 1.0
    while np.prod(counts(c_hi), dtype=float) <= budget:
        c_hi *= 2.0
    for _ in range(60):
        mid = 0.5 * (c_lo + c_hi)
        if np.prod(counts(mid), dtype=float) <= budget:
            c_lo = mid
        else:
            c_hi = mid
    return counts(c_lo)


def _resolve_steps(steps, n_joints: int) -> tuple[int, ...]:
    if np.isscalar(steps):
        steps = (int(steps),) * n_joints
    steps = tuple(int(s) for s in steps)
    if len(steps) != n_joints:
        raise ValueError(f"need {n_joints} step counts, got {len(steps)}")
    if min(steps) < 2:
        raise ValueError("need at least 2 steps per joint")
    return steps


def sample_workspace(model: RobotModel, selector: str,
                     steps=None) -> WorkspaceCloud:
    """Sweep one limb over its joint limits and keep collision-free poses.

    `selector` names the end-effector frame; foot selectors describe the
    unmodified robot (its manipulator capsules are removed entirely).
    `steps` is an int or a per-joint sequence; by default every cloud
    spends the same total sample budget, split across joints so each
    joint's end-effector arc is resolved comparably.
    """
    if selector not in SELECTORS:
        raise ValueError(f"unknown selector {selector!r}")
    with_arms = SELECTORS[selector]
    chain = chain_joints(model, selector)

    origins = model.joint_origin[chain]
    rots = model.joint_rot[chain]
    axes = model.joint_axis[chain]
    f = model.frame_id(selector)
    eef_off = model.frame_offset[f]
    lo = model.joint_lower[chain]
    hi = model.joint_upper[chain]

    if steps is None:
        steps = _auto_steps(origins, rots, axes, lo, hi, eef_off)
    steps = _resolve_steps(steps, len(chain))

    glen = np.array(steps, dtype=np.int64)
    stride = np.ones(len(chain), dtype=np.int64)
    for c in range(len(chain) - 2, -1, -1):
        stride[c] = stride[c + 1] * glen[c + 1]
    grid = np.zeros((len(chain), int(glen.max())))
    for c in range(len(chain)):
        grid[c, :glen[c]] = np.linspace(lo[c], hi[c], glen[c])

    moving = {j + 1 for j in chain}
    # outer loop covers the leg for arm chains, hip+thigh for bare legs
    split = 3 if len(chain) > 3 else 2
    outer_bodies = {j + 1 for j in chain[:split]}
    arm_bodies = {model.body_of_link[l] for l in ARM_LINKS}
    dropped = set() if with_arms else arm_bodies

    kin = Kinematics(model, RobotState(q_joints=PARKED_Q))
    body = model.capsule_body
    stat_idx = [k for k in range(body.shape[0])
                if body[k] not in moving and body[k] not in dropped]
    stat_pos = {k: i for i, k in enumerate(stat_idx)}
    mov_idx = [k for k in range(body.shape[0]) if body[k] in moving]
    mov_idx.sort(key=lambda k: (body[k] not in outer_bodies, k))
    mov_pos = {k: i for i, k in enumerate(mov_idx)}
    n_out_caps = sum(1 for k in mov_idx if body[k] in outer_bodies)
    chain_pos = {j + 1: c for c, j in enumerate(chain)}

    stat_p0 = np.array([kin.body_p[body[k]] + kin.body_R[body[k]]
                        @ model.capsule_p0[k] for k in stat_idx]).reshape(-1, 3)
    stat_p1 = np.array([kin.body_p[body[k]] + kin.body_R[body[k]]
                        @ model.capsule_p1[k] for k in stat_idx]).reshape(-1, 3)
    stat_r = model.capsule_radius[list(stat_idx)] if stat_idx else np.zeros(0)

    out_pm, out_ps, in_pm, in_ps, in_qi, in_qj = [], [], [], [], [], []
    pi, pj = collision_pairs(model)
    for i, j in zip(pi, pj):
        bi, bj = body[i], body[j]
        if bi in dropped or bj in dropped:
            continue
        im, jm = bi in moving, bj in moving
        if im and jm:
            in_qi.append(mov_pos[i])
            in_qj.append(mov_pos[j])
        elif im or jm:
            m, st = (i, j) if im else (j, i)
            if mov_pos[m] < n_out_caps:
                out_pm.append(mov_pos[m])
                out_ps.append(stat_pos[st])
            else:
                in_pm.append(mov_pos[m])
                in_ps.append(stat_pos[st])

    n = int(np.prod(glen))
    out_pts = np.empty((n, 3))
    out_ok = np.zeros(n, dtype=np.bool_)
    _sweep(grid, glen, stride, split, origins, rots, axes, eef_off,
           np.array([chain_pos[body[k]] for k in mov_idx], dtype=np.int64),
           model.capsule_p0[mov_idx].reshape(-1, 3),
           model.capsule_p1[mov_idx].reshape(-1, 3),
           model.capsule_radius[mov_idx], n_out_caps,
           stat_p0, stat_p1, stat_r,
           np.array(out_pm, dtype=np.int64), np.array(out_ps, dtype=np.int64),
           np.array(in_pm, dtype=np.int64), np.array(in_ps, dtype=np.int64),
           np.array(in_qi, dtype=np.int64), np.array(in_qj, dtype=np.int64),
           out_pts, out_ok)

    tag = selector if with_arms else f"{selector}_bare"
    return WorkspaceCloud(points=out_pts[out_ok], limb_config=tag,
                          sample_grid=steps, n_candidates=n)


def merge_clouds(clouds: list[WorkspaceCloud], tag: str) -> WorkspaceCloud:
    """Union of several clouds (e.g. both grippers for the bimanual mode)."""
    pts = np.concatenate([c.points for c in clouds], axis=0)
    grid = tuple(s for c in clouds for s in c.sample_grid)
    return WorkspaceCloud(points=pts, limb_config=tag, sample_grid=grid,
                          n_candidates=sum(c.n_candidates for c in clouds))


def transform_cloud(cloud: WorkspaceCloud, rot: np.ndarray,
                    pos: np.ndarray) -> WorkspaceCloud:
    """Re-express a torso-frame cloud in a world frame at the given pose."""
    pts = cloud.points @ np.asarray(rot, dtype=float).T + np.asarray(pos, float)
    return WorkspaceCloud(points=pts, limb_config=cloud.limb_config,
                          sample_grid=cloud.sample_grid,
                          n_candidates=cloud.n_candidates)


def mode_torso_pose(model: RobotModel, mode: str) -> tuple[np.ndarray, np.ndarray]:
    """Ground-frame torso pose a mode operates at.

    Single-limb modes stand level; the bimanual mode sits up over the
    rear feet, which keep the floor position they had while standing.
    """
    if mode == "single":
        return np.eye(3), np.array([0.0, 0.0, STAND_HEIGHT])
    if mode == "bimanual":
        kin = Kinematics(model, RobotState(q_joints=PARKED_Q))
        rear = np.array([kin.frame_pose(f"{leg}_foot").pos[:2]
                         for leg in ("RR", "RL")]).mean(axis=0)
        rot = rpy_to_mat(np.array([0.0, SIT_PITCH, 0.0]))
        return rot, np.array([rear[0], rear[1], STAND_HEIGHT + 0.10])
    raise ValueError(f"unknown mode {mode!r}")


def voxel_keys(points: np.ndarray, voxel_size: float) -> np.ndarray:
    """Sorted unique integer voxel coordinates occupied by the points."""
    if len(points) == 0:
        return np.zeros((0, 3), dtype=np.int64)
    keys = np.floor(np.asarray(points) / voxel_size).astype(np.int64)
    # pack the three coordinates into one word so uniqueness runs on a
    # flat sort; 2^20 voxels per axis is far beyond any limb's reach
    if np.abs(keys).max() < (1 << 20):
        packed = (((keys[:, 0] + (1 << 20)) << 42)
                  | ((keys[:, 1] + (1 << 20)) << 21)
                  | (keys[:, 2] + (1 << 20)))
        u = np.unique(packed)
        out = np.empty((u.shape[0], 3), dtype=np.int64)
        out[:, 0] = (u >> 42) - (1 << 20)
        out[:, 1] = ((u >> 21) & ((1 << 21) - 1)) - (1 << 20)
        out[:, 2] = (u & ((1 << 21) - 1)) - (1 << 20)
        return out
    return np.unique(keys, axis=0)


def voxel_volume(cloud: WorkspaceCloud, voxel_size: float = DEFAULT_VOXEL,
                 baseline: WorkspaceCloud | None = None) -> VolumeReport:
    """Occupied-voxel volume, optionally compared against a baseline cloud."""
    if voxel_size <= 0.0:
        raise ValueError("voxel_size must be positive")
    vol = voxel_keys(cloud.points, voxel_size).shape[0] * voxel_size ** 3
    if baseline is None:
        return VolumeReport(volume_m3=vol, voxel_size=voxel_size,
                            baseline_volume_m3=0.0,
                            expansion_ratio=float("nan"))
    base = voxel_keys(baseline.points, voxel_size).shape[0] * voxel_size ** 3
    ratio = vol / base if base > 0.0 else float("inf")
    return VolumeReport(volume_m3=vol, voxel_size=voxel_size,
                        baseline_volume_m3=base, expansion_ratio=ratio)
