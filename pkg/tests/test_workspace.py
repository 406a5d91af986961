"""Limb workspace sampling, collision filtering, and voxel volumes."""

import numpy as np
import pytest

from quadwbc.model import Kinematics, RobotState, default_model_path, load_model
from quadwbc.workspace import (
    DEFAULT_VOXEL,
    PARKED_Q,
    SELECTORS,
    WorkspaceCloud,
    chain_joints,
    merge_clouds,
    mode_torso_pose,
    sample_workspace,
    self_collision,
    transform_cloud,
    voxel_keys,
    voxel_volume,
)


@pytest.fixture(scope="module")
def model():
    return load_model(default_model_path())


def ref_segment_distance(p0, p1, q0, q1, n=600):
    """Brute-force segment-segment distance, independent of the library."""
    t = np.linspace(0.0, 1.0, n)
    a = p0[None, :] + t[:, None] * (p1 - p0)[None, :]
    b = q0[None, :] + t[:, None] * (q1 - q0)[None, :]
    return np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2).min()


def ref_fk(model, q, frame):
    """Reference forward kinematics: explicit 4x4 chain, built per call."""
    def rot(axis, ang):
        axis = np.asarray(axis, dtype=float)
        k = axis / np.linalg.norm(axis)
        K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
        return np.eye(3) + np.sin(ang) * K + (1 - np.cos(ang)) * K @ K

    f = model.frame_id(frame)
    b = int(model.frame_body[f])
    T = np.eye(4)
    js = []
    while b != 0:
        js.append(b - 1)
        b = int(model.parent_body[b - 1])
    for j in reversed(js):
        A = np.eye(4)
        A[:3, 3] = model.joint_origin[j]
        A[:3, :3] = model.joint_rot[j] @ rot(model.joint_axis[j], q[j])
        T = T @ A
    E = np.eye(4)
    E[:3, :3] = model.frame_rot[f]
    E[:3, 3] = model.frame_offset[f]
    return (T @ E)[:3, 3]


# ---------------------------------------------------------------- collision


def test_nominal_stance_collision_free(model):
    assert not self_collision(model, PARKED_Q)


def test_calf_folded_into_hip_collides(model):
    # fold the knee far past its stop so the shank doubles back over the
    # thigh; the calf capsule then runs into the hip capsule
    q = np.array(PARKED_Q)
    q[2] = -3.05
    assert self_collision(model, q)

    # confirm with the brute-force distance oracle on world capsules
    kin = Kinematics(model, RobotState(q_joints=q))
    hit = False
    bodies = model.capsule_body
    for i in range(len(bodies)):
        for j in range(i + 1, len(bodies)):
            bi, bj = bodies[i], bodies[j]
            if bi == bj or model.body_adjacent[bi, bj]:
                continue
            a0 = kin.body_p[bi] + kin.body_R[bi] @ model.capsule_p0[i]
            a1 = kin.body_p[bi] + kin.body_R[bi] @ model.capsule_p1[i]
            b0 = kin.body_p[bj] + kin.body_R[bj] @ model.capsule_p0[j]
            b1 = kin.body_p[bj] + kin.body_R[bj] @ model.capsule_p1[j]
            d = ref_segment_distance(a0, a1, b0, b1)
            if d < model.capsule_radius[i] + model.capsule_radius[j] - 1e-4:
                hit = True
    assert hit


def test_wrist_roll_extremes_collide(model):
    # the second manipulator joint cannot reach its mechanical extreme
    # without the distal link folding into the limb; both signs hit
    j = model.joint_index["arm_r2"]
    for s in (-1.0, 1.0):
        q = np.array(PARKED_Q)
        q[j] = s * model.joint_upper[j] if s > 0 else model.joint_lower[j]
        assert self_collision(model, q)


def test_self_collision_matches_margin_sign(model):
    # random in-limit poses: boolean must agree with a brute-force pair scan
    rng = np.random.default_rng(7)
    bodies = model.capsule_body
    for _ in range(5):
        q = rng.uniform(model.joint_lower, model.joint_upper)
        expect = False
        kin = Kinematics(model, RobotState(q_joints=q))
        for i in range(len(bodies)):
            for j in range(i + 1, len(bodies)):
                bi, bj = bodies[i], bodies[j]
                if bi == bj or model.body_adjacent[bi, bj]:
                    continue
                a0 = kin.body_p[bi] + kin.body_R[bi] @ model.capsule_p0[i]
                a1 = kin.body_p[bi] + kin.body_R[bi] @ model.capsule_p1[i]
                b0 = kin.body_p[bj] + kin.body_R[bj] @ model.capsule_p0[j]
                b1 = kin.body_p[bj] + kin.body_R[bj] @ model.capsule_p1[j]
                d = ref_segment_distance(a0, a1, b0, b1)
                if d < model.capsule_radius[i] + model.capsule_radius[j] - 5e-4:
                    expect = True
        got = self_collision(model, q)
        if expect:
            assert got
        # near-touching poses may disagree with the coarse oracle; only
        # a clear oracle hit is binding


# ----------------------------------------------------------------- sampling


def test_two_steps_per_joint_bounds_candidates(model):
    cloud = sample_workspace(model, "right_gripper", steps=2)
    assert cloud.n_candidates == 64
    assert len(cloud.points) <= 64


def test_bad_inputs_raise(model):
    with pytest.raises(ValueError):
        sample_workspace(model, "right_gripper", steps=1)
    with pytest.raises(ValueError):
        sample_workspace(model, "right_gripper", steps=(4, 4))
    with pytest.raises(ValueError):
        sample_workspace(model, "nose")


def test_foot_cloud_inside_reach_sphere(model):
    # leg geometry bounds the foot: lateral hip offset d plus the
    # two-segment planar reach at the straightest knee the stop allows
    chain = chain_joints(model, "FR_foot")
    hip = model.joint_origin[chain[0]]
    d = abs(model.joint_origin[chain[1]][1])
    lt = abs(model.joint_origin[chain[2]][2])
    lc = abs(model.frame_offset[model.frame_id("FR_foot")][2])
    th = model.joint_upper[chain[2]]  # knee angle closest to straight
    planar = np.sqrt(lt * lt + lc * lc + 2 * lt * lc * np.cos(th))
    bound = np.sqrt(d * d + planar * planar)

    cloud = sample_workspace(model, "FR_foot", steps=9)
    r = np.linalg.norm(cloud.points - hip, axis=1)
    assert r.max() <= bound + 1e-9


def test_gripper_outreaches_foot(model):
    foot = sample_workspace(model, "FR_foot", steps=9)
    grip = sample_workspace(model, "right_gripper", steps=(5, 5, 5, 5, 5, 2))
    chain = chain_joints(model, "FR_foot")
    hip = model.joint_origin[chain[0]]
    r_foot = np.linalg.norm(foot.points - hip, axis=1).max()
    r_grip = np.linalg.norm(grip.points - hip, axis=1).max()
    assert r_grip > r_foot

    # the straight-limb pose pushes the gripper past the foot's best reach
    q = np.array(PARKED_Q)
    gchain = chain_joints(model, "right_gripper")
    q[gchain[2]] = model.joint_upper[gchain[2]]
    q[gchain[3]:gchain[3] + 3] = 0.0
    p = ref_fk(model, q, "right_gripper")
    assert np.linalg.norm(p - hip) > r_foot


def test_cloud_matches_explicit_rejection_sweep(model):
    # small grid cross-check: sweep the same grid in plain python with
    # the full-pose collision test and per-pose kinematics
    steps = (3, 3, 3, 3, 3, 2)
    cloud = sample_workspace(model, "right_gripper", steps=steps)
    chain = chain_joints(model, "right_gripper")
    grids = [np.linspace(model.joint_lower[j], model.joint_upper[j], s)
             for j, s in zip(chain, steps)]
    pts = []
    for idx in np.ndindex(*steps):
        q = np.array(PARKED_Q)
        for c, j in enumerate(chain):
            q[j] = grids[c][idx[c]]
        if self_collision(model, q):
            continue
        kin = Kinematics(model, RobotState(q_joints=q))
        pts.append(kin.frame_pose("right_gripper").pos)
    pts = np.array(pts).reshape(-1, 3)
    assert pts.shape == cloud.points.shape
    np.testing.assert_allclose(cloud.points, pts, atol=1e-12)


def test_sampling_deterministic(model):
    a = sample_workspace(model, "right_gripper", steps=(4, 4, 4, 3, 3, 2))
    b = sample_workspace(model, "right_gripper", steps=(4, 4, 4, 3, 3, 2))
    assert np.array_equal(a.points, b.points)
    assert a.sample_grid == b.sample_grid
    assert a.n_candidates == b.n_candidates


def test_left_right_mirror(model):
    steps = (5, 5, 5, 4, 4, 2)
    r = sample_workspace(model, "right_gripper", steps=steps)
    l = sample_workspace(model, "left_gripper", steps=steps)
    assert len(r.points) == len(l.points)
    # clouds contain exact duplicates (the wrist roll endpoints), so
    # compare as sets of rounded points rather than sorted rows
    flip = l.points * np.array([1.0, -1.0, 1.0])
    a = {tuple(p) for p in np.round(r.points, 6)}
    b = {tuple(p) for p in np.round(flip, 6)}
    assert a == b


def test_default_grid_spends_fixed_budget(model):
    from quadwbc.workspace.sampler import DEFAULT_BUDGET, _auto_steps

    for sel in ("right_gripper", "FR_foot"):
        chain = chain_joints(model, sel)
        f = model.frame_id(sel)
        steps = _auto_steps(model.joint_origin[chain], model.joint_rot[chain],
                            model.joint_axis[chain], model.joint_lower[chain],
                            model.joint_upper[chain], model.frame_offset[f])
        total = np.prod(steps, dtype=float)
        assert total <= DEFAULT_BUDGET
        assert total > 0.5 * DEFAULT_BUDGET
        assert min(steps) >= 2
    # the wrist roll never displaces the gripper point, so the budget
    # allocator must starve it down to the minimum
    g = _auto_steps(model.joint_origin[chain_joints(model, "right_gripper")],
                    model.joint_rot[chain_joints(model, "right_gripper")],
                    model.joint_axis[chain_joints(model, "right_gripper")],
                    model.joint_lower[chain_joints(model, "right_gripper")],
                    model.joint_upper[chain_joints(model, "right_gripper")],
                    model.frame_offset[model.frame_id("right_gripper")])
    assert g[-1] == 2


# ------------------------------------------------------------------- voxels


def test_single_point_single_voxel():
    cloud = WorkspaceCloud(points=np.array([[0.011, 0.011, 0.011]]),
                           limb_config="t", sample_grid=(1,), n_candidates=1)
    rep = voxel_volume(cloud, voxel_size=0.02)
    assert rep.volume_m3 == pytest.approx(0.02 ** 3)


def test_unit_cube_volume():
    xs = np.linspace(0.0, 1.0, 51)
    g = np.stack(np.meshgrid(xs, xs, xs, indexing="ij"), axis=-1).reshape(-1, 3)
    cloud = WorkspaceCloud(points=g, limb_config="t", sample_grid=(51,) * 3,
                           n_candidates=len(g))
    rep = voxel_volume(cloud, voxel_size=0.1)
    # exact occupancy: every point lands in floor(x/0.1) per axis
    expect = len({int(np.floor(x / 0.1)) for x in xs}) ** 3 * 0.1 ** 3
    assert rep.volume_m3 == pytest.approx(expect)
    # one voxel shell of discretization error around the cube
    assert abs(rep.volume_m3 - 1.0) <= (11 ** 3 - 10 ** 3) * 0.1 ** 3 + 1e-12


def test_empty_cloud_zero_volume():
    cloud = WorkspaceCloud(points=np.zeros((0, 3)), limb_config="t",
                           sample_grid=(2,), n_candidates=0)
    assert voxel_volume(cloud).volume_m3 == 0.0


def test_voxel_size_validated():
    cloud = WorkspaceCloud(points=np.zeros((1, 3)), limb_config="t",
                           sample_grid=(1,), n_candidates=1)
    with pytest.raises(ValueError):
        voxel_volume(cloud, voxel_size=0.0)


def test_expansion_ratio_against_baseline():
    a = WorkspaceCloud(points=np.array([[0.01, 0.01, 0.01]]),
                       limb_config="b", sample_grid=(1,), n_candidates=1)
    pts = np.array([[0.01, 0.01, 0.01], [0.03, 0.01, 0.01]])
    b = WorkspaceCloud(points=pts, limb_config="o", sample_grid=(2,),
                       n_candidates=2)
    rep = voxel_volume(b, voxel_size=0.02, baseline=a)
    assert rep.expansion_ratio == pytest.approx(2.0)
    assert rep.baseline_volume_m3 == pytest.approx(0.02 ** 3)


def test_grid_refinement_never_shrinks_volume(model):
    # nested refinement: linspace(l, u, 2k+1) contains linspace(l, u, k+1),
    # so the fine cloud is a superset and volume cannot decrease
    coarse = sample_workspace(model, "FR_foot", steps=(5, 5, 5))
    fine = sample_workspace(model, "FR_foot", steps=(9, 9, 9))
    vc = voxel_volume(coarse).volume_m3
    vf = voxel_volume(fine).volume_m3
    assert vf >= vc - 1e-12


def test_merge_and_transform(model):
    a = sample_workspace(model, "FR_foot", steps=(4, 4, 4))
    b = sample_workspace(model, "FL_foot", steps=(4, 4, 4))
    m = merge_clouds([a, b], "front_feet")
    assert len(m.points) == len(a.points) + len(b.points)
    assert m.limb_config == "front_feet"

    rot, pos = mode_torso_pose(model, "single")
    t = transform_cloud(a, rot, pos)
    np.testing.assert_allclose(t.points[0], rot @ a.points[0] + pos,
                               atol=1e-12)
    # volume is rigid-motion invariant up to voxel discretization
    va = voxel_volume(a).volume_m3
    vt = voxel_volume(t).volume_m3
    assert abs(va - vt) / max(va, 1e-9) < 0.25


def test_mode_poses(model):
    rot, pos = mode_torso_pose(model, "single")
    np.testing.assert_allclose(rot, np.eye(3))
    assert pos[2] > 0.2
    rot2, pos2 = mode_torso_pose(model, "bimanual")
    # seated: strong nose-up pitch, torso higher than standing
    assert rot2[2, 0] > 0.9
    assert pos2[2] > pos[2]
    with pytest.raises(ValueError):
        mode_torso_pose(model, "flying")


def test_report_smoke(model):
    from quadwbc.workspace import workspace_report

    s = workspace_report(model, steps=3)
    assert set(s.reports) == {"single", "bimanual", "combined"}
    for rep in s.reports.values():
        assert rep.volume_m3 >= 0.0
        assert rep.baseline_volume_m3 >= 0.0
    # feet stay in the modified robot's combined set, so the combined
    # row can never fall below its own baseline
    comb = s.reports["combined"]
    assert comb.volume_m3 >= comb.baseline_volume_m3
    assert "mode" in s.table() and "ratio" in s.table()
    assert s.clouds["FR_foot"].sample_grid == (3, 3, 3)
    assert s.clouds["right_gripper"].sample_grid == (3,) * 6
    with pytest.raises(ValueError):
        workspace_report(model, steps=(3, 3, 3))


def test_voxel_keys_sorted_unique():
    pts = np.array([[0.05, 0.0, 0.0], [0.05, 0.0, 0.0], [-0.01, 0.0, 0.0]])
    keys = voxel_keys(pts, 0.02)
    assert keys.shape == (2, 3)
    assert np.array_equal(keys, keys[np.lexsort(keys.T[::-1])])
