"""Model schema, validation and packaged-robot invariants."""

import copy

import numpy as np
import pytest

from quadwbc.model import (
    Kinematics,
    ModelError,
    RobotState,
    default_model_path,
    load_model,
    serialize_model,
    state_to_vector,
    total_mass,
    vector_to_state,
)


@pytest.fixture(scope="module")
def model():
    return load_model(default_model_path())


@pytest.fixture(scope="module")
def raw(model):
    return serialize_model(model)


def nominal_state(q_joints=None):
    q = np.zeros(18) if q_joints is None else np.asarray(q_joints, dtype=float)
    return RobotState(np.array([0.0, 0.0, 0.32]), np.array([1.0, 0, 0, 0]),
                      q, np.zeros(6), np.zeros(18))


# -- schema round trip ---------------------------------------------------


def test_serialize_round_trip(model, raw):
    again = load_model(copy.deepcopy(raw))
    np.testing.assert_array_equal(again.parent_body, model.parent_body)
    np.testing.assert_allclose(again.joint_origin, model.joint_origin, atol=0)
    np.testing.assert_allclose(again.joint_rot, model.joint_rot, atol=1e-15)
    np.testing.assert_allclose(again.joint_axis, model.joint_axis, atol=0)
    np.testing.assert_allclose(again.body_mass, model.body_mass, atol=0)
    np.testing.assert_allclose(again.body_com, model.body_com, atol=0)
    np.testing.assert_allclose(again.body_inertia, model.body_inertia, atol=1e-18)
    np.testing.assert_allclose(again.joint_lower, model.joint_lower, atol=1e-15)
    np.testing.assert_allclose(again.joint_upper, model.joint_upper, atol=1e-15)
    np.testing.assert_allclose(again.frame_offset, model.frame_offset, atol=0)
    np.testing.assert_allclose(again.capsule_p0, model.capsule_p0, atol=0)
    np.testing.assert_allclose(again.capsule_radius, model.capsule_radius, atol=0)
    assert [f for f in again.frame_index] == [f for f in model.frame_index]


# -- validation rejections -----------------------------------------------


def _expect_reject(raw, mutate, match):
    bad = copy.deepcopy(raw)
    mutate(bad)
    with pytest.raises(ModelError, match=match):
        load_model(bad)


def test_rejects_wrong_joint_count(raw):
    _expect_reject(raw, lambda d: d["joints"].pop(), "18 joints")


def test_rejects_duplicate_joint(raw):
    def mut(d):
        d["joints"][5]["name"] = d["joints"][4]["name"]
    _expect_reject(raw, mut, "duplicate joint")


def test_rejects_non_unit_axis(raw):
    def mut(d):
        d["joints"][0]["axis"] = [0.0, 2.0, 0.0]
    _expect_reject(raw, mut, "unit length")


def test_rejects_empty_range(raw):
    def mut(d):
        d["joints"][1]["limits_deg"] = [10.0, 10.0]
    _expect_reject(raw, mut, "empty range")


def test_rejects_indefinite_inertia(raw):
    def mut(d):
        d["links"][0]["inertia"][0][0] = -1e-3
    _expect_reject(raw, mut, "positive definite")


def test_rejects_asymmetric_inertia(raw):
    def mut(d):
        d["links"][0]["inertia"][0][1] = 1e-3
    _expect_reject(raw, mut, "symmetric")


def test_rejects_missing_required_frame(raw):
    def mut(d):
        d["frames"] = [f for f in d["frames"] if f["name"] != "left_gripper"]
    _expect_reject(raw, mut, "left_gripper")


def test_rejects_wrong_arm_span(raw):
    def mut(d):
        d["joints"][12]["limits_deg"] = [-130.0, 140.0]
    _expect_reject(raw, mut, "range")


def test_rejects_orphan_link(raw):
    def mut(d):
        d["links"].append({"name": "floating", "mass": 0.1,
                           "com": [0, 0, 0], "inertia": np.eye(3).tolist() })
    _expect_reject(raw, mut, "not connected")


def test_rejects_missing_section(raw):
    bad = copy.deepcopy(raw)
    del bad["frames"]
    with pytest.raises(ModelError, match="missing section"):
        load_model(bad)


# -- packaged robot invariants -------------------------------------------


def test_joint_layout(model):
    names = [j.name for j in model.joints]
    for i, leg in enumerate(("FR", "FL", "RR", "RL")):
        assert names[3 * i] == f"{leg}_hip"
        assert names[3 * i + 1] == f"{leg}_thigh"
        assert names[3 * i + 2] == f"{leg}_calf"
        np.testing.assert_array_equal(model.leg_joint_ids(leg), [3 * i, 3 * i + 1, 3 * i + 2])
    np.testing.assert_array_equal(model.arm_joint_ids("right"), [12, 13, 14])
    np.testing.assert_array_equal(model.arm_joint_ids("left"), [15, 16, 17])
    assert model.nv == 24


def test_manipulator_ranges(model):
    spans = np.degrees(model.joint_upper - model.joint_lower)
    for base in (12, 15):
        np.testing.assert_allclose(spans[base:base + 3], [280.0, 210.0, 360.0], atol=1e-9)


def test_manipulator_mass_budget(model):
    both = sum(model.body_mass[1 + j] for j in range(12, 18))
    assert both == pytest.approx(2 * 0.147, abs=1e-9)
    # each added manipulator weighs about 1.2 percent of the stock robot
    ratio = (total_mass(model) - both) / (both / 2)
    assert 79.0 < ratio < 84.0


def test_required_frames_present(model):
    for name in ("torso", "FR_foot", "FL_foot", "RR_foot", "RL_foot",
                 "right_gripper", "left_gripper", "RR_heel", "RL_heel"):
        model.frame_id(name)
    with pytest.raises(ModelError):
        model.frame_id("nope")


def test_feet_below_trunk_in_stance(model):
    st = nominal_state(np.array([0.0, 0.9, -1.8] * 4 + [0.0] * 6))
    kin = Kinematics(model, st)
    for leg in ("FR", "FL", "RR", "RL"):
        foot = kin.frame_pose(f"{leg}_foot").pos
        assert foot[2] < st.base_pos[2] - 0.15
    heel = kin.frame_pose("RR_heel").pos
    foot = kin.frame_pose("RR_foot").pos
    assert heel[2] > foot[2]


def test_gripper_reachable_from_calf(model):
    st = nominal_state()
    kin = Kinematics(model, st)
    for side, leg in (("right", "FR"), ("left", "FL")):
        g = kin.frame_pose(f"{side}_gripper").pos
        f = kin.frame_pose(f"{leg}_foot").pos
        # grippers ride on the front calves near the feet
        assert np.linalg.norm(g - f) < 0.30


# -- state container -----------------------------------------------------


def test_state_quaternion_normalized():
    st = RobotState(np.zeros(3), np.array([2.0, 0, 0, 0]), np.zeros(18),
                    np.zeros(6), np.zeros(18))
    assert np.linalg.norm(st.base_quat) == pytest.approx(1.0, abs=1e-12)


def test_state_copy_is_independent():
    st = nominal_state()
    st2 = st.copy()
    st2.q_joints[0] = 1.0
    st2.base_vel[3] = 2.0
    assert st.q_joints[0] == 0.0
    assert st.base_vel[3] == 0.0


def test_state_qd_layout():
    st = nominal_state()
    st.base_vel[:] = np.arange(6)
    st.qd_joints[:] = np.arange(6, 24)
    np.testing.assert_array_equal(st.qd, np.arange(24))


def test_state_vector_round_trip():
    rng = np.random.default_rng(7)
    st = RobotState(rng.normal(size=3), rng.normal(size=4),
                    rng.uniform(-1, 1, 18), np.zeros(6), np.zeros(18))
    vec = state_to_vector(st)
    assert vec.shape == (24,)
    st2 = vector_to_state(vec)
    np.testing.assert_allclose(st2.base_pos, st.base_pos, atol=1e-12)
    np.testing.assert_allclose(st2.q_joints, st.q_joints, atol=1e-12)
    d = min(np.linalg.norm(st2.base_quat - st.base_quat),
            np.linalg.norm(st2.base_quat + st.base_quat))
    assert d < 1e-9
