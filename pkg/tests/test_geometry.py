"""Capsule distance primitives and whole-robot clearance checks."""

import numpy as np
import pytest

from quadwbc.model import (
    Kinematics,
    RobotState,
    collision_pairs,
    default_model_path,
    load_model,
    segment_distance,
    self_collision_margin,
)


@pytest.fixture(scope="module")
def model():
    return load_model(default_model_path())


@pytest.fixture(scope="module")
def pairs(model):
    return collision_pairs(model)


def brute_distance(p0, p1, q0, q1, n=400):
    t = np.linspace(0.0, 1.0, n)
    a = p0[None, :] + t[:, None] * (p1 - p0)[None, :]
    b = q0[None, :] + t[:, None] * (q1 - q0)[None, :]
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    return d.min()


def test_segment_distance_known_cases():
    z = np.zeros(3)
    ex = np.array([1.0, 0, 0])
    ey = np.array([0, 1.0, 0])
    ez = np.array([0, 0, 1.0])
    # crossing perpendicular segments separated in z
    assert segment_distance(-ex, ex, -ey + ez, ey + ez) == pytest.approx(1.0, abs=1e-12)
    # parallel
    assert segment_distance(z, ex, 2 * ey, ex + 2 * ey) == pytest.approx(2.0, abs=1e-12)
    # collinear with gap
    assert segment_distance(z, ex, 3 * ex, 4 * ex) == pytest.approx(2.0, abs=1e-12)
    # endpoint to interior
    assert segment_distance(z, z, -ey + 0.5 * ex, ey + 0.5 * ex) == pytest.approx(0.5, abs=1e-12)
    # both degenerate
    assert segment_distance(z, z, ez, ez) == pytest.approx(1.0, abs=1e-12)
    # intersecting
    assert segment_distance(-ex, ex, -ey, ey) == pytest.approx(0.0, abs=1e-12)


def test_segment_distance_random_vs_brute(model):
    rng = np.random.default_rng(21)
    for _ in range(60):
        p0, p1, q0, q1 = rng.normal(size=(4, 3))
        if rng.random() < 0.2:
            p1 = p0  # degenerate sphere case
        exact = segment_distance(p0, p1, q0, q1)
        approx = brute_distance(p0, p1, q0, q1)
        slack = (np.linalg.norm(p1 - p0) + np.linalg.norm(q1 - q0)) / (2 * 399) + 1e-9
        assert exact <= approx + 1e-9
        assert approx - exact < slack


def test_pair_list_excludes_connected_links(model, pairs):
    pi, pj = pairs
    assert pi.shape[0] > 100
    for i, j in zip(pi, pj):
        bi, bj = model.capsule_body[i], model.capsule_body[j]
        assert bi != bj
        assert not model.body_adjacent[bi, bj]


def _margin(model, pairs, q18):
    st = RobotState(np.zeros(3), np.array([1.0, 0, 0, 0]),
                    np.asarray(q18, dtype=float), np.zeros(6), np.zeros(18))
    kin = Kinematics(model, st)
    margin, _ = self_collision_margin(model, kin.body_R, kin.body_p, pairs)
    return margin


def _pose(leg=(0.0, 0.9, -1.8), right=(0.0, 0.0, 0.0), left=(0.0, 0.0, 0.0)):
    return np.array(list(leg) * 4 + list(right) + list(left))


def test_nominal_stance_clear(model, pairs):
    assert _margin(model, pairs, _pose()) > 0.010


def test_zero_pose_clear(model, pairs):
    assert _margin(model, pairs, np.zeros(18)) > 0.010


def test_folded_arms_clear(model, pairs):
    for q4 in (np.pi / 2, 2.3, 2.44):
        q = _pose(right=(q4, 0, 0), left=(q4, 0, 0))
        assert _margin(model, pairs, q) > 0.004


def test_calf_fold_limit_clear(model, pairs):
    lim = model.joint_lower[2]
    assert _margin(model, pairs, _pose(leg=(0.0, 0.9, lim))) > 0.002


def test_wrist_roll_limit_collides(model, pairs):
    # the second manipulator joint folds the distal link into the first:
    # free through +-100 degrees, in contact at the +-105 degree stops
    for sign in (1.0, -1.0):
        q_free = _pose(right=(0, sign * np.deg2rad(100.0), 0))
        q_stop = _pose(right=(0, sign * np.deg2rad(105.0), 0))
        assert _margin(model, pairs, q_free) > 0.0
        assert _margin(model, pairs, q_stop) < 0.0


def test_margin_reports_offending_pair(model, pairs):
    st = RobotState(np.zeros(3), np.array([1.0, 0, 0, 0]),
                    _pose(right=(0, np.deg2rad(105.0), 0)), np.zeros(6), np.zeros(18))
    kin = Kinematics(model, st)
    margin, (i, j) = self_collision_margin(model, kin.body_R, kin.body_p, pairs)
    assert margin < 0.0
    bodies = {model.capsule_body[i], model.capsule_body[j]}
    # the offending capsules belong to the right manipulator chain
    assert bodies <= {13, 14, 15}
