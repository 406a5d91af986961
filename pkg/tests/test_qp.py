"""Reaction-force QP: analytic cases, KKT residuals, oracle cross-checks."""

import numpy as np
import pytest
from scipy.optimize import fsolve

from quadwbc.model import (
    Kinematics,
    RobotState,
    default_model_path,
    load_model,
    total_mass,
)
from quadwbc.wbc import ContactSpec, QpInfeasible, contact_jacobian, solve_reaction_qp
from quadwbc.wbc.qp import QpWarmStart

MODEL = load_model(default_model_path())
ALL_FEET = ContactSpec(feet_in_contact=("FR", "FL", "RR", "RL"))
MG = total_mass(MODEL) * 9.81

# stiff relaxation weights make the torso equality bind to the support
# forces almost exactly; the defaults trade a visible fraction of a
# newton for relaxation, which the consistency test pins down instead
Q1, Q2 = 1e-3, 1e2
Q2_STIFF = 1e8


def stance_state():
    q = np.zeros(18)
    for leg in range(4):
        q[3 * leg:3 * leg + 3] = (0.0, 0.9, -1.8)
    return RobotState(base_pos=np.array([0.0, 0.0, 0.32]),
                      base_quat=np.array([1.0, 0.0, 0.0, 0.0]), q_joints=q)


def qp_inputs(state, contact):
    kin = Kinematics(MODEL, state)
    A = kin.mass_matrix()
    b, g = kin.bias_forces()
    return A, b, g, contact_jacobian(kin, contact)


def random_inputs(seed, contact, speed=0.3):
    rng = np.random.default_rng(seed)
    st = stance_state()
    st.base_pos = st.base_pos + 0.03 * rng.standard_normal(3)
    st.q_joints = st.q_joints + 0.15 * rng.standard_normal(18)
    st.base_vel = speed * rng.standard_normal(6)
    st.qd_joints = speed * rng.standard_normal(18)
    qdd = 0.8 * rng.standard_normal(24)
    return (*qp_inputs(st, contact), qdd)


def cvxpy_solution(A, b, g, Jc, qdd, q1, q2, contact):
    import cvxpy as cp

    nc = contact.count
    f = cp.Variable(3 * nc)
    d = cp.Variable(6)
    cons = [A[:6, :6] @ d - Jc.T[:6] @ f == -(A[:6] @ qdd + (b + g)[:6])]
    mu = contact.friction_mu
    for i in range(nc):
        fx, fy, fz = f[3 * i], f[3 * i + 1], f[3 * i + 2]
        cons += [fz >= 0, mu * fz - fx >= 0, mu * fz + fx >= 0,
                 mu * fz - fy >= 0, mu * fz + fy >= 0]
        if np.isfinite(contact.fz_max):
            cons.append(fz <= contact.fz_max)
    prob = cp.Problem(
        cp.Minimize(q1 * cp.sum_squares(f) + q2 * cp.sum_squares(d)), cons)
    prob.solve(solver=cp.CLARABEL)
    assert prob.status == "optimal"
    return f.value.reshape(nc, 3), d.value


def test_static_stance_supports_weight():
    A, b, g, Jc = qp_inputs(stance_state(), ALL_FEET)
    f_r, delta = solve_reaction_qp(A, b, g, Jc, np.zeros(24), Q1, Q2_STIFF,
                                   ALL_FEET)
    assert abs(f_r[:, 2].sum() - MG) < 1e-6
    assert np.abs(delta).max() < 1e-6
    assert np.abs(f_r[:, :2]).max() < 1.0  # tangential stays small


def test_default_weights_follow_the_relaxation_tradeoff():
    # whatever support the torso z row gives up is exactly the commanded
    # vertical relaxation; the books must balance row by row
    A, b, g, Jc = qp_inputs(stance_state(), ALL_FEET)
    f_r, delta = solve_reaction_qp(A, b, g, Jc, np.zeros(24), Q1, Q2, ALL_FEET)
    lhs = A[:6, :6] @ delta + (b + g)[:6]
    rhs = Jc.T[:6] @ f_r.ravel()
    assert np.abs(lhs - rhs).max() < 1e-9
    assert abs((f_r[:, 2].sum() - MG) - A[2, :6] @ delta) < 1e-9


def test_single_foot_under_com_carries_full_weight():
    # place the FR foot exactly under the center of mass by adjusting the
    # hip and thigh angles, then ask one contact to hold the robot
    st = stance_state()

    def foot_minus_com(x):
        st.q_joints[0], st.q_joints[1] = x
        kin = Kinematics(MODEL, st)
        return kin.frame_pose("FR_foot").pos[:2] - kin.com_position()[:2]

    sol = fsolve(foot_minus_com, np.array([0.3, 1.2]), xtol=1e-14)
    st.q_joints[0], st.q_joints[1] = sol
    kin = Kinematics(MODEL, st)
    assert np.abs(kin.frame_pose("FR_foot").pos[:2]
                  - kin.com_position()[:2]).max() < 1e-10
    contact = ContactSpec(feet_in_contact=("FR",))
    A, b, g, Jc = qp_inputs(st, contact)
    f_r, delta = solve_reaction_qp(A, b, g, Jc, np.zeros(24), Q1, Q2_STIFF,
                                   contact)
    assert abs(f_r[0, 2] - MG) < 1e-6
    assert np.abs(f_r[0, :2]).max() < 1e-6
    assert np.abs(delta).max() < 1e-6


def test_zero_friction_kills_tangential_forces():
    contact = ContactSpec(feet_in_contact=("FR", "FL", "RR", "RL"),
                          friction_mu=0.0)
    A, b, g, Jc = qp_inputs(stance_state(), contact)
    f_r, _ = solve_reaction_qp(A, b, g, Jc, np.zeros(24), Q1, Q2, contact)
    assert np.abs(f_r[:, :2]).max() < 1e-9
    assert f_r[:, 2].sum() > 0.9 * MG


@pytest.mark.parametrize("seed", range(4))
def test_matches_conic_solver_on_random_problems(seed):
    A, b, g, Jc, qdd = random_inputs(seed, ALL_FEET)
    f_r, delta = solve_reaction_qp(A, b, g, Jc, qdd, Q1, Q2, ALL_FEET)
    f_ref, d_ref = cvxpy_solution(A, b, g, Jc, qdd, Q1, Q2, ALL_FEET)
    assert np.abs(f_r - f_ref).max() < 1e-5
    assert np.abs(delta - d_ref).max() < 1e-5


@pytest.mark.parametrize("seed", range(4))
def test_kkt_residuals(seed):
    A, b, g, Jc, qdd = random_inputs(seed, ALL_FEET, speed=0.5)
    diag = {}
    solve_reaction_qp(A, b, g, Jc, qdd, Q1, Q2, ALL_FEET, diagnostics=diag)
    kkt = diag["qp_kkt"]
    for key, val in kkt.items():
        assert val < 1e-6, (key, val)


def test_friction_saturation_activates_cone_rows():
    # a hard lateral acceleration demand pushes tangential forces to the
    # pyramid faces
    A, b, g, Jc = qp_inputs(stance_state(), ALL_FEET)
    qdd = np.zeros(24)
    qdd[0] = 8.0
    mu = ALL_FEET.friction_mu

    # moderate weights: coordinates are well conditioned, compare directly
    f_r, delta = solve_reaction_qp(A, b, g, Jc, qdd, Q1, Q2, ALL_FEET)
    f_ref, d_ref = cvxpy_solution(A, b, g, Jc, qdd, Q1, Q2, ALL_FEET)
    assert np.abs(f_r - f_ref).max() < 1e-5
    assert np.abs(delta - d_ref).max() < 1e-5

    # stiff torso weight: the bound faces must be exactly tight and the
    # point no worse than the conic reference, whose own feasibility slack
    # at this weight ratio exceeds the in-face position uncertainty
    diag = {}
    f_r, delta = solve_reaction_qp(A, b, g, Jc, qdd, Q1, Q2_STIFF, ALL_FEET,
                                   diagnostics=diag)
    assert len(diag["qp_active_set"]) > 0
    assert np.all(np.abs(f_r[:, 0]) <= mu * f_r[:, 2] + 1e-8)
    for key, val in diag["qp_kkt"].items():
        assert val < 1e-6, (key, val)
    f_ref, d_ref = cvxpy_solution(A, b, g, Jc, qdd, Q1, Q2_STIFF, ALL_FEET)
    assert np.abs(delta - d_ref).max() < 1e-6
    cost = Q1 * (f_r ** 2).sum() + Q2_STIFF * (delta ** 2).sum()
    cost_ref = Q1 * (f_ref ** 2).sum() + Q2_STIFF * (d_ref ** 2).sum()
    assert cost <= cost_ref + 1e-6 * (1.0 + cost_ref)


def test_warm_start_reproduces_and_speeds_up():
    A, b, g, Jc = qp_inputs(stance_state(), ALL_FEET)
    qdd = np.zeros(24)
    qdd[0] = 8.0
    ws = QpWarmStart()
    d1, d2 = {}, {}
    f1, _ = solve_reaction_qp(A, b, g, Jc, qdd, Q1, Q2_STIFF, ALL_FEET,
                              warm_start=ws, diagnostics=d1)
    assert ws.active == d1["qp_active_set"]
    f2, _ = solve_reaction_qp(A, b, g, Jc, qdd, Q1, Q2_STIFF, ALL_FEET,
                              warm_start=ws, diagnostics=d2)
    assert np.abs(f1 - f2).max() == 0.0
    assert d2["qp_iterations"] <= d1["qp_iterations"]


def test_vertical_force_cap_respected():
    contact = ContactSpec(feet_in_contact=("FR", "FL", "RR", "RL"),
                          fz_max=20.0)
    A, b, g, Jc = qp_inputs(stance_state(), contact)
    diag = {}
    f_r, delta = solve_reaction_qp(A, b, g, Jc, np.zeros(24), Q1, Q2,
                                   contact, diagnostics=diag)
    assert np.all(f_r[:, 2] <= 20.0 + 1e-8)
    for val in diag["qp_kkt"].values():
        assert val < 1e-6
    # 4 x 20 N cannot hold 120 N: the relaxation must command a sag
    assert delta[2] < -0.5


def test_empty_contact_is_rejected():
    A, b, g, _ = qp_inputs(stance_state(), ALL_FEET)
    with pytest.raises(QpInfeasible):
        solve_reaction_qp(A, b, g, np.zeros((0, 24)), np.zeros(24), Q1, Q2,
                          ContactSpec(feet_in_contact=()))


def test_input_validation():
    A, b, g, Jc = qp_inputs(stance_state(), ALL_FEET)
    with pytest.raises(ValueError, match="jacobian"):
        solve_reaction_qp(A, b, g, Jc[:9], np.zeros(24), Q1, Q2, ALL_FEET)
    with pytest.raises(ValueError, match="positive"):
        solve_reaction_qp(A, b, g, Jc, np.zeros(24), -1.0, Q2, ALL_FEET)
