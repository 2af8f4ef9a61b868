"""Reward machine: spot values, stage gating, one-shot bonuses, penalties,
smoothness zeroing, phase latching."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynpick.configs import ArmParams, RewardConfig, SimParams
from dynpick.plant import Command, Plant
from dynpick.rewards import (
    DENSE_TERMS_BY_STAGE, PENALTY_TERMS, SPARSE_TERMS, RewardState,
    keypoint_sqdist, object_keypoints, place_keypoints, reward_step, stage_of,
    term_value_base_to_place, term_value_ee_retreat, term_value_ee_to_obj,
    term_value_obj_to_place, update_phase)
from dynpick.world import HELD, ON_PICK, ON_PLACE, ObjectSpec, WorldState

SP = SimParams()
AP = ArmParams()
CFG = RewardConfig()

ALL_DENSE = set().union(*DENSE_TERMS_BY_STAGE.values())


def setup_world():
    plant = Plant(SP, AP)
    w = WorldState()
    w.q = AP.nominal
    w.obj_spec = ObjectSpec("cylinder", 0.06, 0.10, 0.5)
    w.pick_table.x, w.pick_table.y, w.pick_table.top = 2.0, 0.0, 0.6
    w.place_table.x, w.place_table.y, w.place_table.top = -2.0, 0.0, 0.6
    w.obj.x, w.obj.y = 2.0, 0.0
    w.obj.z = 0.65
    w.obj.support = ON_PICK
    plant.prime(w)
    return plant, w


def run_reward(plant, w, rs, phase_prev, phase_new, events=None,
               norm=None, prev_norm=None, cmd=None, prev_cmd=None,
               prev2_cmd=None):
    cmd = cmd if cmd is not None else Command(q_des=AP.nominal)
    return reward_step(rs, w, plant, events or {}, phase_prev, phase_new,
                       norm if norm is not None else (0.0,) * 12, prev_norm,
                       cmd, prev_cmd, prev2_cmd, CFG, AP,
                       retreat_req=0.055, lift_threshold=0.03)


def split_terms(terms):
    dense = {k for k in terms if k in ALL_DENSE}
    sparse = {k for k in terms if k in SPARSE_TERMS}
    pens = {k for k in terms if k.startswith("pen_")}
    return dense, sparse, pens


# ----------------------------------------------------------------------
# closed-form spot values


def test_ee_to_obj_at_zero_distance_is_k1_plus_k2():
    assert term_value_ee_to_obj(CFG, 0.0) == CFG.k1 + CFG.k2


def test_base_to_place_saturates_below_point_three():
    for d in (0.0, 0.15, 0.3):
        assert term_value_base_to_place(CFG, d) == pytest.approx(
            CFG.k8 * math.exp(-0.15), abs=1e-15)
    assert term_value_base_to_place(CFG, 0.8) == pytest.approx(
        CFG.k8 * math.exp(-0.4), abs=1e-15)


def test_obj_to_place_at_goal_is_k6_plus_k7():
    assert term_value_obj_to_place(CFG, 0.0) == CFG.k6 + CFG.k7
    s = 0.3
    assert term_value_obj_to_place(CFG, s) == pytest.approx(
        CFG.k6 * math.exp(-5 * s) + CFG.k7 * math.exp(-25 * s), abs=1e-15)


def test_ee_retreat_saturates_at_one_meter():
    cap = CFG.k12 * (1.0 - math.exp(-5.0))
    assert term_value_ee_retreat(CFG, 1.0) == pytest.approx(cap, abs=1e-15)
    assert term_value_ee_retreat(CFG, 2.5) == pytest.approx(cap, abs=1e-15)
    assert term_value_ee_retreat(CFG, 0.0) == 0.0


def test_reward_breakdown_matches_closed_form_at_crafted_state():
    plant, w = setup_world()
    # EE exactly 0.2 m from the object: outside the contact radius
    w.ee_pos = (w.obj.x - 0.2, w.obj.y, w.obj.z)
    rs = RewardState()
    _, terms = run_reward(plant, w, rs, 0, 0)
    d2 = 0.04
    expect = CFG.k1 * math.exp(-25 * d2) + CFG.k2 * math.exp(-d2)
    assert terms["ee_to_obj"] == pytest.approx(expect, abs=1e-12)
    assert terms["ee_obj_contact"] == 0.0
    # inside the grasp radius the contact indicator pays k3
    w.ee_pos = (w.obj.x - 0.5 * SP.r_grasp, w.obj.y, w.obj.z)
    _, terms = run_reward(plant, w, rs, 0, 0)
    assert terms["ee_obj_contact"] == CFG.k3


def test_carrying_breakdown_matches_closed_form():
    plant, w = setup_world()
    rs = RewardState()
    w.attached = True
    w.obj.support = HELD
    # base 1.2 m from the place table, facing straight at it
    w.base_x, w.base_y = w.place_table.x + 1.2, 0.0
    w.base_yaw = math.pi
    # object held exactly at the upright goal pose
    w.obj.x, w.obj.y = w.place_table.x, w.place_table.y
    w.obj.z = w.place_table.top + 0.5 * w.obj_spec.height
    _, terms = run_reward(plant, w, rs, 1, 1)
    assert terms["base_heading"] == pytest.approx(CFG.k5, abs=1e-12)
    assert terms["obj_to_place"] == pytest.approx(CFG.k6 + CFG.k7, abs=1e-12)
    assert terms["base_to_place"] == pytest.approx(
        CFG.k8 * math.exp(-0.6), abs=1e-12)
    # facing directly away flips the heading term's sign
    w.base_yaw = 0.0
    _, terms = run_reward(plant, w, rs, 1, 1)
    assert terms["base_heading"] == pytest.approx(-CFG.k5, abs=1e-12)


def test_retreat_breakdown_matches_closed_form():
    plant, w = setup_world()
    rs = RewardState()
    w.base_x, w.base_y = w.place_table.x + 0.7, w.place_table.y
    w.obj.x, w.obj.y = w.place_table.x, w.place_table.y
    w.obj.z = w.place_table.top + 0.05
    w.ee_pos = (w.obj.x + 0.3, w.obj.y, w.obj.z)
    _, terms = run_reward(plant, w, rs, 4, 4)
    assert terms["base_retreat"] == pytest.approx(CFG.k11 * 0.49, abs=1e-12)
    assert terms["ee_retreat"] == pytest.approx(
        CFG.k12 * (1 - math.exp(-1.5)), abs=1e-12)
    # base retreat saturates at one meter
    w.base_x = w.place_table.x + 3.0
    _, terms = run_reward(plant, w, rs, 4, 4)
    assert terms["base_retreat"] == pytest.approx(CFG.k11, abs=1e-12)


# ----------------------------------------------------------------------
# keypoints


def test_keypoints_upright_geometry():
    _, w = setup_world()
    h = 0.5 * w.obj_spec.height
    bot, cen, top = object_keypoints(w)
    assert bot == (w.obj.x, w.obj.y, w.obj.z - h)
    assert cen == (w.obj.x, w.obj.y, w.obj.z)
    assert top == (w.obj.x, w.obj.y, w.obj.z + h)
    gb, gc, gt = place_keypoints(w)
    tb = w.place_table
    assert gb == (tb.x, tb.y, tb.top)
    assert gt == (tb.x, tb.y, tb.top + w.obj_spec.height)
    assert gc[2] == pytest.approx(0.5 * (gb[2] + gt[2]))


@given(dx=st.floats(-1, 1), dy=st.floats(-1, 1), dz=st.floats(-0.5, 0.5))
@settings(max_examples=60, deadline=None)
def test_keypoint_sqdist_of_uniform_offset_is_three_norms(dx, dy, dz):
    _, w = setup_world()
    tb = w.place_table
    w.obj.x, w.obj.y = tb.x + dx, tb.y + dy
    w.obj.z = tb.top + 0.5 * w.obj_spec.height + dz
    want = 3.0 * (dx * dx + dy * dy + dz * dz)
    assert keypoint_sqdist(w) == pytest.approx(want, abs=1e-12)


def test_toppling_raises_keypoint_error():
    _, w = setup_world()
    tb = w.place_table
    w.obj.x, w.obj.y = tb.x, tb.y
    w.obj.z = tb.top + 0.5 * w.obj_spec.height
    upright = keypoint_sqdist(w)
    assert upright == pytest.approx(0.0, abs=1e-15)
    w.obj.toppled = True
    w.obj.z = tb.top + 0.5 * w.obj_spec.width
    assert keypoint_sqdist(w) > 0.001


# ----------------------------------------------------------------------
# stage gating


def test_stage_mapping():
    assert stage_of(0, False) == "pre_grasping"
    assert stage_of(1, False) == "pre_grasping"
    assert stage_of(2, True) == "carrying"
    assert stage_of(1, True) == "carrying"
    assert stage_of(3, True) == "placement"
    assert stage_of(3, False) == "placement"
    assert stage_of(4, False) == "retreating"
    assert stage_of(5, False) == "finishing"


def test_active_dense_terms_match_stage_registry():
    plant, w = setup_world()
    rs = RewardState()
    # pre-grasping
    _, terms = run_reward(plant, w, rs, 0, 0)
    assert split_terms(terms)[0] == DENSE_TERMS_BY_STAGE["pre_grasping"]
    # carrying
    w.attached = True
    w.obj.support = HELD
    _, terms = run_reward(plant, w, rs, 1, 1)
    assert split_terms(terms)[0] == DENSE_TERMS_BY_STAGE["carrying"]
    # placement: no dense shaping
    _, terms = run_reward(plant, w, rs, 3, 3)
    assert split_terms(terms)[0] == set()
    # retreating
    w.attached = False
    w.obj.support = ON_PLACE
    _, terms = run_reward(plant, w, rs, 4, 4)
    assert split_terms(terms)[0] == DENSE_TERMS_BY_STAGE["retreating"]
    # finishing
    _, terms = run_reward(plant, w, rs, 5, 5)
    assert split_terms(terms)[0] == set()


def test_penalties_always_present_and_nonpositive():
    plant, w = setup_world()
    rs = RewardState()
    w.qd = (0.5,) * 6
    w.tau = (10.0,) * 6
    for phase in (0, 3, 4, 5):
        _, terms = run_reward(plant, w, rs, phase, phase)
        pens = split_terms(terms)[2]
        assert pens == set(PENALTY_TERMS)
        assert all(terms[p] <= 0.0 for p in pens)


def test_arm_penalty_spot_values():
    plant, w = setup_world()
    rs = RewardState()
    w.qd = (0.5, -0.5, 0.25, 0.0, -0.25, 0.5)
    w.tau = (10.0, -5.0, 0.0, 2.5, -2.5, 10.0)
    _, terms = run_reward(plant, w, rs, 0, 0)
    assert terms["pen_arm_vel"] == pytest.approx(-CFG.k14 * 2.0, abs=1e-12)
    assert terms["pen_arm_torque"] == pytest.approx(-CFG.k16 * 30.0, abs=1e-12)
    want_posture = -CFG.k17 * sum(abs(a - b) for a, b in zip(w.q, AP.nominal))
    assert terms["pen_arm_posture"] == pytest.approx(want_posture, abs=1e-12)


def test_near_limit_penalty_counts_joints_in_band():
    plant, w = setup_world()
    rs = RewardState()
    _, t0 = run_reward(plant, w, rs, 0, 0)
    q = list(AP.nominal)
    q[0] = AP.lower[0] + 0.5 * CFG.near_limit_frac * (AP.upper[0] - AP.lower[0])
    w.q = tuple(q)
    _, t1 = run_reward(plant, w, rs, 0, 0)
    assert t1["pen_near_limit"] - t0["pen_near_limit"] == pytest.approx(
        -CFG.k18, abs=1e-12)


def test_base_motion_and_command_penalty_values():
    plant, w = setup_world()
    rs = RewardState()
    w.base_vh = 0.3
    w.base_wy = -0.5
    cmd = Command(vx=1.0, dh=-0.1, q_des=AP.nominal)
    prev = Command(vx=0.5, dh=-0.05, q_des=AP.nominal)
    prev2 = Command(vx=0.25, dh=0.0, q_des=AP.nominal)
    _, terms = run_reward(plant, w, rs, 0, 0, cmd=cmd, prev_cmd=prev,
                          prev2_cmd=prev2)
    assert terms["pen_base_motion"] == pytest.approx(
        -CFG.k19 * (0.09 + 0.02 * 0.5), abs=1e-12)
    assert terms["pen_cmd_rate"] == pytest.approx(-CFG.k20 * 0.25, abs=1e-12)
    assert terms["pen_cmd_accel"] == pytest.approx(
        -CFG.k21 * 0.25 ** 2, abs=1e-12)
    assert terms["pen_body_rate"] == pytest.approx(
        -CFG.k23 * 0.05 ** 2, abs=1e-12)
    assert terms["pen_body_accel"] == pytest.approx(0.0, abs=1e-12)
    assert terms["pen_energy"] == pytest.approx(
        -CFG.k22 * (1.0 + 0.01) * 1.0, abs=1e-12)
    assert terms["pen_body_cmd"] == pytest.approx(-CFG.k25 * 0.01, abs=1e-12)


def test_contact_force_penalty_from_table_penetration():
    plant, w = setup_world()
    rs = RewardState()
    tb = w.pick_table
    w.ee_pos = (tb.x, tb.y, tb.top - 0.02)
    f = plant.ee_table_contact_force(w)
    assert f > 0.0
    _, terms = run_reward(plant, w, rs, 0, 0)
    assert terms["pen_contact"] == pytest.approx(-CFG.k26 * f * f, abs=1e-12)


def test_upright_penalty_only_when_toppled_near_place():
    plant, w = setup_world()
    rs = RewardState()
    _, terms = run_reward(plant, w, rs, 0, 0)
    assert terms["pen_upright"] == 0.0
    w.obj.toppled = True
    w.obj.x, w.obj.y = w.place_table.x, w.place_table.y
    w.obj.z = w.place_table.top + 0.03
    _, terms = run_reward(plant, w, rs, 0, 0)
    assert terms["pen_upright"] == pytest.approx(
        -CFG.k27 * math.exp(-0.03), abs=1e-12)


# ----------------------------------------------------------------------
# smoothness zeroing


@given(vx=st.floats(-1, 2), vy=st.floats(-1, 1), wz=st.floats(-1, 1),
       dh=st.floats(-0.2, 0), pitch=st.floats(-0.28, 0.28))
@settings(max_examples=40, deadline=None)
def test_constant_commands_zero_all_rate_penalties(vx, vy, wz, dh, pitch):
    plant, w = setup_world()
    rs = RewardState()
    cmd = Command(vx=vx, vy=vy, wz=wz, dh=dh, pitch=pitch, q_des=AP.nominal)
    norm = (0.1,) * 12
    _, terms = run_reward(plant, w, rs, 0, 0, norm=norm, prev_norm=norm,
                          cmd=cmd, prev_cmd=cmd, prev2_cmd=cmd)
    for name in ("pen_cmd_rate", "pen_cmd_accel", "pen_body_rate",
                 "pen_body_accel", "pen_arm_action_rate"):
        assert terms[name] == 0.0


def test_missing_history_zeroes_rate_penalties():
    plant, w = setup_world()
    rs = RewardState()
    cmd = Command(vx=1.0, dh=-0.1, pitch=0.2, q_des=AP.nominal)
    _, terms = run_reward(plant, w, rs, 0, 0, cmd=cmd)
    for name in ("pen_cmd_rate", "pen_cmd_accel", "pen_body_rate",
                 "pen_body_accel", "pen_arm_action_rate"):
        assert terms[name] == 0.0
    # one step of history: first differences active, second differences not
    prev = Command(q_des=AP.nominal)
    _, terms = run_reward(plant, w, rs, 0, 0, cmd=cmd, prev_cmd=prev)
    assert terms["pen_cmd_rate"] < 0.0
    assert terms["pen_cmd_accel"] == 0.0
    assert terms["pen_body_accel"] == 0.0


# ----------------------------------------------------------------------
# one-shot bonuses


def test_grasp_bonus_fires_once():
    plant, w = setup_world()
    rs = RewardState()
    _, t1 = run_reward(plant, w, rs, 0, 0, events={"grasp_success": True})
    assert t1["grasp_hold"] == CFG.k4
    _, t2 = run_reward(plant, w, rs, 0, 0, events={"grasp_success": True})
    assert "grasp_hold" not in t2


def test_lift_bonus_requires_height_above_pick_table():
    plant, w = setup_world()
    rs = RewardState()
    w.attached = True
    w.obj.support = HELD
    w.obj.z = w.pick_table.top + 0.05 + 0.02   # bottom 0.02 above top
    _, t1 = run_reward(plant, w, rs, 1, 1)
    assert "grasp_lift" not in t1
    w.obj.z = w.pick_table.top + 0.05 + 0.031
    _, t2 = run_reward(plant, w, rs, 1, 1)
    assert t2["grasp_lift"] == CFG.k4
    _, t3 = run_reward(plant, w, rs, 1, 1)
    assert "grasp_lift" not in t3


def test_place_release_complete_sequence():
    plant, w = setup_world()
    rs = RewardState()
    _, t = run_reward(plant, w, rs, 2, 3)
    assert t["place_success"] == CFG.k9
    # released: object resting on place table, EE still at the object
    w.attached = False
    w.gripper_closed = False
    w.obj.x, w.obj.y = w.place_table.x, w.place_table.y
    w.obj.z = w.place_table.top + 0.05
    w.obj.support = ON_PLACE
    w.ee_pos = (w.obj.x, w.obj.y, w.obj.z)
    _, t = run_reward(plant, w, rs, 3, 4)
    assert t["gripper_release"] == CFG.k10
    assert rs.release_obj_pos is not None
    # EE still at the object: no completion yet
    _, t = run_reward(plant, w, rs, 4, 4)
    assert "complete" not in t
    # EE retreats beyond the requirement without disturbing
    w.ee_pos = (w.obj.x + 0.06, w.obj.y, w.obj.z + 0.05)
    _, t = run_reward(plant, w, rs, 4, 4)
    assert t["complete"] == 3 * CFG.k13
    assert rs.retreat_success
    _, t = run_reward(plant, w, rs, 4, 4)
    assert "complete" not in t


def test_disturbing_the_object_blocks_completion():
    plant, w = setup_world()
    rs = RewardState()
    w.attached = False
    w.gripper_closed = False
    w.obj.x, w.obj.y = w.place_table.x, w.place_table.y
    w.obj.z = w.place_table.top + 0.05
    w.obj.support = ON_PLACE
    w.ee_pos = (w.obj.x, w.obj.y, w.obj.z)
    run_reward(plant, w, rs, 3, 4)
    # object nudged by more than a centimeter
    w.obj.x += 0.02
    w.ee_pos = (w.obj.x + 0.5, w.obj.y, w.obj.z)
    _, t = run_reward(plant, w, rs, 4, 4)
    assert rs.disturbed and "complete" not in t
    run_reward(plant, w, rs, 4, 4)
    assert not rs.retreat_success


def test_event_bookkeeping_counters():
    plant, w = setup_world()
    rs = RewardState()
    run_reward(plant, w, rs, 0, 0, events={"dropped": True, "grip_toggles": 2})
    run_reward(plant, w, rs, 0, 0, events={"toppled": True, "grip_toggles": 1})
    assert rs.drop_count == 2
    assert rs.grip_changes == 3


# ----------------------------------------------------------------------
# phase machine


def test_phase_advances_through_full_sequence():
    plant, w = setup_world()
    phase = 0
    # EE over the pick table
    w.ee_pos = (w.pick_table.x, w.pick_table.y, w.pick_table.top + 0.1)
    phase = update_phase(phase, w, plant, CFG, AP)
    assert phase == 1
    # EE over the place table
    w.ee_pos = (w.place_table.x, w.place_table.y, w.place_table.top + 0.1)
    phase = update_phase(phase, w, plant, CFG, AP)
    assert phase == 2
    # object resting on the place table, gripper open, arm home
    w.obj.x, w.obj.y = w.place_table.x, w.place_table.y
    w.obj.z = w.place_table.top + 0.05
    w.obj.support = ON_PLACE
    w.attached = False
    w.gripper_closed = False
    w.q = AP.nominal
    phase = update_phase(phase, w, plant, CFG, AP)
    assert phase == 5  # multi-step advance in one update


def test_phase_four_requires_open_gripper():
    plant, w = setup_world()
    w.obj.x, w.obj.y = w.place_table.x, w.place_table.y
    w.obj.z = w.place_table.top + 0.05
    w.obj.support = ON_PLACE
    w.attached = True
    w.gripper_closed = True
    q = list(AP.nominal)
    q[0] += 0.5   # keep the arm away from home to isolate 3 -> 4
    w.q = tuple(q)
    assert update_phase(3, w, plant, CFG, AP) == 3
    w.attached = False
    w.gripper_closed = False
    assert update_phase(3, w, plant, CFG, AP) == 4


def test_phase_never_decreases():
    plant, w = setup_world()
    w.ee_pos = (w.pick_table.x, w.pick_table.y, w.pick_table.top + 0.1)
    phase = update_phase(0, w, plant, CFG, AP)
    assert phase == 1
    w.ee_pos = (5.0, 5.0, 0.2)   # EE leaves the table region
    assert update_phase(phase, w, plant, CFG, AP) == 1


def test_phase_one_requires_planar_proximity_and_height():
    plant, w = setup_world()
    tb = w.pick_table
    w.ee_pos = (tb.x + tb.radius + CFG.contact_radius + 0.01, tb.y, tb.top + 0.1)
    assert update_phase(0, w, plant, CFG, AP) == 0
    w.ee_pos = (tb.x, tb.y, tb.top - 0.01)
    assert update_phase(0, w, plant, CFG, AP) == 0
    w.ee_pos = (tb.x + tb.radius, tb.y, tb.top)
    assert update_phase(0, w, plant, CFG, AP) == 1
