"""Environment contract: action mapping, limits, frame invariance, termination."""

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dynpick.configs import reduced_task_config
from dynpick.episodes import sample_episode
from dynpick.task_env import N_ACTIONS, PickPlaceEnv

CFG = reduced_task_config()
LEVELS = {"pick": 0.1, "place": 0.1, "release": 0.1}


def make_env():
    return PickPlaceEnv(CFG)


def sample_spec(seed=0):
    return sample_episode(random.Random(seed), CFG.ranges, LEVELS)


# ----------------------------------------------------------------------
# action mapping


@given(st.lists(st.floats(-50, 50, allow_nan=False), min_size=12, max_size=12))
@settings(max_examples=200, deadline=None)
def test_mapped_commands_always_inside_limits(raw):
    env = make_env()
    cmd, norm = env.map_action(raw)
    sim = CFG.sim
    assert sim.vx_min <= cmd.vx <= sim.vx_max
    assert abs(cmd.vy) <= sim.vy_abs
    assert abs(cmd.wz) <= sim.wz_abs
    assert sim.dh_min <= cmd.dh <= sim.dh_max
    assert abs(cmd.pitch) <= sim.pitch_abs
    for q, lo, hi in zip(cmd.q_des, CFG.arm.lower, CFG.arm.upper):
        assert lo <= q <= hi
    assert all(-1.0 <= v <= 1.0 for v in norm)


def test_zero_raw_maps_to_range_midpoints():
    env = make_env()
    cmd, _ = env.map_action([0.0] * N_ACTIONS)
    assert cmd.vx == pytest.approx(0.5)    # midpoint of [-1, 2]
    assert cmd.vy == 0.0 and cmd.wz == 0.0
    assert cmd.dh == pytest.approx(-0.1)   # midpoint of [-0.2, 0]
    assert cmd.pitch == 0.0
    assert not cmd.grip_closed             # tanh(0) = 0 is not > 0


def test_raw_from_targets_inverts_map_action():
    env = make_env()
    targets = (0.7, -0.3, 0.25, -0.05, 0.1,
               (0.2, 1.1, -1.0, 0.3, -0.4, 0.5), True)
    raw = env.raw_from_targets(*targets)
    cmd, _ = env.map_action(raw)
    assert cmd.vx == pytest.approx(0.7, abs=1e-9)
    assert cmd.vy == pytest.approx(-0.3, abs=1e-9)
    assert cmd.wz == pytest.approx(0.25, abs=1e-9)
    assert cmd.dh == pytest.approx(-0.05, abs=1e-9)
    assert cmd.pitch == pytest.approx(0.1, abs=1e-9)
    for got, want in zip(cmd.q_des, targets[5]):
        assert got == pytest.approx(want, abs=1e-9)
    assert cmd.grip_closed


def test_gripper_channel_sign_controls_closure():
    env = make_env()
    closed, _ = env.map_action([0.0] * 11 + [1.0])
    opened, _ = env.map_action([0.0] * 11 + [-1.0])
    assert closed.grip_closed and not opened.grip_closed


# ----------------------------------------------------------------------
# stepping


def test_observation_dim_matches_declared():
    env = make_env()
    obs = env.reset(sample_spec())
    assert obs.shape == (env.obs_dim,)
    assert env.privileged().shape == (4,)


def test_decision_advances_interval_plant_steps():
    env = make_env()
    env.reset(sample_spec())
    t0 = env.world.t
    env.step([0.0] * N_ACTIONS)
    assert env.world.t - t0 == CFG.task.decision_interval
    assert env.t_decision == 1


def test_horizon_is_ten_seconds_of_decisions():
    env = make_env()
    assert env.horizon == 500


def test_do_nothing_times_out():
    env = make_env()
    env.reset(sample_spec(3))
    hold = env.raw_from_targets(0, 0, 0, 0, 0, CFG.arm.nominal, False)
    done = False
    while not done:
        _, _, done, info = env.step(hold)
    assert env.outcome == "timeout"
    assert env.t_decision == env.horizon
    st_ = env.episode_stats()
    assert not st_["success"] and st_["t_grasp"] == -1


def test_driving_away_exits_workspace():
    env = make_env()
    env.reset(sample_spec(4))
    run = env.raw_from_targets(2.0, 0, 0, 0, 0, CFG.arm.nominal, False)
    done = False
    while not done:
        _, _, done, info = env.step(run)
    assert env.outcome == "workspace"


def test_frame_invariance_of_observations():
    # the same episode shifted and rotated rigidly must look identical
    env_a, env_b = make_env(), make_env()
    spec = sample_spec(7)
    dx, dy, dyaw = 3.0, -2.0, 1.1
    c, s = math.cos(dyaw), math.sin(dyaw)

    def rot(x, y):
        return c * x - s * y, s * x + c * y

    import dataclasses
    px, py = rot(spec.pick_x, spec.pick_y)
    qx, qy = rot(spec.place_x, spec.place_y)
    moved = dataclasses.replace(
        spec, robot_x=spec.robot_x + dx, robot_y=spec.robot_y + dy,
        robot_yaw=spec.robot_yaw + dyaw,
        pick_x=px + dx, pick_y=py + dy,
        place_x=qx + dx, place_y=qy + dy,
        obj_yaw=spec.obj_yaw + dyaw)

    obs_a = env_a.reset(spec)
    obs_b = env_b.reset(moved)
    np.testing.assert_allclose(obs_a, obs_b, atol=1e-6)
    rng = np.random.default_rng(0)
    for _ in range(40):
        act = rng.standard_normal(N_ACTIONS)
        obs_a, ra, da, _ = env_a.step(act)
        obs_b, rb, db, _ = env_b.step(act)
        np.testing.assert_allclose(obs_a, obs_b, atol=1e-5)
        assert ra == pytest.approx(rb, abs=1e-7)
        assert da == db


def test_stats_shapes_and_dynamic_grasp_default():
    env = make_env()
    env.reset(sample_spec(9))
    env.step([0.0] * N_ACTIONS)
    st_ = env.episode_stats()
    for key in ("outcome", "success", "pick_success", "place_success",
                "release_success", "disturbed", "final_placed",
                "final_place_err", "completion_time_s", "dynamic_grasp",
                "base_speed_at_grasp", "rel_speed_at_grasp"):
        assert key in st_
    assert st_["dynamic_grasp"] is False
    assert st_["base_speed_at_grasp"] is None
