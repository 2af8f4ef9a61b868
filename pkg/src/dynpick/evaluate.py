"""Policy evaluation: sampled tasks, fixed scenarios, baseline policies."""

from __future__ import annotations

import logging
import random

import numpy as np
import torch

from .configs import ExperimentConfig, config_to_dict
from .episodes import SCENARIO_NAMES, sample_episode, scenario_episode
from .estimator import PayloadEstimator
from .policy import ActorCritic
from .records import judge_records, record_episode, write_records
from .task_env import N_ACTIONS, PickPlaceEnv

log = logging.getLogger(__name__)


def policy_fn_from_net(net: ActorCritic, env: PickPlaceEnv,
                       estimator: PayloadEstimator | None = None):
    """Deterministic (mean-action) controller, with an optional live
    payload-estimator stream feeding the observation."""
    state = {"hidden": None}

    def fn(obs):
        if estimator is not None:
            if env.t_decision == 0:
                state["hidden"] = estimator.init_hidden(1)
            frame = torch.as_tensor(env.estimator_frame()).unsqueeze(0)
            mass, contact, state["hidden"] = estimator.step(
                frame.float(), state["hidden"])
            env.set_estimates(float(mass[0]), float(contact[0]))
            obs = env.observe()
        with torch.no_grad():
            mean = net.actor(torch.as_tensor(obs, dtype=torch.float32))
        return mean.numpy().astype(np.float64)

    return fn


def random_policy(seed: int):
    rng = np.random.default_rng(seed)

    def fn(obs):
        return rng.standard_normal(N_ACTIONS)

    return fn


def do_nothing_policy(env: PickPlaceEnv):
    """Raw action whose mapped command holds the robot exactly still:
    zero base rates, nominal arm posture, gripper open."""
    fixed = np.array(env.raw_from_targets(
        0.0, 0.0, 0.0, 0.0, 0.0, env.cfg.arm.nominal, False))

    def fn(obs):
        return fixed

    return fn


def run_eval(cfg: ExperimentConfig, policy_fn_factory, episodes: int,
             seed: int = 0, scenario: str | None = None,
             record_path: str | None = None,
             signature_every: int = 0) -> dict:
    """Evaluate a policy over sampled tasks or one named scenario.

    ``policy_fn_factory(env)`` builds the per-episode controller so stateful
    policies (recurrent estimators) can reset cleanly.
    """
    env = PickPlaceEnv(cfg)
    rng = random.Random(seed)
    lv = cfg.curriculum.init_level
    levels = {t: lv for t in ("pick", "place", "release")}
    records = []
    for k in range(episodes):
        if scenario is None:
            spec = sample_episode(rng, cfg.ranges, levels)
        else:
            spec = scenario_episode(scenario, rng)
        fn = policy_fn_factory(env)
        rec = record_episode(env, spec, fn, signature_every=signature_every)
        records.append(rec)
    metrics = judge_records(records)
    metrics["scenario"] = scenario or "sampled"
    if record_path:
        write_records(record_path, records, config=config_to_dict(cfg))
        log.info("wrote %d records to %s", len(records), record_path)
    return metrics


def run_all_scenarios(cfg: ExperimentConfig, policy_fn_factory,
                      episodes_per: int = 10, seed: int = 0) -> dict:
    out = {}
    for name in SCENARIO_NAMES:
        out[name] = run_eval(cfg, policy_fn_factory, episodes_per,
                             seed=seed, scenario=name)
    return out
