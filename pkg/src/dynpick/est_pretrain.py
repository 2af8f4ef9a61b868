"""Supervised pretraining for the payload estimator.

Generates labeled carry episodes straight from the plant: the robot drives
and waves the arm with mass-free excitation, an object of known mass is
clamped into the gripper mid-episode, carried under continued excitation,
and released. Every decision is labeled with the true attachment flag and
mass, giving clean supervision for both heads, including the transients at
attach and release.
"""

from __future__ import annotations

import logging
import random

import numpy as np
import torch

from .configs import ExperimentConfig
from .episodes import sample_episode
from .estimator import (PayloadEstimator, SequenceBuffer, estimator_loss)
from .task_env import EST_FRAME_DIM, PickPlaceEnv

log = logging.getLogger(__name__)


def _smooth_walk(rng: random.Random, n: int, lo: float, hi: float,
                 smooth: float = 0.9) -> list:
    """Bounded first-order random walk, for gentle command excitation."""
    mid = 0.5 * (lo + hi)
    amp = 0.5 * (hi - lo)
    x = rng.uniform(-1.0, 1.0)
    out = []
    for _ in range(n):
        x = smooth * x + (1.0 - smooth) * rng.uniform(-1.0, 1.0) * 2.0
        x = max(-1.0, min(1.0, x))
        out.append(mid + amp * x)
    return out


def generate_carry_episode(env: PickPlaceEnv, rng: random.Random,
                           mass: float, gentle: bool = False) -> tuple:
    """One labeled episode: (frames [T, D], mass, contact [T]).

    Timeline: free excitation, clamp an object of the given mass into the
    gripper, carry under excitation, release, free tail. Episodes that end
    early (slip drop, floor contact) are kept; their labels stay exact.
    Gentle mode halves the excitation so heavy payloads survive the carry.
    """
    spec = sample_episode(rng, env.cfg.ranges,
                          {"pick": 0.1, "place": 0.1, "release": 0.1})
    spec.obj_mass = mass
    env.reset(spec)

    n = env.horizon
    t_attach = rng.randint(40, 90)
    t_release = t_attach + rng.randint(120, 260)
    a = 0.5 if gentle else 1.0
    sm = 0.97 if gentle else 0.9
    vx = _smooth_walk(rng, n, -0.3 * a, 0.8 * a, sm)
    vy = _smooth_walk(rng, n, -0.4 * a, 0.4 * a, sm)
    wz = _smooth_walk(rng, n, -0.5 * a, 0.5 * a, sm)
    dh = _smooth_walk(rng, n, env.cfg.sim.dh_min * a, env.cfg.sim.dh_max, sm)
    pitch = _smooth_walk(rng, n, -0.2 * a, 0.2 * a, sm)
    arm = env.cfg.arm
    span = 0.5 * a
    q_walk = [_smooth_walk(rng, n,
                           max(lo, nom - span), min(hi, nom + span), sm)
              for lo, hi, nom in zip(arm.lower, arm.upper, arm.nominal)]

    frames = []
    contacts = []
    for t in range(n):
        if t == t_attach:
            w = env.world
            w.obj.x, w.obj.y, w.obj.z = w.ee_pos
            w.obj.vx = w.obj.vy = w.obj.vz = 0.0
            w.obj.toppled = False
            env.plant.force_attach(w)
        frames.append(env.estimator_frame())
        contacts.append(1.0 if env.world.attached else 0.0)
        grip = t_attach <= t < t_release
        raw = env.raw_from_targets(vx[t], vy[t], wz[t], dh[t], pitch[t],
                                   tuple(q[t] for q in q_walk), grip)
        _, _, done, _ = env.step(raw)
        if done:
            break
    return np.array(frames, dtype=np.float32), mass, np.array(contacts,
                                                              dtype=np.float32)


def build_dataset(cfg: ExperimentConfig, episodes: int, seed: int,
                  mass_lo: float = 0.2, mass_hi: float = 2.5,
                  max_len: int = 512) -> SequenceBuffer:
    env = PickPlaceEnv(cfg)
    rng = random.Random(seed)
    buf = SequenceBuffer(capacity=episodes, max_len=max_len)
    for k in range(episodes):
        mass = rng.uniform(mass_lo, mass_hi)
        gentle = rng.random() < 0.4
        frames, m, contacts = generate_carry_episode(env, rng, mass, gentle)
        if len(frames) >= 60:
            buf.add(frames, m, contacts)
        if (k + 1) % 200 == 0:
            log.info("generated %d/%d carry episodes", k + 1, episodes)
    return buf


def pretrain(cfg: ExperimentConfig, episodes: int = 2200, steps: int = 1500,
             batch: int = 16, seed: int = 0) -> tuple:
    """Train an estimator from scratch; returns (net, report)."""
    torch.set_num_threads(1)
    torch.manual_seed(seed)
    buf = build_dataset(cfg, episodes, seed)
    net = PayloadEstimator(EST_FRAME_DIM, cfg.estimator)
    opt = torch.optim.Adam(net.parameters(), lr=cfg.estimator.lr)
    rng = np.random.default_rng(seed + 1)
    for step in range(steps):
        seq, mass, contact, mask = buf.sample(rng, batch)
        loss, st = estimator_loss(net, seq, mass, contact, mask)
        opt.zero_grad()
        loss.backward()
        opt.step()
        if (step + 1) % 200 == 0:
            log.info("step %d | mass_mse %.4f | contact_bce %.4f",
                     step + 1, st["mass_mse"], st["contact_bce"])
    report = evaluate_release_estimates(cfg, net, seed=seed + 2)
    return net, report


def evaluate_release_estimates(cfg: ExperimentConfig, net: PayloadEstimator,
                               masses: tuple = (0.5, 1.0, 1.5, 2.0),
                               reps: int = 8, seed: int = 0) -> dict:
    """Held-out check: mean estimate at the release moment per true mass."""
    env = PickPlaceEnv(cfg)
    rng = random.Random(seed)
    report = {}
    net.eval()
    for m in masses:
        est = []
        for _ in range(reps):
            frames, _, contacts = generate_carry_episode(env, rng, m,
                                                         gentle=True)
            attached = np.nonzero(contacts > 0.5)[0]
            if len(attached) < 50:
                continue
            t_rel = attached[-1]
            with torch.no_grad():
                mass_hat, _ = net(torch.as_tensor(frames[:t_rel + 1])
                                  .unsqueeze(0))
            est.append(float(mass_hat[0, -1]))
        mean = sum(est) / len(est)
        report[m] = {"estimate": mean, "rel_err": abs(mean - m) / m,
                     "n": len(est)}
    return report
