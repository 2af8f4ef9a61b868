"""On-policy training loop: vectorized rollouts, PPO updates, curriculum."""

from __future__ import annotations

import json
import logging
import os
import random
import time
from collections import deque

import numpy as np
import torch

from .configs import ExperimentConfig
from .curriculum import (CurriculumState, end_iteration, record_outcomes)
from .episodes import sample_episode
from .estimator import (PayloadEstimator, SequenceBuffer, estimator_loss,
                        save_estimator)
from .policy import ActorCritic, save_policy
from .ppo import RolloutBuffer, ppo_update
from .task_env import EST_FRAME_DIM, N_ACTIONS, PickPlaceEnv

log = logging.getLogger(__name__)


def track_outcomes(stats: dict) -> tuple:
    """Per-episode (successes, attempts) for the pick/place/release tracks.

    Each track only counts an attempt once the previous one succeeded, so
    early training measures pick quality rather than drowning the later
    tracks in zero-rates they had no chance to affect.
    """
    pick = (int(stats["pick_success"]), 1)
    place = (int(stats["place_success"]), int(stats["pick_success"]))
    release = (int(stats["release_success"] and stats["success"]),
               int(stats["place_success"]))
    return pick, place, release


class Trainer:
    """Owns the envs, networks, RNG streams, and the iteration loop."""

    def __init__(self, cfg: ExperimentConfig, out_dir: str | None = None):
        torch.set_num_threads(1)
        self.cfg = cfg
        self.out_dir = out_dir
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)

        tr = cfg.train
        seed = tr.seed
        self.sampler_rng = random.Random(seed)
        self.act_gen = torch.Generator().manual_seed(seed + 1)
        self.perm_gen = torch.Generator().manual_seed(seed + 2)
        self.buf_rng = np.random.default_rng(seed + 3)
        torch.manual_seed(seed + 4)

        self.envs = [PickPlaceEnv(cfg) for _ in range(tr.n_envs)]
        obs_dim = self.envs[0].obs_dim
        priv_dim = 4
        self.net = ActorCritic(obs_dim, N_ACTIONS, priv_dim, cfg.policy)
        self.optimizer = torch.optim.Adam(self.net.parameters(), lr=cfg.ppo.lr)

        self.estimator = None
        self.est_optimizer = None
        self.est_hidden = None
        self.seq_buffer = None
        if tr.estimator_enabled:
            self.estimator = PayloadEstimator(EST_FRAME_DIM, cfg.estimator)
            self.est_optimizer = torch.optim.Adam(self.estimator.parameters(),
                                                  lr=cfg.estimator.lr)
            self.est_hidden = self.estimator.init_hidden(tr.n_envs)
            self.seq_buffer = SequenceBuffer()
            self._cur_frames = [[] for _ in range(tr.n_envs)]
            self._cur_contacts = [[] for _ in range(tr.n_envs)]

        self.curriculum = CurriculumState.fresh(cfg.curriculum)
        self.buffer = RolloutBuffer(tr.rollout_len, tr.n_envs, obs_dim,
                                    N_ACTIONS, priv_dim)

        self.obs = np.zeros((tr.n_envs, obs_dim), dtype=np.float32)
        self.priv = np.zeros((tr.n_envs, priv_dim), dtype=np.float32)
        self._returns = [0.0] * tr.n_envs
        self.recent = deque(maxlen=200)   # (return, stats) of finished episodes
        self.iteration = 0
        self.episodes_done = 0
        self._metrics_f = None
        if out_dir:
            self._metrics_f = open(os.path.join(out_dir, "metrics.jsonl"), "w")

        for i, env in enumerate(self.envs):
            self._reset_env(i)

    # ------------------------------------------------------------------

    def _levels(self) -> dict:
        if self.cfg.train.curriculum_enabled:
            return dict(self.curriculum.levels)
        lv = self.cfg.curriculum.init_level
        return {t: lv for t in ("pick", "place", "release")}

    def _reset_env(self, i: int) -> None:
        spec = sample_episode(self.sampler_rng, self.cfg.ranges, self._levels())
        self.obs[i] = self.envs[i].reset(spec)
        self.priv[i] = self.envs[i].privileged()
        self._returns[i] = 0.0
        if self.estimator is not None:
            self.est_hidden[0][:, i, :] = 0.0
            self.est_hidden[1][:, i, :] = 0.0
            self._cur_frames[i] = []
            self._cur_contacts[i] = []

    def _estimator_pass(self) -> None:
        """Refresh each env's payload estimates from the live stream."""
        frames = np.stack([e.estimator_frame() for e in self.envs])
        for i, env in enumerate(self.envs):
            self._cur_frames[i].append(frames[i])
            self._cur_contacts[i].append(1.0 if env.world.attached else 0.0)
        with torch.no_grad():
            mass, contact, self.est_hidden = self.estimator.step(
                torch.as_tensor(frames), self.est_hidden)
        for i, env in enumerate(self.envs):
            env.set_estimates(float(mass[i]), float(contact[i]))

    def train(self, iters: int | None = None,
              time_budget_s: float | None = None,
              stop_fn=None) -> dict:
        """Run the training loop; returns a summary dict."""
        tr = self.cfg.train
        iters = tr.iters if iters is None else iters
        budget = tr.time_budget_s if time_budget_s is None else time_budget_s
        t0 = time.monotonic()
        for _ in range(iters):
            self.run_iteration()
            if budget is not None and time.monotonic() - t0 > budget:
                log.info("time budget reached at iteration %d", self.iteration)
                break
            if stop_fn is not None and stop_fn(self):
                break
        if self.out_dir:
            self.save_checkpoint("final")
        if self._metrics_f:
            self._metrics_f.flush()
        return self.summary()

    def run_iteration(self) -> dict:
        tr = self.cfg.train
        buf = self.buffer
        buf.reset()
        t_start = time.monotonic()
        for _ in range(tr.rollout_len):
            if self.estimator is not None:
                self._estimator_pass()
            obs_t = torch.as_tensor(self.obs)
            priv_t = torch.as_tensor(self.priv)
            action, logp, value, _ = self.net.act(obs_t, priv_t, self.act_gen)
            act = action.numpy()
            obs_before = self.obs.copy()
            priv_before = self.priv.copy()
            rewards = np.zeros(tr.n_envs)
            dones = np.zeros(tr.n_envs)
            for i, env in enumerate(self.envs):
                obs_i, r, done, _ = env.step(act[i])
                rewards[i] = r
                self._returns[i] += r
                if done:
                    dones[i] = 1.0
                    stats = env.episode_stats()
                    self.recent.append((self._returns[i], stats))
                    self.episodes_done += 1
                    record_outcomes(self.curriculum, *track_outcomes(stats))
                    if self.seq_buffer is not None and self._cur_frames[i]:
                        self.seq_buffer.add(np.array(self._cur_frames[i]),
                                            env.spec.obj_mass,
                                            np.array(self._cur_contacts[i]))
                    self._reset_env(i)
                else:
                    self.obs[i] = obs_i
                    self.priv[i] = env.privileged()
            buf.add(obs_before, priv_before, act, logp.numpy(), value.numpy(),
                    rewards, dones)

        with torch.no_grad():
            last_val = self.net.value(torch.as_tensor(self.obs),
                                      torch.as_tensor(self.priv)).numpy()
        batch = buf.batch(last_val, self.cfg.ppo.gamma, self.cfg.ppo.lam)
        stats = ppo_update(self.net, self.optimizer, batch, self.cfg.ppo,
                           self.perm_gen)

        if self.estimator is not None and len(self.seq_buffer) >= 8:
            est_stats = self._update_estimator()
            stats.update(est_stats)

        advanced = {}
        if tr.curriculum_enabled:
            advanced = end_iteration(self.curriculum, self.cfg.curriculum)
        else:
            self.curriculum.iteration += 1

        self.iteration += 1
        elapsed = time.monotonic() - t_start
        row = self._metrics_row(stats, advanced)
        if self._metrics_f:
            self._metrics_f.write(json.dumps(row) + "\n")
        if self.iteration % tr.log_every == 0 or advanced:
            steps = tr.n_envs * tr.rollout_len
            log.info("iter %d | steps/s %.0f | return %.1f | success %.2f | "
                     "levels %s | adv %d",
                     self.iteration, steps / max(elapsed, 1e-9),
                     row["mean_return"] or 0.0, row["success_rate"] or 0.0,
                     {k: round(v, 2) for k, v in self.curriculum.levels.items()},
                     self.curriculum.advances)
        if self.out_dir and self.iteration % tr.checkpoint_every == 0:
            self.save_checkpoint(f"iter{self.iteration:06d}")
        return row

    def _update_estimator(self) -> dict:
        agg = {}
        for _ in range(self.cfg.train.estimator_updates):
            seq, mass, contact, mask = self.seq_buffer.sample(self.buf_rng, 8)
            loss, st = estimator_loss(self.estimator, seq, mass, contact, mask)
            self.est_optimizer.zero_grad()
            loss.backward()
            self.est_optimizer.step()
            for k, v in st.items():
                agg[k] = agg.get(k, 0.0) + v / self.cfg.train.estimator_updates
        return agg

    def _metrics_row(self, stats: dict, advanced: dict) -> dict:
        rets = [r for r, _ in self.recent]
        succ = [1.0 if st["success"] else 0.0 for _, st in self.recent]
        row = {
            "iteration": self.iteration,
            "episodes": self.episodes_done,
            "mean_return": sum(rets) / len(rets) if rets else None,
            "success_rate": sum(succ) / len(succ) if succ else None,
            "levels": {k: round(v, 2) for k, v in self.curriculum.levels.items()},
            "advances": self.curriculum.advances,
            "advanced": {k: bool(v) for k, v in advanced.items()},
        }
        row.update({k: round(float(v), 6) for k, v in stats.items()})
        return row

    def summary(self) -> dict:
        rets = [r for r, _ in self.recent]
        succ = [1.0 if st["success"] else 0.0 for _, st in self.recent]
        return {
            "iterations": self.iteration,
            "episodes": self.episodes_done,
            "mean_return": sum(rets) / len(rets) if rets else None,
            "success_rate": sum(succ) / len(succ) if succ else None,
            "levels": dict(self.curriculum.levels),
            "advances": self.curriculum.advances,
        }

    def save_checkpoint(self, tag: str) -> None:
        path = os.path.join(self.out_dir, f"policy_{tag}.pt")
        save_policy(path, self.net, meta={
            "iteration": self.iteration,
            "levels": dict(self.curriculum.levels),
            "advances": self.curriculum.advances,
        })
        if self.estimator is not None:
            save_estimator(os.path.join(self.out_dir, f"estimator_{tag}.pt"),
                           self.estimator)

    def close(self) -> None:
        if self._metrics_f:
            self._metrics_f.close()
            self._metrics_f = None
