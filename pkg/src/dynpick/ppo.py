"""PPO with clipped surrogate objective and GAE advantages."""

from __future__ import annotations

import numpy as np
import torch

from .configs import PPOParams
from .policy import ActorCritic


def compute_gae(rewards: np.ndarray, values: np.ndarray, dones: np.ndarray,
                last_values: np.ndarray, gamma: float, lam: float):
    """Generalized advantage estimation over a [T, N] rollout.

    ``dones[t]`` marks transitions where the episode ended at step t (no
    bootstrap across the boundary). Returns (advantages, returns), each [T, N].
    """
    T, N = rewards.shape
    adv = np.zeros((T, N), dtype=np.float64)
    gae = np.zeros(N, dtype=np.float64)
    next_val = last_values.astype(np.float64)
    for t in range(T - 1, -1, -1):
        alive = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_val * alive - values[t]
        gae = delta + gamma * lam * alive * gae
        adv[t] = gae
        next_val = values[t]
    return adv, adv + values


class RolloutBuffer:
    """Fixed-size on-policy storage for [T, N] rollouts."""

    def __init__(self, horizon: int, n_envs: int, obs_dim: int, act_dim: int,
                 priv_dim: int):
        self.horizon = horizon
        self.n_envs = n_envs
        shape = (horizon, n_envs)
        self.obs = np.zeros(shape + (obs_dim,), dtype=np.float32)
        self.priv = np.zeros(shape + (priv_dim,), dtype=np.float32)
        self.actions = np.zeros(shape + (act_dim,), dtype=np.float32)
        self.logp = np.zeros(shape, dtype=np.float64)
        self.values = np.zeros(shape, dtype=np.float64)
        self.rewards = np.zeros(shape, dtype=np.float64)
        self.dones = np.zeros(shape, dtype=np.float64)
        self.t = 0

    def add(self, obs, priv, action, logp, value, reward, done):
        i = self.t
        self.obs[i] = obs
        self.priv[i] = priv
        self.actions[i] = action
        self.logp[i] = logp
        self.values[i] = value
        self.rewards[i] = reward
        self.dones[i] = done
        self.t += 1

    def full(self) -> bool:
        return self.t >= self.horizon

    def reset(self):
        self.t = 0

    def batch(self, last_values: np.ndarray, gamma: float, lam: float) -> dict:
        adv, ret = compute_gae(self.rewards, self.values, self.dones,
                               last_values, gamma, lam)
        flat = lambda a: a.reshape(-1, *a.shape[2:])
        return {
            "obs": torch.as_tensor(flat(self.obs)),
            "priv": torch.as_tensor(flat(self.priv)),
            "actions": torch.as_tensor(flat(self.actions)),
            "logp": torch.as_tensor(flat(self.logp)),
            "adv": torch.as_tensor(flat(adv)),
            "returns": torch.as_tensor(flat(ret)),
        }


def ppo_loss(net: ActorCritic, batch: dict, cfg: PPOParams):
    """Clipped-surrogate PPO loss on one minibatch.

    Returns (loss, stats). Kept as a pure function of the network parameters
    so the same code path serves both training and gradient verification.
    """
    obs = batch["obs"]
    adv = batch["adv"]
    if cfg.normalize_adv:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    logp, entropy, value = net.evaluate(obs, batch["priv"], batch["actions"])
    ratio = torch.exp(logp - batch["logp"])
    clipped = torch.clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip)
    policy_loss = -torch.min(ratio * adv, clipped * adv).mean()
    value_loss = ((value - batch["returns"]) ** 2).mean()
    ent = entropy.mean()
    loss = (policy_loss + cfg.vf_coef * value_loss - cfg.ent_coef * ent)
    stats = {
        "policy_loss": float(policy_loss.detach()),
        "value_loss": float(value_loss.detach()),
        "entropy": float(ent.detach()),
        "clip_frac": float(((ratio - 1.0).abs() > cfg.clip)
                           .float().mean().detach()),
    }
    return loss, stats


def ppo_update(net: ActorCritic, optimizer: torch.optim.Optimizer,
               batch: dict, cfg: PPOParams,
               generator: torch.Generator | None = None) -> dict:
    """Run the epoch/minibatch sweep of one PPO update; returns mean stats."""
    n = batch["obs"].shape[0]
    agg: dict[str, float] = {}
    count = 0
    for _ in range(cfg.epochs):
        perm = torch.randperm(n, generator=generator)
        for chunk in perm.chunk(cfg.minibatches):
            mb = {k: v[chunk] for k, v in batch.items()}
            loss, stats = ppo_loss(net, mb, cfg)
            optimizer.zero_grad()
            loss.backward()
            torch.nn.utils.clip_grad_norm_(net.parameters(), cfg.max_grad_norm)
            optimizer.step()
            for k, v in stats.items():
                agg[k] = agg.get(k, 0.0) + v
            count += 1
    return {k: v / count for k, v in agg.items()}


def flat_params(net: torch.nn.Module) -> torch.Tensor:
    return torch.cat([p.detach().reshape(-1) for p in net.parameters()])


def set_flat_params(net: torch.nn.Module, flat: torch.Tensor) -> None:
    idx = 0
    for p in net.parameters():
        n = p.numel()
        with torch.no_grad():
            p.copy_(flat[idx:idx + n].reshape(p.shape))
        idx += n


def flat_grad(net: ActorCritic, batch: dict, cfg: PPOParams) -> torch.Tensor:
    """Analytic gradient of the PPO loss, flattened over all parameters."""
    net.zero_grad(set_to_none=True)
    loss, _ = ppo_loss(net, batch, cfg)
    loss.backward()
    grads = []
    for p in net.parameters():
        g = p.grad
        grads.append(torch.zeros_like(p).reshape(-1) if g is None
                     else g.reshape(-1))
    return torch.cat(grads)


def numeric_grad(net: ActorCritic, batch: dict, cfg: PPOParams,
                 eps: float = 1e-5) -> torch.Tensor:
    """Central-difference gradient of the PPO loss; for verification only."""
    base = flat_params(net).clone()
    out = torch.zeros_like(base)
    for i in range(base.numel()):
        for sign in (1.0, -1.0):
            pert = base.clone()
            pert[i] += sign * eps
            set_flat_params(net, pert)
            with torch.enable_grad():
                loss, _ = ppo_loss(net, batch, cfg)
            out[i] += sign * float(loss.detach())
    set_flat_params(net, base)
    return out / (2.0 * eps)
