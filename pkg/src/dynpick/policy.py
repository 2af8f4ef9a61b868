"""Actor-critic networks: Gaussian MLP actor, privileged-input critic."""

from __future__ import annotations

import math

import torch
import torch.nn as nn

from .configs import PolicyParams

LOG_2PI = math.log(2.0 * math.pi)


def _mlp(in_dim: int, widths, out_dim: int, slope: float) -> nn.Sequential:
    layers = []
    d = in_dim
    for w in widths:
        layers.append(nn.Linear(d, w))
        layers.append(nn.LeakyReLU(slope))
        d = w
    layers.append(nn.Linear(d, out_dim))
    return nn.Sequential(*layers)


class ActorCritic(nn.Module):
    """Diagonal-Gaussian policy over raw actions plus a state-value head.

    The critic sees the observation concatenated with privileged extras that
    are only available in simulation.
    """

    def __init__(self, obs_dim: int, act_dim: int, priv_dim: int,
                 params: PolicyParams):
        super().__init__()
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.priv_dim = priv_dim
        self.actor = _mlp(obs_dim, params.actor_widths, act_dim,
                          params.negative_slope)
        self.critic = _mlp(obs_dim + priv_dim, params.critic_widths, 1,
                           params.negative_slope)
        self.log_std = nn.Parameter(
            torch.full((act_dim,), float(params.init_log_std)))

    def value(self, obs: torch.Tensor, priv: torch.Tensor) -> torch.Tensor:
        return self.critic(torch.cat([obs, priv], dim=-1)).squeeze(-1)

    @torch.no_grad()
    def act(self, obs: torch.Tensor, priv: torch.Tensor,
            generator: torch.Generator | None = None):
        """Sample actions; returns (action, logp, value, mean)."""
        mean = self.actor(obs)
        std = self.log_std.exp().expand_as(mean)
        noise = torch.randn(mean.shape, generator=generator, dtype=mean.dtype)
        action = mean + std * noise
        logp = self._log_prob(mean, std, action)
        val = self.value(obs, priv)
        return action, logp, val, mean

    def _log_prob(self, mean, std, action):
        z = (action - mean) / std
        return (-0.5 * (z * z + LOG_2PI) - torch.log(std)).sum(-1)

    def evaluate(self, obs, priv, action):
        """(logp, entropy, value) with gradients."""
        mean = self.actor(obs)
        std = self.log_std.exp().expand_as(mean)
        logp = self._log_prob(mean, std, action)
        entropy = (0.5 * (1.0 + LOG_2PI) + self.log_std).sum(-1)
        entropy = entropy.expand(obs.shape[0])
        value = self.value(obs, priv)
        return logp, entropy, value


def save_policy(path: str, net: ActorCritic, meta: dict | None = None) -> None:
    torch.save({"state": net.state_dict(),
                "obs_dim": net.obs_dim, "act_dim": net.act_dim,
                "priv_dim": net.priv_dim,
                "meta": meta or {}}, path)


def load_policy(path: str, params: PolicyParams) -> tuple:
    blob = torch.load(path, map_location="cpu", weights_only=False)
    net = ActorCritic(blob["obs_dim"], blob["act_dim"], blob["priv_dim"], params)
    net.load_state_dict(blob["state"])
    net.eval()
    return net, blob.get("meta", {})
