"""Recurrent payload estimator: online mass and attachment inference.

A small LSTM watches the proprioceptive stream (arm tracking errors, applied
torques, base state, last action) and outputs a mass estimate and an
attachment probability. The arm controller compensates link gravity but not
payload gravity, so an attached payload shows up as a persistent, torque-
correlated tracking deficit; the network learns to read it out faster and
more robustly than a steady-state analytic inversion.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn

from .configs import EstimatorParams


class PayloadEstimator(nn.Module):
    def __init__(self, input_dim: int, params: EstimatorParams):
        super().__init__()
        self.input_dim = input_dim
        self.params = params
        self.lstm = nn.LSTM(input_dim, params.hidden_size,
                            num_layers=params.num_layers, batch_first=True)
        self.head = nn.Linear(params.hidden_size, 2)

    def init_hidden(self, n: int):
        h = torch.zeros(self.params.num_layers, n, self.params.hidden_size)
        return (h, h.clone())

    def _decode(self, feats: torch.Tensor):
        out = self.head(feats)
        p = self.params
        mass = p.mass_min + torch.sigmoid(out[..., 0]) * (p.mass_max - p.mass_min)
        contact = torch.sigmoid(out[..., 1])
        return mass, contact

    @torch.no_grad()
    def step(self, frame: torch.Tensor, hidden):
        """One streaming update. frame is [N, input_dim]; returns
        (mass [N], contact [N], hidden)."""
        feats, hidden = self.lstm(frame.unsqueeze(1), hidden)
        mass, contact = self._decode(feats.squeeze(1))
        return mass, contact, hidden

    def forward(self, seq: torch.Tensor, hidden=None):
        """Full-sequence pass. seq is [N, T, input_dim]; returns
        (mass [N, T], contact [N, T])."""
        feats, _ = self.lstm(seq, hidden)
        return self._decode(feats)


def estimator_loss(net: PayloadEstimator, seq: torch.Tensor,
                   mass_true: torch.Tensor, contact_true: torch.Tensor,
                   mask: torch.Tensor):
    """Masked loss over padded sequence batches.

    mass_true/contact_true/mask are [N, T]. The mass target is the true mass
    while attached and the prior otherwise, so the estimate decays to the
    prior when nothing is held.
    """
    p = net.params
    mass_hat, contact_hat = net(seq)
    mass_target = torch.where(contact_true > 0.5, mass_true,
                              torch.full_like(mass_true, p.mass_prior))
    denom = mask.sum().clamp(min=1.0)
    mass_err = ((mass_hat - mass_target) ** 2 * mask).sum() / denom
    eps = 1e-7
    c = contact_hat.clamp(eps, 1.0 - eps)
    bce = -(contact_true * torch.log(c)
            + (1.0 - contact_true) * torch.log(1.0 - c))
    contact_err = (bce * mask).sum() / denom
    loss = p.mass_weight * mass_err + p.contact_weight * contact_err
    return loss, {"mass_mse": float(mass_err.detach()),
                  "contact_bce": float(contact_err.detach())}


class SequenceBuffer:
    """Completed-episode store feeding estimator updates.

    Keeps up to ``capacity`` episodes of (frames, mass, contact) and serves
    padded minibatches of the most informative suffix of each episode.
    """

    def __init__(self, capacity: int = 256, max_len: int = 256):
        self.capacity = capacity
        self.max_len = max_len
        self.episodes: list[tuple[np.ndarray, float, np.ndarray]] = []
        self._next = 0

    def __len__(self):
        return len(self.episodes)

    def add(self, frames: np.ndarray, mass: float, contact: np.ndarray):
        if frames.shape[0] > self.max_len:
            frames = frames[-self.max_len:]
            contact = contact[-self.max_len:]
        item = (frames.astype(np.float32), float(mass),
                contact.astype(np.float32))
        if len(self.episodes) < self.capacity:
            self.episodes.append(item)
        else:
            self.episodes[self._next] = item
            self._next = (self._next + 1) % self.capacity

    def sample(self, rng: np.random.Generator, batch: int):
        idx = rng.integers(0, len(self.episodes), size=min(batch, len(self.episodes)))
        chosen = [self.episodes[i] for i in idx]
        T = max(f.shape[0] for f, _, _ in chosen)
        N = len(chosen)
        D = chosen[0][0].shape[1]
        seq = np.zeros((N, T, D), dtype=np.float32)
        mass = np.zeros((N, T), dtype=np.float32)
        contact = np.zeros((N, T), dtype=np.float32)
        mask = np.zeros((N, T), dtype=np.float32)
        for i, (f, m, c) in enumerate(chosen):
            n = f.shape[0]
            seq[i, :n] = f
            mass[i, :n] = m
            contact[i, :n] = c
            mask[i, :n] = 1.0
        return (torch.as_tensor(seq), torch.as_tensor(mass),
                torch.as_tensor(contact), torch.as_tensor(mask))


def save_estimator(path: str, net: PayloadEstimator) -> None:
    torch.save({"state": net.state_dict(), "input_dim": net.input_dim,
                "params": net.params.__dict__}, path)


def load_estimator(path: str) -> PayloadEstimator:
    blob = torch.load(path, map_location="cpu", weights_only=False)
    net = PayloadEstimator(blob["input_dim"], EstimatorParams(**blob["params"]))
    net.load_state_dict(blob["state"])
    net.eval()
    return net
