"""PPO internals: GAE against a direct-sum oracle, gradient verification."""

import numpy as np
import pytest
import torch

from dynpick.configs import PolicyParams, PPOParams
from dynpick.policy import ActorCritic, load_policy, save_policy
from dynpick.ppo import (RolloutBuffer, compute_gae, flat_grad, numeric_grad,
                         ppo_loss, ppo_update)


def brute_force_gae(rewards, values, dones, last_values, gamma, lam):
    """Direct expansion of the advantage sum, O(T^2) per env."""
    T, N = rewards.shape
    adv = np.zeros((T, N))
    for n in range(N):
        for t in range(T):
            coef = 1.0
            s = 0.0
            for l in range(t, T):
                alive = 1.0 - dones[l, n]
                nv = last_values[n] if l == T - 1 else values[l + 1, n]
                delta = rewards[l, n] + gamma * nv * alive - values[l, n]
                s += coef * delta
                coef *= gamma * lam * alive
                if coef == 0.0:
                    break
            adv[t, n] = s
    return adv


def test_gae_matches_brute_force_expansion():
    rng = np.random.default_rng(0)
    T, N = 40, 5
    rewards = rng.normal(size=(T, N))
    values = rng.normal(size=(T, N))
    dones = (rng.random((T, N)) < 0.08).astype(np.float64)
    last_values = rng.normal(size=N)
    adv, ret = compute_gae(rewards, values, dones, last_values, 0.996, 0.95)
    want = brute_force_gae(rewards, values, dones, last_values, 0.996, 0.95)
    np.testing.assert_allclose(adv, want, atol=1e-10)
    np.testing.assert_allclose(ret, want + values, atol=1e-10)


def test_gae_terminal_step_has_no_bootstrap():
    T, N = 3, 1
    rewards = np.array([[1.0], [1.0], [1.0]])
    values = np.zeros((T, N))
    dones = np.array([[0.0], [1.0], [0.0]])
    last = np.array([100.0])
    adv, _ = compute_gae(rewards, values, dones, last, 0.9, 1.0)
    # episode break after t=1: t<=1 must not see the bootstrap value
    assert adv[1, 0] == pytest.approx(1.0)
    assert adv[0, 0] == pytest.approx(1.0 + 0.9 * 1.0)
    assert adv[2, 0] == pytest.approx(1.0 + 0.9 * 100.0)


def test_rollout_buffer_flattens_time_major():
    buf = RolloutBuffer(horizon=3, n_envs=2, obs_dim=4, act_dim=2, priv_dim=1)
    for t in range(3):
        obs = np.full((2, 4), t, dtype=np.float32)
        obs[1] += 0.5
        buf.add(obs, np.zeros((2, 1)), np.zeros((2, 2)), np.zeros(2),
                np.zeros(2), np.zeros(2), np.zeros(2))
    assert buf.full()
    batch = buf.batch(np.zeros(2), 0.99, 0.95)
    assert batch["obs"].shape == (6, 4)
    # row order is (t0,e0), (t0,e1), (t1,e0), ...
    assert batch["obs"][0, 0] == 0.0 and batch["obs"][1, 0] == 0.5
    assert batch["obs"][2, 0] == 1.0 and batch["obs"][5, 0] == 2.5


def tiny_setup(seed=0, n=16, double=True):
    torch.manual_seed(seed)
    params = PolicyParams(actor_widths=(4,), critic_widths=(4,),
                          init_log_std=-0.3)
    net = ActorCritic(obs_dim=5, act_dim=3, priv_dim=2, params=params)
    if double:
        net.double()
    dt = torch.float64 if double else torch.float32
    g = torch.Generator().manual_seed(seed + 1)
    batch = {
        "obs": torch.randn(n, 5, generator=g, dtype=dt),
        "priv": torch.randn(n, 2, generator=g, dtype=dt),
        "actions": torch.randn(n, 3, generator=g, dtype=dt),
        "logp": torch.randn(n, generator=g, dtype=dt) * 0.1 - 1.5,
        "adv": torch.randn(n, generator=g, dtype=dt),
        "returns": torch.randn(n, generator=g, dtype=dt),
    }
    return net, batch


def test_analytic_gradient_matches_central_differences():
    net, batch = tiny_setup()
    cfg = PPOParams()
    g_a = flat_grad(net, batch, cfg)
    g_n = numeric_grad(net, batch, cfg, eps=1e-6)
    rel = (g_a - g_n).norm() / g_a.norm()
    assert float(rel) < 1e-4


def test_loss_stats_and_clip_fraction():
    net, batch = tiny_setup(seed=3)
    cfg = PPOParams()
    # old logp equal to current -> ratio 1 everywhere, no clipping
    with torch.no_grad():
        logp, _, _ = net.evaluate(batch["obs"], batch["priv"],
                                  batch["actions"])
    batch = dict(batch, logp=logp)
    loss, stats = ppo_loss(net, batch, cfg)
    assert stats["clip_frac"] == 0.0
    adv = batch["adv"]
    adv_n = (adv - adv.mean()) / (adv.std() + 1e-8)
    assert stats["policy_loss"] == pytest.approx(float(-adv_n.mean()), abs=1e-8)
    assert torch.isfinite(loss)


def test_ppo_update_changes_parameters_deterministically():
    net1, batch = tiny_setup(seed=5, double=False)
    net2, _ = tiny_setup(seed=5, double=False)
    cfg = PPOParams(epochs=2, minibatches=2)
    opt1 = torch.optim.Adam(net1.parameters(), lr=1e-3)
    opt2 = torch.optim.Adam(net2.parameters(), lr=1e-3)
    before = torch.cat([p.detach().reshape(-1) for p in net1.parameters()]).clone()
    s1 = ppo_update(net1, opt1, batch, cfg, torch.Generator().manual_seed(7))
    s2 = ppo_update(net2, opt2, batch, cfg, torch.Generator().manual_seed(7))
    after1 = torch.cat([p.detach().reshape(-1) for p in net1.parameters()])
    after2 = torch.cat([p.detach().reshape(-1) for p in net2.parameters()])
    assert not torch.equal(before, after1)
    assert torch.equal(after1, after2)
    assert s1 == s2


def test_policy_save_load_roundtrip(tmp_path):
    net, batch = tiny_setup(seed=9, double=False)
    path = str(tmp_path / "p.pt")
    save_policy(path, net, meta={"iteration": 3})
    loaded, meta = load_policy(path, PolicyParams(actor_widths=(4,),
                                                  critic_widths=(4,),
                                                  init_log_std=-0.3))
    assert meta["iteration"] == 3
    with torch.no_grad():
        a = net.actor(batch["obs"].float())
        b = loaded.actor(batch["obs"].float())
    assert torch.equal(a, b)
