"""Proximal policy optimisation with a diagonal Gaussian policy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import TrainingError
from ..neural import Adam, Network

_LOG2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class PPOConfig:
    gamma: float = 0.99
    lam: float = 0.95
    clip: float = 0.2
    epochs: int = 10
    minibatch: int = 64
    lr: float = 3e-4
    value_coef: float = 0.5
    entropy_coef: float = 0.0
    init_log_std: float = -0.5


def gae(rewards, values, last_value, terminals, gamma, lam):
    """Generalized advantage estimates and returns for one trajectory.

    ``values[t]`` estimates state ``t``; ``last_value`` bootstraps the state
    after the final step unless that step is terminal.
    """
    rewards = np.asarray(rewards, float)
    values = np.asarray(values, float)
    terminals = np.asarray(terminals, float)
    T = rewards.size
    adv = np.zeros(T)
    nxt = float(last_value)
    running = 0.0
    for t in range(T - 1, -1, -1):
        nonterm = 1.0 - terminals[t]
        delta = rewards[t] + gamma * nxt * nonterm - values[t]
        running = delta + gamma * lam * nonterm * running
        adv[t] = running
        nxt = values[t]
    return adv, adv + values


def clipped_surrogate(ratio, advantage, eps):
    """Elementwise ``min(r A, clip(r, 1-eps, 1+eps) A)``."""
    ratio = np.asarray(ratio, float)
    advantage = np.asarray(advantage, float)
    return np.minimum(ratio * advantage, np.clip(ratio, 1 - eps, 1 + eps) * advantage)


class GaussianPolicy:
    """Mean network plus a state-independent log standard deviation."""

    def __init__(self, mean: Network, act_dim: int, init_log_std=-0.5):
        self.mean = mean
        self.log_std = np.full(act_dim, float(init_log_std))
        self.d_log_std = np.zeros(act_dim)

    def params(self):
        return self.mean.params() + [self.log_std]

    def grads(self):
        return self.mean.grads() + [self.d_log_std]

    def log_prob(self, mu, a):
        s = np.exp(self.log_std)
        z = (a - mu) / s
        return -0.5 * np.sum(z * z, -1) - np.sum(self.log_std) - 0.5 * a.shape[-1] * _LOG2PI

    def entropy(self) -> float:
        return float(np.sum(self.log_std + 0.5 * (_LOG2PI + 1.0)))

    def sample(self, x, rng):
        mu = self.mean.forward(np.asarray(x, float)[None])[0]
        a = mu + np.exp(self.log_std) * rng.standard_normal(mu.shape)
        return a, float(self.log_prob(mu, a))

    def mode(self, x):
        return self.mean.forward(np.asarray(x, float)[None])[0]


class PPO:
    def __init__(self, policy: GaussianPolicy, value: Network, config: PPOConfig, rng):
        self.policy = policy
        self.value = value
        self.cfg = config
        self.rng = rng
        self.opt = Adam(policy.params() + value.params(), lr=config.lr)
        self.updates = 0

    def update(self, x, a, logp_old, adv, returns) -> dict:
        """Clipped-surrogate epochs over one batch of probe data."""
        cfg = self.cfg
        n = x.shape[0]
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
        stats = {}
        for _ in range(cfg.epochs):
            order = self.rng.permutation(n)
            for start in range(0, n, cfg.minibatch):
                idx = order[start:start + cfg.minibatch]
                stats = self._minibatch(x[idx], a[idx], logp_old[idx], adv[idx], returns[idx])
        self.updates += 1
        return stats

    def _minibatch(self, x, a, logp_old, adv, ret):
        cfg = self.cfg
        m = x.shape[0]
        pol = self.policy
        mu = pol.mean.forward(x)
        logp = pol.log_prob(mu, a)
        ratio = np.exp(logp - logp_old)
        surr = clipped_surrogate(ratio, adv, cfg.clip)
        v = self.value.forward(x)[:, 0]
        v_loss = float(np.mean((v - ret) ** 2))
        loss = -float(np.mean(surr)) + cfg.value_coef * v_loss - cfg.entropy_coef * pol.entropy()
        if not np.isfinite(loss):
            raise TrainingError("PPO loss became non-finite", step=self.updates)
        # d(-surr)/dlogp is -A r where the unclipped term is the active minimum
        active = ratio * adv <= np.clip(ratio, 1 - cfg.clip, 1 + cfg.clip) * adv
        dlogp = -(active * adv * ratio) / m
        s2 = np.exp(2 * pol.log_std)
        dmu = dlogp[:, None] * (a - mu) / s2
        pol.mean.zero_grad()
        pol.mean.backward(dmu)
        pol.d_log_std[:] = np.sum(dlogp[:, None] * ((a - mu) ** 2 / s2 - 1.0), 0)
        pol.d_log_std -= cfg.entropy_coef
        self.value.zero_grad()
        self.value.backward((cfg.value_coef * 2.0 * (v - ret) / m)[:, None])
        self.opt.step(pol.grads() + self.value.grads())
        np.clip(pol.log_std, -5.0, 1.0, out=pol.log_std)
        return {"loss": loss, "value_loss": v_loss, "clip_frac": float(np.mean(~active))}
