"""Twin delayed deep deterministic policy gradient."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractViolation, TrainingError
from ..neural import Adam, Network
from .critic import Critic


@dataclass(frozen=True)
class TD3Config:
    gamma: float = 0.99
    tau: float = 0.005
    policy_delay: int = 2
    target_noise: float = 0.2
    noise_clip: float = 0.5
    exploration_noise: float = 0.1
    batch_size: int = 256
    capacity: int = 200_000
    total_steps: int = 60_000
    warmup_steps: int = 5_000
    update_every: int = 1
    lr_actor: float = 3e-4
    lr_critic: float = 3e-4
    hidden: tuple = field(default=(128, 128, 128))

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ContractViolation("gamma must lie in (0, 1)")
        if self.policy_delay < 1:
            raise ContractViolation("policy_delay must be >= 1")
        if self.capacity < self.batch_size:
            raise ContractViolation("replay capacity must be >= batch size")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    @classmethod
    def from_dict(cls, d: dict) -> "TD3Config":
        known = set(cls.__dataclass_fields__)
        return cls(**{k: v for k, v in d.items() if k in known})


def td3_target(reward, terminal, q1_next, q2_next, gamma) -> np.ndarray:
    """``y = r + gamma * (1 - terminal) * min(Q1', Q2')``."""
    return np.asarray(reward) + gamma * (1.0 - np.asarray(terminal)) * np.minimum(q1_next,
                                                                                  q2_next)


class TD3:
    def __init__(self, actor: Network, critic1: Critic, critic2: Critic, config: TD3Config,
                 rng: np.random.Generator):
        self.cfg = config
        self.actor = actor
        self.critic1 = critic1
        self.critic2 = critic2
        self.actor_t = actor.clone()
        self.critic1_t = critic1.clone()
        self.critic2_t = critic2.clone()
        self.actor_opt = Adam(actor.params(), lr=config.lr_actor)
        self.critic_opt = Adam(critic1.params() + critic2.params(), lr=config.lr_critic)
        self.rng = rng
        self.critic_updates = 0
        self.actor_updates = 0

    def act(self, x) -> np.ndarray:
        return self.actor.forward(np.asarray(x, float)[None])[0]

    def update(self, batch: dict, step: int | None = None) -> dict:
        """One critic step, and an actor + target step every ``policy_delay``.

        ``batch`` holds ``x, a, r, x2, terminal``.
        """
        if len(batch.get("r", ())) == 0:
            raise ContractViolation("empty batch")
        cfg = self.cfg
        x, a, r, x2, term = batch["x"], batch["a"], batch["r"], batch["x2"], batch["terminal"]
        n = r.shape[0]
        noise = np.clip(self.rng.normal(0.0, cfg.target_noise, a.shape),
                        -cfg.noise_clip, cfg.noise_clip)
        a2 = np.clip(self.actor_t.forward(x2) + noise, -1.0, 1.0)
        y = td3_target(r, term, self.critic1_t(x2, a2), self.critic2_t(x2, a2), cfg.gamma)
        self.critic1.zero_grad()
        self.critic2.zero_grad()
        e1 = self.critic1(x, a) - y
        e2 = self.critic2(x, a) - y
        loss_c = float(np.mean(e1 * e1) + np.mean(e2 * e2))
        if not np.isfinite(loss_c):
            raise TrainingError(f"critic loss became non-finite at step {step}", step=step)
        self.critic1.backward(2.0 * e1 / n)
        self.critic2.backward(2.0 * e2 / n)
        self.critic_opt.step(self.critic1.grads() + self.critic2.grads())
        self.critic_updates += 1
        out = {"critic_loss": loss_c}
        if self.critic_updates % cfg.policy_delay == 0:
            pa = self.actor.forward(x)
            q = self.critic1(x, pa)
            loss_a = float(-np.mean(q))
            if not np.isfinite(loss_a):
                raise TrainingError(f"actor loss became non-finite at step {step}", step=step)
            da = self.critic1.backward(-np.ones(n) / n)
            self.actor.zero_grad()
            self.actor.backward(da)
            self.actor_opt.step(self.actor.grads())
            self.actor_updates += 1
            self.actor_t.copy_from(self.actor, cfg.tau)
            self.critic1_t.copy_from(self.critic1, cfg.tau)
            self.critic2_t.copy_from(self.critic2, cfg.tau)
            out["actor_loss"] = loss_a
        return out
