"""Training loops: TD3 for conservative / adaptive / universal policies."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractViolation
from ..neural import load_weights, save_weights
from ..randomize import EpisodeStreams, sample_environment
from ..randomize.rng import DOMAIN_TRAIN, STREAM_POLICY, stream
from .critic import Critic
from .families import (
    FAMILIES,
    AdaptivePolicy,
    ConservativePolicy,
    Policy,
    UPOSIPolicy,
    build_policy,
    env_context,
    mlp_actor,
    mlp_critic_head,
    recurrent_actor,
    recurrent_trunk,
)
from .replay import ReplayBuffer
from .td3 import TD3, TD3Config


def discounted_return(rewards, gamma: float) -> float:
    g = 0.0
    for r in reversed(list(rewards)):
        g = float(r) + gamma * g
    return g


@dataclass
class TrainResult:
    policy: Policy
    returns: list
    successes: list
    env_steps: int
    wall_time: float
    info: dict = field(default_factory=dict)

    def learning_curve(self) -> np.ndarray:
        """Rows ``(episode, return, success)``."""
        return np.column_stack([np.arange(len(self.returns)), self.returns,
                                np.asarray(self.successes, float)])


def make_td3(policy: Policy, td3cfg: TD3Config, rng) -> TD3:
    """Critics matching the policy's input representation."""
    a = policy.act_dim
    hidden = td3cfg.hidden
    if isinstance(policy, AdaptivePolicy):
        w = policy.input_shape[-1]

        def critic():
            trunk = recurrent_trunk(w, rng)
            return Critic(mlp_critic_head(trunk.out_dim + a, hidden[1:] or hidden, rng), trunk)
    else:
        d = policy.actor.in_dim

        def critic():
            return Critic(mlp_critic_head(d + a, hidden, rng))
    return TD3(policy.actor, critic(), critic(), td3cfg, stream(0, 0) if rng is None else rng)


def new_policy(family: str, cfg, td3cfg: TD3Config, rng, regime=None, **opts) -> Policy:
    o, a = cfg.obs_dim, 2
    sc = opts.get("obs_scale")
    if family == "conservative":
        return ConservativePolicy(mlp_actor(o, a, td3cfg.hidden, rng), o, a, sc)
    if family == "adaptive":
        window = int(opts.get("window", 8))
        return AdaptivePolicy(recurrent_actor(o + a, a, rng), o, a, window, sc)
    if family == "uposi":
        if regime is None or regime.kind != "DR":
            raise ContractViolation("the universal policy is trained under a DR regime")
        xi_names = regime.xi_names(cfg.baseline, o)
        n_j = cfg.baseline.n_joints
        return UPOSIPolicy(mlp_actor(o + len(xi_names), a, td3cfg.hidden, rng), None, o, a, n_j,
                           len(xi_names), int(opts.get("H", 5)), xi_names, sc)
    raise ContractViolation(f"family {family!r} is not trained by the TD3 loop")


def td3_loop(env, cfg, regime, policy: Policy, td3cfg: TD3Config, seed: int,
             progress=None, episode_offset=0) -> TrainResult:
    """Run TD3 until ``td3cfg.total_steps`` environment steps.

    A fresh environment is drawn from ``regime`` every episode. Transitions
    are stored only for steps where the policy produced an input (EPI probe
    steps are skipped). Horizon cut-offs are bootstrapped; only early
    termination is terminal.
    """
    rng = stream(seed, DOMAIN_TRAIN, STREAM_POLICY)
    td3 = make_td3(policy, td3cfg, rng)
    buf = ReplayBuffer(td3cfg.capacity, {
        "x": policy.input_shape, "a": (policy.act_dim,), "r": (), "x2": policy.input_shape,
        "terminal": ()})
    returns, successes = [], []
    steps = 0
    ep = episode_offset
    t0 = time.time()
    while steps < td3cfg.total_steps:
        streams = EpisodeStreams.for_episode(seed, ep, DOMAIN_TRAIN)
        real = sample_environment(regime, cfg.baseline, streams.env, cfg.obs_dim)
        obs = env.reset(real, streams)
        policy.reset()
        x = policy.observe(obs, env_context(env, real))
        ep_rewards = []
        while True:
            if x is None:
                a = policy.decide(None)
            elif steps < td3cfg.warmup_steps:
                a = rng.uniform(-1.0, 1.0, policy.act_dim)
            else:
                a = policy.decide(x) + rng.normal(0.0, td3cfg.exploration_noise, policy.act_dim)
                a = np.clip(a, -1.0, 1.0)
            policy.commit(a)
            out = env.step(a)
            x2 = policy.observe(out.observation, env_context(env, real))
            if x is not None:
                buf.add(x=x, a=a, r=out.reward, x2=x2, terminal=float(out.terminated))
            steps += 1
            ep_rewards.append(out.reward)
            if steps >= td3cfg.warmup_steps and steps % td3cfg.update_every == 0:
                td3.update(buf.sample(td3cfg.batch_size, rng), step=steps)
            x = x2
            if out.done:
                break
        returns.append(discounted_return(ep_rewards, td3cfg.gamma))
        successes.append(env.success())
        ep += 1
        if progress is not None:
            progress(ep, steps, returns[-1], successes[-1])
    info = {"episodes": ep - episode_offset, "critic_updates": td3.critic_updates,
            "actor_updates": td3.actor_updates}
    return TrainResult(policy, returns, successes, steps, time.time() - t0, info)


def train_policy(family: str, cfg, regime_kind: str, train: dict | None = None, seed: int = 0,
                 progress=None) -> TrainResult:
    """Train one policy family on a task config under a regime.

    ``train`` overrides the config's ``[train]`` section. EPI and UPOSI go
    through their dedicated multi-phase trainers.
    """
    if family not in FAMILIES:
        raise ContractViolation(f"unknown family {family!r}; expected one of {FAMILIES}")
    settings = {**cfg.train, **(train or {})}
    regime = cfg.regime(regime_kind)
    if family == "uposi":
        from .uposi import uposi_train

        return uposi_train(cfg, regime_kind, settings, seed, progress)
    if family == "epi":
        from .epi import epi_train

        return epi_train(cfg, regime_kind, settings, seed, progress)
    td3cfg = TD3Config.from_dict(settings)
    env = cfg.make_env()
    init_rng = stream(seed, DOMAIN_TRAIN, 99)
    policy = new_policy(family, cfg, td3cfg, init_rng, regime, **settings)
    result = td3_loop(env, cfg, regime, policy, td3cfg, seed, progress)
    result.info.update({"family": family, "task": cfg.task_id, "regime": regime_kind,
                        "seed": seed})
    return result


def save_policy(policy: Policy, path, meta: dict | None = None):
    save_weights(policy.nets(), path, extra={**policy.extra(), **(meta or {})})


def load_policy(path) -> tuple[Policy, dict]:
    nets, extra = load_weights(path)
    return build_policy(extra, nets), extra
