"""Universal policy + online system identification training."""

from __future__ import annotations

import numpy as np

from ..errors import ContractViolation, TrainingError
from ..neural import Adam, Network, mlp
from ..randomize import EpisodeStreams, sample_environment
from ..randomize.rng import DOMAIN_COLLECT, DOMAIN_TRAIN, stream
from .families import UPOSIPolicy, env_context
from .td3 import TD3Config
from .training import new_policy, td3_loop

OSI_HIDDEN = (128, 64, 32, 16)


def osi_network(in_dim, xi_dim, rng, hidden=OSI_HIDDEN, dropout=0.1) -> Network:
    return mlp(in_dim, hidden, xi_dim, "relu", "linear", rng, dropout=dropout)


def collect_osi_data(env, cfg, regime, policy: UPOSIPolicy, episodes: int, seed: int,
                     domain=DOMAIN_COLLECT, noise=0.0, offset=0):
    """Roll out ``policy`` under ``regime``; returns ``(histories, xi)`` with
    one row per step (histories are zero-padded at episode start)."""
    rng = stream(seed, domain, 77)
    X, Y = [], []
    for ep in range(offset, offset + episodes):
        streams = EpisodeStreams.for_episode(seed, ep, domain)
        real = sample_environment(regime, cfg.baseline, streams.env, cfg.obs_dim)
        obs = env.reset(real, streams)
        policy.reset()
        while True:
            x = policy.observe(obs, env_context(env, real))
            X.append(policy.history.vector())
            Y.append(real.xi)
            a = policy.decide(x)
            if noise:
                a = np.clip(a + rng.normal(0.0, noise, a.shape), -1.0, 1.0)
            policy.commit(a)
            out = env.step(a)
            obs = out.observation
            if out.done:
                break
    return np.asarray(X), np.asarray(Y)


def train_osi(osi: Network, X, Y, epochs: int, rng, lr=1e-3, batch=256) -> list:
    """Supervised MSE regression of normalised xi; returns per-epoch losses."""
    opt = Adam(osi.params(), lr=lr)
    n = X.shape[0]
    losses = []
    for _ in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for s in range(0, n, batch):
            idx = order[s:s + batch]
            pred = osi.forward(X[idx], train=True, rng=rng)
            err = pred - Y[idx]
            loss = float(np.mean(err * err))
            if not np.isfinite(loss):
                raise TrainingError("OSI loss became non-finite", step=len(losses))
            osi.zero_grad()
            osi.backward(2.0 * err / err.size)
            opt.step(osi.grads())
            total += loss * idx.size
        losses.append(total / n)
    return losses


def uposi_train(cfg, regime_kind, settings: dict, seed: int, progress=None):
    """UP with TD3 on true xi, OSI by supervised regression, one refinement round."""
    regime = cfg.regime(regime_kind)
    if regime.kind != "DR":
        raise ContractViolation("uposi is trained under a DR regime")
    td3cfg = TD3Config.from_dict(settings)
    env = cfg.make_env()
    init_rng = stream(seed, DOMAIN_TRAIN, 99)
    policy = new_policy("uposi", cfg, td3cfg, init_rng, regime, **settings)
    policy.conditioning = "true"
    result = td3_loop(env, cfg, regime, policy, td3cfg, seed, progress)

    osi_rng = stream(seed, DOMAIN_TRAIN, 98)
    width = policy.history.width * policy.H
    osi = osi_network(width, policy.xi_dim, osi_rng, dropout=float(settings.get("osi_dropout", 0.1)))
    n_collect = int(settings.get("osi_episodes", 100))
    epochs = int(settings.get("osi_epochs", 30))
    X, Y = collect_osi_data(env, cfg, regime, policy, n_collect, seed,
                            noise=float(settings.get("osi_collect_noise", 0.1)))
    losses = train_osi(osi, X, Y, epochs, osi_rng)
    policy.osi = osi
    rounds = int(settings.get("osi_refinements", 1))
    for k in range(rounds):
        policy.conditioning = "osi"
        X2, Y2 = collect_osi_data(env, cfg, regime, policy, n_collect, seed,
                                  noise=float(settings.get("osi_collect_noise", 0.1)),
                                  offset=(k + 1) * n_collect)
        X, Y = np.concatenate([X, X2]), np.concatenate([Y, Y2])
        losses += train_osi(osi, X, Y, max(1, epochs // 2), osi_rng)
    policy.conditioning = "osi"
    result.policy = policy
    result.info.update({"family": "uposi", "task": cfg.task_id, "regime": regime_kind,
                        "seed": seed, "osi_losses": losses, "osi_samples": int(X.shape[0])})
    return result
