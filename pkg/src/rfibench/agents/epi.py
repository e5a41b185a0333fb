"""Environment-probing interaction: probe policy, embedding and task policy."""

from __future__ import annotations

import numpy as np

from ..errors import ContractViolation, TrainingError
from ..neural import Adam, Network, mlp
from ..randomize import EpisodeStreams, sample_environment
from ..randomize.rng import DOMAIN_COLLECT, DOMAIN_TRAIN, stream
from .families import EPIPolicy, mlp_actor
from .ppo import PPO, GaussianPolicy, PPOConfig, gae
from .td3 import TD3Config
from .training import td3_loop


class EPIModels:
    """Embedding ``E(probe) -> z`` and predictors ``F(o, a, z)``, ``F0(o, a)`` of the
    standardised next-observation change."""

    def __init__(self, obs_dim, act_dim, probe_steps, latent_dim, rng, hidden=(128, 128),
                 lr=1e-3):
        self.obs_dim, self.act_dim = obs_dim, act_dim
        self.embedding = mlp(probe_steps * (obs_dim + act_dim), hidden, latent_dim, "relu",
                             "tanh", rng)
        self.predictor = mlp(obs_dim + act_dim + latent_dim, hidden, obs_dim, "relu", "linear", rng)
        self.baseline = mlp(obs_dim + act_dim, hidden, obs_dim, "relu", "linear", rng)
        self.opt = Adam(self.embedding.params() + self.predictor.params(), lr=lr)
        self.opt0 = Adam(self.baseline.params(), lr=lr)
        self.scale = np.ones(obs_dim)
        self.latent_dim = latent_dim

    def fit_scale(self, deltas):
        self.scale = np.maximum(deltas.reshape(-1, self.obs_dim).std(axis=0), 1e-6)

    def errors(self, probe, oa, delta):
        """Per-episode prediction MSE with z and without z.

        ``probe (B, P*(o+a))``, ``oa (B, M, o+a)``, ``delta (B, M, o)``.
        """
        B, M, _ = oa.shape
        z = self.embedding.forward(probe)
        target = delta / self.scale
        zz = np.repeat(z[:, None], M, axis=1)
        p = self.predictor.forward(np.concatenate([oa, zz], -1))
        p0 = self.baseline.forward(oa)
        return (np.mean((p - target) ** 2, axis=(1, 2)), np.mean((p0 - target) ** 2, axis=(1, 2)))

    def train_step(self, probe, oa, delta):
        B, M, _ = oa.shape
        target = delta / self.scale
        z = self.embedding.forward(probe)
        zz = np.repeat(z[:, None], M, axis=1)
        p = self.predictor.forward(np.concatenate([oa, zz], -1))
        err = p - target
        loss = float(np.mean(err * err))
        if not np.isfinite(loss):
            raise TrainingError("EPI prediction loss became non-finite")
        self.embedding.zero_grad()
        self.predictor.zero_grad()
        dx = self.predictor.backward(2.0 * err / err.size)
        dz = dx[..., -self.latent_dim:].sum(axis=1)
        self.embedding.backward(dz)
        self.opt.step(self.embedding.grads() + self.predictor.grads())
        p0 = self.baseline.forward(oa)
        e0 = p0 - target
        self.baseline.zero_grad()
        self.baseline.backward(2.0 * e0 / e0.size)
        self.opt0.step(self.baseline.grads())
        return loss, float(np.mean(e0 * e0))


def probe_episode(env, cfg, regime, policy: GaussianPolicy, probe_steps, extra_steps, seed, ep,
                  rng, stochastic=True, domain=DOMAIN_COLLECT, realization=None, obs_scale=None):
    """Probe for ``probe_steps`` then take ``extra_steps`` random actions.

    Returns the probe record and the post-probe transitions.
    """
    streams = EpisodeStreams.for_episode(seed, ep, domain)
    real = realization or sample_environment(regime, cfg.baseline, streams.env, cfg.obs_dim)
    scale = 1.0 if obs_scale is None else np.asarray(obs_scale, float)
    obs = env.reset(real, streams) * scale
    xs, acts, logps, traj = [], [], [], []
    for t in range(probe_steps):
        x = np.concatenate([obs, [t / probe_steps]])
        if stochastic:
            a, lp = policy.sample(x, rng)
        else:
            a, lp = policy.mode(x), 0.0
        a_env = np.clip(a, -1.0, 1.0)
        xs.append(x)
        acts.append(a)
        logps.append(lp)
        traj.append(np.concatenate([obs, a_env]))
        obs = env.step(a_env).observation * scale
    oa, delta = [], []
    for _ in range(extra_steps):
        a = rng.uniform(-1.0, 1.0, env.act_dim)
        out = env.step(a)
        nxt = out.observation * scale
        oa.append(np.concatenate([obs, a]))
        delta.append(nxt - obs)
        obs = nxt
        if out.done:
            break
    return {"x": np.asarray(xs), "a": np.asarray(acts), "logp": np.asarray(logps),
            "probe": np.concatenate(traj), "oa": np.asarray(oa), "delta": np.asarray(delta),
            "xi": real.xi}


def _stack(eps, key):
    return np.stack([e[key] for e in eps])


def epi_train(cfg, regime_kind, settings: dict, seed: int, progress=None):
    regime = cfg.regime(regime_kind)
    if regime.kind != "DR":
        raise ContractViolation("epi is trained under a DR regime")
    P = int(settings.get("probe_steps", 10))
    L = int(settings.get("latent_dim", 10))
    M = int(settings.get("prediction_steps", 10))
    if P + M > cfg.spec.n_steps:
        raise ContractViolation("probe + prediction steps exceed the episode length")
    env = cfg.make_env()
    o, a = cfg.obs_dim, env.act_dim
    rng = stream(seed, DOMAIN_TRAIN, 97)
    models = EPIModels(o, a, P, L, rng)
    probe = GaussianPolicy(mlp(o + 1, (64, 64), a, "tanh", "tanh", rng), a)
    ppo = PPO(probe, mlp(o + 1, (64, 64), 1, "tanh", "linear", rng),
              PPOConfig(**settings.get("ppo", {})), rng)

    sc = settings.get("obs_scale")
    pre = [probe_episode(env, cfg, regime, probe, P, M, seed, ep, rng, obs_scale=sc)
           for ep in range(int(settings.get("epi_pretrain_episodes", 200)))]
    models.fit_scale(_stack(pre, "delta"))
    data = list(pre)
    batch = int(settings.get("epi_batch", 64))

    def fit_models(epochs):
        probe_b, oa_b, d_b = _stack(data, "probe"), _stack(data, "oa"), _stack(data, "delta")
        out = (0.0, 0.0)
        for _ in range(epochs):
            order = rng.permutation(len(data))
            for s in range(0, len(data), batch):
                idx = order[s:s + batch]
                out = models.train_step(probe_b[idx], oa_b[idx], d_b[idx])
        return out

    losses = [fit_models(int(settings.get("epi_pretrain_epochs", 30)))]
    ep = len(pre)
    probe_rewards = []
    for _ in range(int(settings.get("epi_iterations", 10))):
        eps = []
        for _ in range(int(settings.get("epi_episodes_per_iter", 32))):
            eps.append(probe_episode(env, cfg, regime, probe, P, M, seed, ep, rng, obs_scale=sc))
            ep += 1
        err_z, err_0 = models.errors(_stack(eps, "probe"), _stack(eps, "oa"), _stack(eps, "delta"))
        bonus = err_0 - err_z
        probe_rewards.append(float(bonus.mean()))
        xs, acts, lps, advs, rets = [], [], [], [], []
        for e, b in zip(eps, bonus):
            r = np.zeros(P)
            r[-1] = b
            v = ppo.value.forward(e["x"])[:, 0]
            adv, ret = gae(r, v, 0.0, np.eye(1, P, P - 1)[0], ppo.cfg.gamma, ppo.cfg.lam)
            xs.append(e["x"]), acts.append(e["a"]), lps.append(e["logp"])
            advs.append(adv), rets.append(ret)
        ppo.update(np.concatenate(xs), np.concatenate(acts), np.concatenate(lps),
                   np.concatenate(advs), np.concatenate(rets))
        data.extend(eps)
        data = data[-int(settings.get("epi_buffer", 1000)):]
        losses.append(fit_models(int(settings.get("epi_epochs_per_iter", 3))))

    td3cfg = TD3Config.from_dict(settings)
    actor = mlp_actor(o + L, a, td3cfg.hidden, stream(seed, DOMAIN_TRAIN, 99))
    policy = EPIPolicy(actor, probe.mean, models.embedding, o, a, P, L, sc)
    result = td3_loop(env, cfg, regime, policy, td3cfg, seed, progress)
    result.policy = policy
    result.info.update({"family": "epi", "task": cfg.task_id, "regime": regime_kind,
                        "seed": seed, "prediction_losses": [list(x) for x in losses],
                        "probe_rewards": probe_rewards})
    result.models = models
    return result
