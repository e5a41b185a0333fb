"""The four policy families behind one acting interface.

Every policy turns the stream of observations (plus proprioceptive
context) into its network input with :meth:`Policy.observe`, picks an
action with :meth:`Policy.decide` and records what was executed with
:meth:`Policy.commit`. :meth:`Policy.act` chains the three.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from ..errors import ContractViolation
from ..neural import LSTM, Dense, LastStep, Network, Parallel, mlp

FAMILIES = ("conservative", "adaptive", "uposi", "epi")


def env_context(env, realization=None) -> dict:
    """Proprioceptive channels the policies may read after each step."""
    ctx = {"joint_pos": env.joint_pos, "joint_vel": env.joint_vel,
           "joint_cmd": np.array(env.last_command, float)}
    if realization is not None:
        ctx["xi"] = realization.xi
    return ctx


class Policy:
    family = ""

    def __init__(self, actor: Network, obs_dim: int, act_dim: int, obs_scale=None):
        self.actor = actor
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.obs_scale = (np.ones(obs_dim) if obs_scale is None
                          else np.asarray(obs_scale, float).reshape(obs_dim))

    def scaled(self, obs) -> np.ndarray:
        """Observations enter every network multiplied by a fixed per-dim scale."""
        return np.asarray(obs, float) * self.obs_scale

    @property
    def input_shape(self) -> tuple:
        return (self.actor.in_dim,)

    def reset(self):
        pass

    def observe(self, obs, context=None):
        return self.scaled(obs)

    def decide(self, x) -> np.ndarray:
        return self.actor.forward(np.asarray(x, float)[None])[0]

    def commit(self, action):
        pass

    def act(self, obs, context=None) -> np.ndarray:
        x = self.observe(obs, context)
        a = self.decide(x)
        self.commit(a)
        return a

    def nets(self) -> dict:
        return {"actor": self.actor}

    def extra(self) -> dict:
        return {"family": self.family, "obs_dim": self.obs_dim, "act_dim": self.act_dim,
                "obs_scale": self.obs_scale.tolist()}


class ConservativePolicy(Policy):
    """Feed-forward policy on the current observation only."""

    family = "conservative"


class AdaptivePolicy(Policy):
    """Recurrent policy over a window of ``(observation, previous action)``.

    The window is zero-padded at the oldest end and cleared at reset.
    """

    family = "adaptive"

    def __init__(self, actor: Network, obs_dim: int, act_dim: int, window: int, obs_scale=None):
        super().__init__(actor, obs_dim, act_dim, obs_scale)
        self.window = int(window)
        self.reset()

    @property
    def input_shape(self):
        return (self.window, self.obs_dim + self.act_dim)

    def reset(self):
        w = self.obs_dim + self.act_dim
        self._hist = deque([np.zeros(w) for _ in range(self.window)], maxlen=self.window)
        self._prev = np.zeros(self.act_dim)

    def observe(self, obs, context=None):
        self._hist.append(np.concatenate([self.scaled(obs), self._prev]))
        return np.stack(self._hist)

    def commit(self, action):
        self._prev = np.asarray(action, float).copy()

    def extra(self):
        return {**super().extra(), "window": self.window}


class OSIHistory:
    """Last ``H`` stacked steps of (obs, action, joint pos, joint vel, joint command),
    zero-padded at the oldest end."""

    def __init__(self, H: int, obs_dim: int, act_dim: int, n_joints: int):
        if H < 1:
            raise ContractViolation("OSI history length must be >= 1")
        self.H = int(H)
        self.width = obs_dim + act_dim + 3 * n_joints
        self.reset()

    def reset(self):
        self._buf = deque([np.zeros(self.width) for _ in range(self.H)], maxlen=self.H)

    def push(self, obs, prev_action, context) -> np.ndarray:
        entry = np.concatenate([np.asarray(obs, float), prev_action, context["joint_pos"],
                                context["joint_vel"], context["joint_cmd"]])
        if entry.size != self.width:
            raise ContractViolation(f"OSI entry has {entry.size} values, expected {self.width}")
        self._buf.append(entry)
        return self.vector()

    def vector(self) -> np.ndarray:
        return np.concatenate(self._buf)


class UPOSIPolicy(Policy):
    """Universal policy on ``[obs, xi]`` with ``xi`` from the OSI network.

    ``conditioning`` selects the source of ``xi``: ``"osi"`` (default),
    ``"true"`` (``context["xi"]``), ``"noise"`` (uniform on [-1, 1]) or
    ``"zero"``.
    """

    family = "uposi"

    def __init__(self, actor: Network, osi: Network | None, obs_dim: int, act_dim: int,
                 n_joints: int, xi_dim: int, H: int = 5, xi_names=(), obs_scale=None):
        super().__init__(actor, obs_dim, act_dim, obs_scale)
        self.osi = osi
        self.xi_dim = int(xi_dim)
        self.n_joints = int(n_joints)
        self.history = OSIHistory(H, obs_dim, act_dim, n_joints)
        self.xi_names = list(xi_names)
        self.conditioning = "osi" if osi is not None else "true"
        self.noise_rng = np.random.default_rng(0)
        self.last_xi = np.zeros(self.xi_dim)
        self.reset()

    @property
    def H(self):
        return self.history.H

    def reset(self):
        self.history.reset()
        self._prev = np.zeros(self.act_dim)

    def predict_xi(self, hist_vec) -> np.ndarray:
        return np.clip(self.osi.forward(hist_vec[None])[0], -1.0, 1.0)

    def observe(self, obs, context=None):
        if context is None:
            raise ContractViolation("uposi needs proprioceptive context")
        obs = self.scaled(obs)
        hv = self.history.push(obs, self._prev, context)
        mode = self.conditioning
        if mode == "osi":
            if self.osi is None:
                raise ContractViolation("no OSI network attached")
            xi = self.predict_xi(hv)
        elif mode == "true":
            xi = np.asarray(context["xi"], float)
        elif mode == "noise":
            xi = self.noise_rng.uniform(-1.0, 1.0, self.xi_dim)
        elif mode == "zero":
            xi = np.zeros(self.xi_dim)
        else:
            raise ContractViolation(f"unknown conditioning {mode!r}")
        if xi.size != self.xi_dim:
            raise ContractViolation(f"conditioning has {xi.size} dims, UP expects {self.xi_dim}")
        self.last_xi = xi
        return np.concatenate([obs, xi])

    def commit(self, action):
        self._prev = np.asarray(action, float).copy()

    def nets(self):
        out = {"actor": self.actor}
        if self.osi is not None:
            out["osi"] = self.osi
        return out

    def extra(self):
        return {**super().extra(), "n_joints": self.n_joints, "xi_dim": self.xi_dim,
                "H": self.H, "xi_names": self.xi_names}


class EPIPolicy(Policy):
    """Probe for ``probe_steps`` steps, embed the probe into ``z``, then act with
    the task policy on ``[obs, z]``.

    ``conditioning`` is ``"embed"`` (default) or ``"noise"`` (``z`` uniform on
    [-1, 1], drawn once per episode). ``z_override`` pins ``z``.
    """

    family = "epi"

    def __init__(self, actor: Network, probe: Network, embedding: Network, obs_dim: int,
                 act_dim: int, probe_steps: int = 10, latent_dim: int = 10, obs_scale=None):
        super().__init__(actor, obs_dim, act_dim, obs_scale)
        self.probe = probe
        self.embedding = embedding
        self.probe_steps = int(probe_steps)
        self.latent_dim = int(latent_dim)
        self.z_override = None
        self.conditioning = "embed"
        self.noise_rng = np.random.default_rng(0)
        self.reset()

    def reset(self):
        self._t = 0
        self._traj: list = []
        self._obs = None
        self.z = None

    @property
    def probing(self) -> bool:
        return self._t < self.probe_steps

    def probe_input(self, obs) -> np.ndarray:
        """``obs`` is already scaled."""
        return np.concatenate([obs, [self._t / self.probe_steps]])

    def probe_action(self, obs) -> np.ndarray:
        return np.clip(self.probe.forward(self.probe_input(obs)[None])[0], -1.0, 1.0)

    def embed(self, traj_vec) -> np.ndarray:
        return self.embedding.forward(np.asarray(traj_vec, float)[None])[0]

    def observe(self, obs, context=None):
        self._obs = self.scaled(obs)
        if self.probing:
            return None
        if self.z is None:
            if self.z_override is not None:
                self.z = np.asarray(self.z_override, float)
            elif self.conditioning == "noise":
                self.z = self.noise_rng.uniform(-1.0, 1.0, self.latent_dim)
            elif self.conditioning == "embed":
                self.z = self.embed(np.concatenate(self._traj))
            else:
                raise ContractViolation(f"unknown conditioning {self.conditioning!r}")
        return np.concatenate([self._obs, self.z])

    def decide(self, x):
        if x is None:
            return self.probe_action(self._obs)
        return super().decide(x)

    def commit(self, action):
        if self.probing:
            self._traj.append(np.concatenate([self._obs, np.asarray(action, float)]))
        self._t += 1

    def nets(self):
        return {"actor": self.actor, "probe": self.probe, "embedding": self.embedding}

    def extra(self):
        return {**super().extra(), "probe_steps": self.probe_steps,
                "latent_dim": self.latent_dim}


# -- network builders ------------------------------------------------------

def mlp_actor(in_dim, act_dim, hidden, rng):
    return mlp(in_dim, hidden, act_dim, "relu", "tanh", rng)


def mlp_critic_head(in_dim, hidden, rng):
    return mlp(in_dim, hidden, 1, "relu", "linear", rng)


def recurrent_trunk(in_dim, rng, dense=128, lstm=64) -> Network:
    """dense -> (LSTM branch | skip connection) concatenated, on the last step."""
    return Network([
        Dense(in_dim, dense, "relu", rng),
        Parallel([Network([LSTM(dense, lstm, rng), LastStep(lstm)]), LastStep(dense)]),
    ], in_dim=in_dim)


def recurrent_actor(in_dim, act_dim, rng, dense=128, lstm=64, head=128) -> Network:
    trunk = recurrent_trunk(in_dim, rng, dense, lstm)
    return Network(trunk.layers + [Dense(dense + lstm, head, "relu", rng),
                                   Dense(head, act_dim, "tanh", rng)], in_dim=in_dim)


def build_policy(extra: dict, nets: dict) -> Policy:
    """Rebuild a policy from checkpoint metadata and networks."""
    fam = extra["family"]
    o, a = extra["obs_dim"], extra["act_dim"]
    sc = extra.get("obs_scale")
    if fam == "conservative":
        return ConservativePolicy(nets["actor"], o, a, sc)
    if fam == "adaptive":
        return AdaptivePolicy(nets["actor"], o, a, extra["window"], sc)
    if fam == "uposi":
        return UPOSIPolicy(nets["actor"], nets.get("osi"), o, a, extra["n_joints"],
                           extra["xi_dim"], extra["H"], extra.get("xi_names", ()), sc)
    if fam == "epi":
        return EPIPolicy(nets["actor"], nets["probe"], nets["embedding"], o, a,
                         extra["probe_steps"], extra["latent_dim"], sc)
    raise ContractViolation(f"unknown policy family {fam!r}")
