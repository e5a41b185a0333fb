"""Evaluation protocol: in-domain regimes and the fixed pseudo-real target."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..agents.families import Policy, env_context
from ..config import TaskConfig, pseudo_real_realization
from ..errors import ContractViolation
from ..randomize import EnvRealization, EpisodeStreams, sample_environment
from ..randomize.rng import DOMAIN_EVAL

SOURCES = ("in-domain", "pseudo-real")
RANDOM_GOAL = "random"


@dataclass(frozen=True)
class PseudoRealSpec:
    """Held-out target: one fixed realization with unmodeled effects."""

    task_id: str
    realization: EnvRealization
    seed: int

    def __post_init__(self):
        if not self.realization.effects.any_active:
            raise ContractViolation("pseudo-real target needs at least one unmodeled effect")

    @classmethod
    def from_config(cls, cfg: TaskConfig) -> "PseudoRealSpec":
        return cls(cfg.task_id, pseudo_real_realization(cfg),
                   int(cfg.pseudo_real.get("seed", 0)))


@dataclass
class EpisodeRecord:
    index: int
    success: bool
    ret: float
    final_distance: float
    initial_obs: list
    goal: list = field(default_factory=list)
    path: list = field(default_factory=list)


@dataclass
class EvalCell:
    """One (task, regime, policy, tier) result."""

    task: str
    regime: str
    policy: str
    source: str
    tier: str
    n: int
    success_rate: float
    mean_return: float
    seed: int
    episodes: list = field(default_factory=list)

    @property
    def key(self) -> tuple:
        return (self.task, self.source, self.regime, self.policy, self.tier)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EvalCell":
        d = dict(d)
        d["episodes"] = [EpisodeRecord(**e) for e in d.get("episodes", [])]
        return cls(**d)


def _path_channels(env) -> tuple:
    """End-effector path where there is one, else the object's."""
    tr = env.tracked()
    if "ee_x" in tr:
        return tr["ee_x"], tr["ee_y"]
    return tr["puck_x"], tr["puck_y"]


def run_episode(env, policy: Policy, real: EnvRealization, streams, tier=None,
                keep_path=False, gamma=0.99) -> EpisodeRecord:
    obs = env.reset(real, streams, tier)
    policy.reset()
    init = [float(x) for x in obs]
    path = [list(_path_channels(env))] if keep_path else []
    ret, disc = 0.0, 1.0
    while True:
        a = policy.act(obs, env_context(env, real))
        out = env.step(a)
        ret += disc * out.reward
        disc *= gamma
        obs = out.observation
        if keep_path:
            path.append(list(_path_channels(env)))
        if out.done:
            break
    return EpisodeRecord(-1, bool(env.success()), float(ret), float(env.distances[-1]), init,
                         [float(x) for x in env.goal], [[float(x), float(y)] for x, y in path])


def evaluate(policy: Policy, cfg: TaskConfig, source: str = "in-domain", goals=("easy",),
             n: int = 100, seed: int = 0, regime: str = "NR", label: str | None = None,
             keep_paths: int = 5, pseudo_real: PseudoRealSpec | None = None) -> list[EvalCell]:
    """Evaluate ``policy`` for ``n`` episodes per goal tier.

    ``regime`` names the policy's training regime. In-domain evaluation
    draws a fresh environment from it every episode; pseudo-real
    evaluation uses the task's fixed target. ``goals`` holds tier names or
    ``"random"`` (goal sampled from the goal region). Episode ``i`` uses the
    same random streams in every tier and under every policy.
    """
    if n < 1:
        raise ContractViolation("evaluation needs n >= 1 episodes")
    if source not in SOURCES:
        raise ContractViolation(f"unknown source {source!r}; expected one of {SOURCES}")
    if isinstance(goals, str):
        goals = (goals,)
    env = cfg.make_env()
    for g in goals:
        if g != RANDOM_GOAL:
            cfg.spec.tier(g)
    reg = cfg.regime(regime)
    target = None
    if source == "pseudo-real":
        target = pseudo_real or PseudoRealSpec.from_config(cfg)
    cells = []
    for tier in goals:
        records = []
        for i in range(n):
            streams = EpisodeStreams.for_episode(seed, i, DOMAIN_EVAL)
            real = (target.realization if target is not None
                    else sample_environment(reg, cfg.baseline, streams.env, cfg.obs_dim))
            rec = run_episode(env, policy, real, streams, None if tier == RANDOM_GOAL else tier,
                              keep_path=i < keep_paths)
            rec.index = i
            records.append(rec)
        succ = np.array([r.success for r in records], float)
        cells.append(EvalCell(
            task=cfg.task_id, regime=regime, policy=label or policy.family, source=source,
            tier=tier, n=n, success_rate=float(succ.mean()),
            mean_return=float(np.mean([r.ret for r in records])), seed=seed, episodes=records))
    return cells
