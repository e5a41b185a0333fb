"""Task configuration documents (TOML).

One document per task holds the task geometry, the model limits, the
baseline dynamics parameters, one section per regime, the pseudo-real
target and training settings. Packaged defaults live in ``configs/``.
"""

from __future__ import annotations

import copy
import hashlib
import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .dyncore.state import DynamicsParams
from .errors import ContractViolation
from .randomize import REGIMES, ParamDistribution, RegimeSpec
from .randomize.regimes import EnvRealization, ObsCorruption, UnmodeledEffects, _normalise
from .tasks.spec import GoalTier, Region, RewardWeights, TaskSpec, default_tiers

_TASK_KEYS = {"id", "horizon", "policy_rate", "success_threshold", "hold_window",
              "goal_region", "start_region", "tier_start", "weights"}


@dataclass
class TaskConfig:
    spec: TaskSpec
    model: dict
    baseline: DynamicsParams
    regimes: dict
    pseudo_real: dict
    train: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)
    obs_dim: int = 0

    @property
    def task_id(self) -> str:
        return self.spec.task_id

    def make_env(self):
        from .tasks.env import make_env

        return make_env(self.spec, self.model)

    def regime(self, kind: str) -> RegimeSpec:
        try:
            return self.regimes[kind]
        except KeyError:
            raise ContractViolation(f"config has no regime {kind!r}") from None

    def content_hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, default=_jsonable).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x))


def packaged_config_path(task_id: str) -> Path:
    return Path(str(resources.files("rfibench") / "configs" / f"{task_id}.toml"))


def load_config(source) -> TaskConfig:
    """Load a task config from a path, a task id (packaged default) or a dict."""
    if isinstance(source, dict):
        raw = copy.deepcopy(source)
    else:
        path = Path(source)
        if not path.exists() and str(source) in ("reach", "push", "slide"):
            path = packaged_config_path(str(source))
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    return build_config(raw)


def build_config(raw: dict) -> TaskConfig:
    for section in ("task", "model", "baseline"):
        if section not in raw:
            raise ContractViolation(f"config is missing section [{section}]")
    spec = _task_spec(raw["task"])
    baseline = DynamicsParams.from_dict(raw["baseline"]).validate()
    model = dict(raw["model"])
    from .tasks.env import ENV_CLASSES

    n_dof = ENV_CLASSES[spec.task_id].n_dof
    obs_dim = ENV_CLASSES[spec.task_id].obs_dim
    regimes = {}
    for kind, section in raw.get("regime", {}).items():
        regimes[kind] = _regime(kind, section, baseline, spec.task_id, n_dof)
    regimes.setdefault("NR", RegimeSpec("NR"))
    for kind in regimes:
        if kind not in REGIMES:
            raise ContractViolation(f"unknown regime section {kind!r}")
        if regimes[kind].rfi_ranges is not None and regimes[kind].rfi_ranges.size != n_dof:
            raise ContractViolation(
                f"regime {kind}: {regimes[kind].rfi_ranges.size} rfi ranges, task has {n_dof} DoFs")
    pseudo = dict(raw.get("pseudo_real", {}))
    cfg = TaskConfig(spec=spec, model=model, baseline=baseline, regimes=regimes,
                     pseudo_real=pseudo, train=dict(raw.get("train", {})), raw=raw,
                     obs_dim=obs_dim)
    return cfg


def _task_spec(t: dict) -> TaskSpec:
    unknown = set(t) - _TASK_KEYS
    if unknown:
        raise ContractViolation(f"unknown [task] keys {sorted(unknown)}")
    goal = Region(t["goal_region"]["lo"], t["goal_region"]["hi"])
    start = Region(t["start_region"]["lo"], t["start_region"]["hi"])
    tier_start = np.asarray(t.get("tier_start", start.center), float)
    if t["id"] == "slide":
        tiers = start_tiers(start, goal.center)
    else:
        tiers = default_tiers(tier_start, goal)
    return TaskSpec(
        task_id=t["id"], horizon=float(t["horizon"]), policy_rate=float(t["policy_rate"]),
        success_threshold=float(t["success_threshold"]), hold_window=float(t["hold_window"]),
        goal_region=goal, start_region=start, goal_tiers=tiers,
        weights=RewardWeights(**t.get("weights", {})),
    )


def start_tiers(start_region: Region, goal) -> dict:
    """Tiers for a single-goal task: the start moves instead of the goal.

    Easy starts at the start-region point nearest the goal, hard at the
    farthest corner, intermediate halfway between.
    """
    goal = np.asarray(goal, float)
    near = np.clip(goal, start_region.lo, start_region.hi)
    corners = start_region.corners()
    far = corners[int(np.argmax(np.linalg.norm(corners - goal, axis=1)))]
    return {
        "easy": GoalTier(near, goal.copy()),
        "intermediate": GoalTier(0.5 * (near + far), goal.copy()),
        "hard": GoalTier(far, goal.copy()),
    }


def default_rfi_ranges(task_id: str, baseline: DynamicsParams, model: dict,
                       joint_fraction=0.1, object_fraction=0.3) -> np.ndarray:
    """Joint half-width: ``joint_fraction`` of the gravity-load torque at full
    extension (computed as if vertical for horizontal arms). Object DoFs:
    ``object_fraction * mu * m * g`` (times the radius for yaw)."""
    m = baseline.link_masses
    lengths = baseline.link_lengths
    g = baseline.gravity
    if task_id == "slide":
        joint = joint_fraction * g * m * lengths
    else:
        n = m.size
        joint = np.empty(n)
        for j in range(n):
            reach = np.cumsum(lengths[j:])
            joint[j] = joint_fraction * g * float(np.sum(m[j:] * reach))
    if task_id == "reach":
        return joint
    f = object_fraction * baseline.surface_friction_mu * baseline.object_mass * g
    return np.concatenate([joint, [f, f, f * baseline.object_radius]])


def _regime(kind, section, baseline, task_id, n_dof) -> RegimeSpec:
    section = dict(section)
    dists = {}
    for name, entry in section.pop("params", {}).items():
        dists[name] = ParamDistribution.from_config(entry)
    rfi = section.pop("rfi_ranges", None)
    if rfi == "auto" or isinstance(rfi, dict):
        opts = rfi if isinstance(rfi, dict) else {}
        rfi = default_rfi_ranges(task_id, baseline, {}, **opts)
    obs_noise = section.pop("obs_noise_std", None)
    obs_delay = section.pop("obs_delay", None)
    action_noise = section.pop("action_noise_range", None)
    if section:
        raise ContractViolation(f"regime {kind}: unknown keys {sorted(section)}")
    regime = RegimeSpec(
        kind,
        dr_distributions=dists,
        rfi_ranges=None if rfi is None else np.asarray(rfi, float),
        obs_noise_std=None if obs_noise is None else ParamDistribution.from_config(obs_noise),
        obs_delay=None if obs_delay is None else ParamDistribution.from_config(obs_delay),
        action_noise_range=(None if action_noise is None
                            else ParamDistribution.from_config(action_noise)),
    )
    regime.validate_against(baseline)
    return regime


def pseudo_real_realization(cfg: TaskConfig) -> EnvRealization:
    """The fixed held-out target for a task.

    Every DR-randomised parameter is set to the ``quantile`` of its DR
    distribution (``quantiles`` overrides per parameter); unmodeled effects
    come from the ``[pseudo_real]`` section.
    """
    pr = dict(cfg.pseudo_real)
    q_default = float(pr.get("quantile", 0.95))
    overrides = dict(pr.get("quantiles", {}))
    updates = {}
    xi = []
    dr = cfg.regimes.get("DR")
    if dr is not None:
        for name, dist in dr.dr_distributions.items():
            q = float(overrides.get(name, q_default))
            base = cfg.baseline.get(name)
            draw = dist.quantile(q)
            updates[name] = dist.apply(base, draw)
            xi.append(np.full(np.size(base), float(_normalise(dist, draw)[0])))
    updates.update(pr.get("params", {}))
    params = cfg.baseline.replace(**updates).validate()
    if dr is not None:
        # no action noise, delay or observation noise in the target
        if dr.action_noise_range is not None:
            xi.append(_normalise(dr.action_noise_range, params.action_noise_range))
        if dr.obs_delay is not None:
            xi.append(_normalise(dr.obs_delay, 0.0))
        if dr.obs_noise_std is not None:
            xi.append(_normalise(dr.obs_noise_std, np.zeros(cfg.obs_dim)))
    effects = UnmodeledEffects(
        object_drag=float(pr.get("object_drag", 0.0)),
        deadband=float(pr.get("deadband", 0.0)),
        contact_stiffness_scale=float(pr.get("contact_stiffness_scale", 1.0)),
        obs_bias=float(pr.get("obs_bias", 0.0)),
    )
    if not effects.any_active:
        raise ContractViolation("pseudo-real target needs at least one unmodeled effect")
    return EnvRealization(params=params, obs_corruption=ObsCorruption(np.zeros(0), 0),
                          nominal=cfg.baseline, effects=effects,
                          xi=np.concatenate(xi) if xi else np.zeros(0))
