"""Randomisation regimes, per-episode environment sampling and corruption."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..dyncore.state import DynamicsParams
from ..errors import ContractViolation, DistributionError
from .distributions import ParamDistribution

REGIMES = ("NR", "DR", "RFI", "RFI+")
MAX_RESAMPLES = 100


@dataclass(frozen=True)
class ObsCorruption:
    noise_std: np.ndarray = field(default_factory=lambda: np.zeros(0))
    delay: int = 0

    @property
    def active(self) -> bool:
        return self.delay > 0 or bool(np.any(np.asarray(self.noise_std) > 0))


@dataclass(frozen=True)
class UnmodeledEffects:
    """Effects present only in pseudo-real targets, never in training."""

    object_drag: float = 0.0
    deadband: float = 0.0
    contact_stiffness_scale: float = 1.0
    obs_bias: float = 0.0

    @property
    def any_active(self) -> bool:
        return (self.object_drag != 0 or self.deadband != 0
                or self.contact_stiffness_scale != 1 or self.obs_bias != 0)


@dataclass(frozen=True)
class EnvRealization:
    """One sampled training (or evaluation) environment.

    ``nominal`` is the parameter set the robot's own controller believes in
    (used for gravity compensation); ``xi`` is the sampled parameter vector
    normalised to [-1, 1] per dimension, empty outside DR.
    """

    params: DynamicsParams
    rfi_config: np.ndarray | None = None
    obs_corruption: ObsCorruption = field(default_factory=ObsCorruption)
    nominal: DynamicsParams | None = None
    effects: UnmodeledEffects = field(default_factory=UnmodeledEffects)
    xi: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def controller_params(self) -> DynamicsParams:
        return self.params if self.nominal is None else self.nominal

    @property
    def rfi_active(self) -> bool:
        return self.rfi_config is not None and bool(np.any(self.rfi_config > 0))


@dataclass(frozen=True)
class RegimeSpec:
    kind: str
    dr_distributions: dict = field(default_factory=dict)
    rfi_ranges: np.ndarray | None = None
    obs_noise_std: ParamDistribution | None = None
    obs_delay: ParamDistribution | None = None
    action_noise_range: ParamDistribution | None = None

    def __post_init__(self):
        if self.kind not in REGIMES:
            raise ContractViolation(f"unknown regime {self.kind!r}; expected one of {REGIMES}")
        if self.rfi_ranges is not None:
            rr = np.array(self.rfi_ranges, dtype=float).reshape(-1)
            if np.any(rr < 0) or not np.all(np.isfinite(rr)):
                raise ContractViolation("rfi_ranges must be finite and non-negative")
            rr.setflags(write=False)
            object.__setattr__(self, "rfi_ranges", rr)
        has_dr = bool(self.dr_distributions) or self.action_noise_range is not None
        has_obs = self.obs_noise_std is not None or self.obs_delay is not None
        has_rfi = self.rfi_ranges is not None
        allowed = {
            "NR": (False, False, False),
            "DR": (True, True, False),
            "RFI": (False, False, True),
            "RFI+": (False, True, True),
        }[self.kind]
        for present, ok, what in zip((has_dr, has_obs, has_rfi), allowed,
                                     ("parameter distributions", "observation corruption",
                                      "rfi_ranges")):
            if present and not ok:
                raise ContractViolation(f"regime {self.kind} cannot carry {what}")
        if self.kind in ("RFI", "RFI+") and not has_rfi:
            raise ContractViolation(f"regime {self.kind} needs rfi_ranges")
        if self.obs_delay is not None:
            lo, _ = self.obs_delay.support()
            if self.obs_delay.multiplicative or lo < 0:
                raise ContractViolation("obs_delay must be a non-negative absolute distribution")

    # -- manifest --------------------------------------------------------
    def validate_against(self, baseline: DynamicsParams):
        manifest = set(baseline.manifest()) | set(DynamicsParams.field_names())
        for name in self.dr_distributions:
            if name not in manifest:
                raise ContractViolation(f"unknown parameter {name!r} in regime {self.kind}")
        if self.rfi_ranges is not None:
            return self.rfi_ranges.size
        return None

    def xi_names(self, baseline: DynamicsParams, obs_dim: int) -> list[str]:
        """Scalar names of the randomised quantities, in sampling order."""
        names = []
        for name in self.dr_distributions:
            if isinstance(baseline.get(name), np.ndarray):
                names += [f"{name}[{i}]" for i in range(baseline.size_of(name))]
            else:
                names.append(name)
        if self.action_noise_range is not None:
            names.append("action_noise_range")
        if self.obs_delay is not None:
            names.append("obs_delay")
        if self.obs_noise_std is not None:
            names += [f"obs_noise_std[{i}]" for i in range(obs_dim)]
        return names

    def parameter_count(self, baseline: DynamicsParams, obs_dim: int) -> int:
        return len(self.xi_names(baseline, obs_dim))


def _normalise(dist: ParamDistribution, sample) -> np.ndarray:
    sample = np.atleast_1d(np.asarray(sample, float))
    if dist.kind == "loguniform_factor":
        lo, hi, x = np.log(dist.lo), np.log(dist.hi), np.log(sample)
    else:
        lo, hi = dist.support()
        x = sample
    if hi - lo < 1e-12:
        return np.zeros_like(sample)
    return 2.0 * (x - lo) / (hi - lo) - 1.0


def sample_environment(regime: RegimeSpec, baseline: DynamicsParams,
                       rng: np.random.Generator, obs_dim: int = 0) -> EnvRealization:
    """Draw one environment from a regime.

    DR parameters are sampled independently (factors multiply the baseline);
    invalid combinations are redrawn up to 100 times.
    """
    baseline.validate()
    if regime.kind == "NR":
        return EnvRealization(params=baseline, nominal=baseline)
    if regime.kind == "RFI":
        return EnvRealization(params=baseline, rfi_config=regime.rfi_ranges.copy(),
                              nominal=baseline)
    if regime.kind == "RFI+":
        return EnvRealization(params=baseline, rfi_config=regime.rfi_ranges.copy(),
                              obs_corruption=_sample_obs(regime, rng, obs_dim),
                              nominal=baseline)

    regime.validate_against(baseline)
    bad: list[str] = []
    for _ in range(MAX_RESAMPLES):
        updates = {}
        xi = []
        for name, dist in regime.dr_distributions.items():
            base_value = baseline.get(name)
            if isinstance(base_value, np.ndarray):
                draw = dist.sample(rng, size=base_value.size)
                value = dist.apply(base_value.reshape(-1), draw)
            else:
                draw = dist.sample(rng)
                value = dist.apply(base_value, draw)
            updates[name] = value
            xi.append(_normalise(dist, draw))
        if regime.action_noise_range is not None:
            draw = regime.action_noise_range.sample(rng)
            updates["action_noise_range"] = regime.action_noise_range.apply(
                baseline.action_noise_range, draw)
            xi.append(_normalise(regime.action_noise_range, draw))
        params = baseline.replace(**updates)
        bad = params.violations()
        if bad:
            continue
        obs = _sample_obs(regime, rng, obs_dim)
        if regime.obs_delay is not None:
            xi.append(_normalise(regime.obs_delay, obs.delay))
        if regime.obs_noise_std is not None:
            xi.append(_normalise(regime.obs_noise_std, obs.noise_std))
        vec = np.concatenate(xi) if xi else np.zeros(0)
        return EnvRealization(params=params, obs_corruption=obs, nominal=baseline, xi=vec)
    raise DistributionError(
        f"no valid sample after {MAX_RESAMPLES} draws; violated: {', '.join(bad)}",
        parameter=bad[0] if bad else None,
    )


def _sample_obs(regime: RegimeSpec, rng, obs_dim) -> ObsCorruption:
    std = np.zeros(obs_dim)
    delay = 0
    if regime.obs_delay is not None:
        delay = int(round(float(regime.obs_delay.sample(rng))))
    if regime.obs_noise_std is not None:
        std = np.asarray(regime.obs_noise_std.sample(rng, size=obs_dim), float)
    return ObsCorruption(noise_std=std, delay=delay)


def sample_rfi_force(rfi_config, rng: np.random.Generator, size=None) -> np.ndarray:
    """Zero-mean uniform generalized force, component ``i`` on ``[-r_i, r_i]``.

    With ``size=k`` returns ``k`` independent rows (one per physics step).
    """
    ranges = np.asarray(rfi_config, float)
    shape = ranges.shape if size is None else (size,) + ranges.shape
    return rng.uniform(-1.0, 1.0, shape) * ranges


class DelayBuffer:
    """FIFO of raw observations, seeded with the first observation at reset."""

    def __init__(self, initial_obs, delay: int):
        if delay < 0:
            raise ContractViolation("delay must be >= 0")
        self.delay = int(delay)
        first = np.array(initial_obs, dtype=float)
        self._buf = deque([first.copy() for _ in range(self.delay + 1)], maxlen=self.delay + 1)

    def push(self, obs) -> np.ndarray:
        self._buf.append(np.array(obs, dtype=float))
        return self._buf[0]


def corrupt_observation(obs, corruption: ObsCorruption, delay_buffer: DelayBuffer,
                        rng: np.random.Generator) -> np.ndarray:
    """Delayed observation plus zero-mean Gaussian noise.

    The buffer receives the uncorrupted ``obs``; the returned vector is the
    raw observation from ``delay`` calls ago with noise added.
    """
    out = delay_buffer.push(obs).copy()
    std = np.asarray(corruption.noise_std, float)
    if std.size and np.any(std > 0):
        out = out + rng.normal(0.0, 1.0, out.shape) * std
    return out
