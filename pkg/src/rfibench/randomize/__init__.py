"""Environment randomisation regimes: NR, DR, RFI and RFI+."""

from .distributions import ParamDistribution
from .regimes import (
    REGIMES,
    DelayBuffer,
    EnvRealization,
    ObsCorruption,
    RegimeSpec,
    UnmodeledEffects,
    corrupt_observation,
    sample_environment,
    sample_rfi_force,
)
from .rng import EpisodeStreams, stream

__all__ = [
    "REGIMES",
    "DelayBuffer",
    "EnvRealization",
    "EpisodeStreams",
    "ObsCorruption",
    "ParamDistribution",
    "RegimeSpec",
    "UnmodeledEffects",
    "corrupt_observation",
    "sample_environment",
    "sample_rfi_force",
    "stream",
]
