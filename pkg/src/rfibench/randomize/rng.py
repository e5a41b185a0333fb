"""Counter-based random stream derivation.

Streams are keyed by ``(master seed, *keys)`` through ``SeedSequence``
spawn keys, so a stream does not depend on how many other streams were
drawn before it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STREAM_RESET = 0
STREAM_ACTION = 1
STREAM_FORCE = 2
STREAM_OBS = 3
STREAM_ENV = 4
STREAM_POLICY = 5

DOMAIN_TRAIN = 0
DOMAIN_EVAL = 1
DOMAIN_COLLECT = 2
DOMAIN_CALIBRATE = 3


def stream(seed: int, *keys: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass
class EpisodeStreams:
    """Independent generators for one episode's stochastic channels."""

    reset: np.random.Generator
    action: np.random.Generator
    force: np.random.Generator
    obs: np.random.Generator
    env: np.random.Generator

    @classmethod
    def for_episode(cls, seed: int, episode: int, domain: int = 0) -> "EpisodeStreams":
        """``domain`` separates key spaces (training, evaluation, ...)."""
        return cls(
            reset=stream(seed, domain, episode, STREAM_RESET),
            action=stream(seed, domain, episode, STREAM_ACTION),
            force=stream(seed, domain, episode, STREAM_FORCE),
            obs=stream(seed, domain, episode, STREAM_OBS),
            env=stream(seed, domain, episode, STREAM_ENV),
        )
