"""RL trainers (TD3, PPO) and the conservative, adaptive, UPOSI and EPI families."""

from .critic import Critic
from .families import (
    FAMILIES,
    AdaptivePolicy,
    ConservativePolicy,
    EPIPolicy,
    OSIHistory,
    Policy,
    UPOSIPolicy,
    build_policy,
    env_context,
)
from .ppo import PPO, GaussianPolicy, PPOConfig, clipped_surrogate, gae
from .replay import ReplayBuffer
from .td3 import TD3, TD3Config, td3_target
from .epi import EPIModels, epi_train
from .uposi import collect_osi_data, osi_network, train_osi, uposi_train
from .training import (
    TrainResult,
    discounted_return,
    load_policy,
    save_policy,
    td3_loop,
    train_policy,
)

__all__ = [
    "FAMILIES",
    "PPO",
    "TD3",
    "AdaptivePolicy",
    "ConservativePolicy",
    "Critic",
    "EPIModels",
    "EPIPolicy",
    "GaussianPolicy",
    "OSIHistory",
    "PPOConfig",
    "Policy",
    "ReplayBuffer",
    "TD3Config",
    "TrainResult",
    "UPOSIPolicy",
    "build_policy",
    "clipped_surrogate",
    "collect_osi_data",
    "discounted_return",
    "env_context",
    "epi_train",
    "gae",
    "load_policy",
    "osi_network",
    "save_policy",
    "td3_loop",
    "td3_target",
    "train_osi",
    "train_policy",
    "uposi_train",
]
