"""Reach, push and slide task environments."""

from .env import ENV_CLASSES, PushEnv, ReachEnv, SlideEnv, StepOutcome, TaskEnv, make_env
from .spec import TASK_IDS, TIERS, GoalTier, Region, RewardWeights, TaskSpec, default_tiers
from .success import is_success, reward

__all__ = [
    "ENV_CLASSES",
    "GoalTier",
    "PushEnv",
    "ReachEnv",
    "Region",
    "RewardWeights",
    "SlideEnv",
    "StepOutcome",
    "TASK_IDS",
    "TIERS",
    "TaskEnv",
    "TaskSpec",
    "default_tiers",
    "is_success",
    "make_env",
    "reward",
]
