"""Episode success and reward."""

from __future__ import annotations

import numpy as np

from ..errors import ContractViolation
from .spec import RewardWeights, TaskSpec


def is_success(distances, spec: TaskSpec, terminated: bool = False,
               threshold: float | None = None) -> bool:
    """True iff every goal distance in the final hold window is within threshold.

    ``distances`` holds one sample per policy step. Early-terminated episodes
    are failures.
    """
    d = np.asarray(distances, float).reshape(-1)
    if d.size == 0:
        raise ContractViolation("empty distance trajectory")
    if terminated:
        return False
    thr = spec.success_threshold if threshold is None else threshold
    return bool(np.all(d[-spec.hold_steps:] <= thr))


def reward(task_id: str, goal_distance: float, threshold: float, weights: RewardWeights,
           limit_hit: bool = False, table_hit: bool = False,
           ee_object_distance: float = 0.0, fell_off: bool = False) -> float:
    r = weights.w_goal * float(goal_distance <= threshold) - weights.w_dist * goal_distance
    r -= weights.w_limit * float(limit_hit)
    if task_id == "reach":
        r -= weights.w_table * float(table_hit)
    elif task_id == "push":
        r -= weights.w_reach * ee_object_distance
    elif task_id == "slide":
        r -= weights.w_fall * float(fell_off)
    return float(r)
