"""Task specifications: horizons, success semantics, regions and goal tiers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractViolation

TASK_IDS = ("reach", "push", "slide")
TIERS = ("easy", "intermediate", "hard")


@dataclass(frozen=True)
class RewardWeights:
    w_goal: float = 10.0
    w_dist: float = 1.0
    w_limit: float = 5.0
    w_table: float = 5.0
    w_reach: float = 0.5
    w_fall: float = 10.0


@dataclass(frozen=True)
class Region:
    """Axis-aligned box ``[lo, hi]`` in the task frame (metres)."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, float).reshape(-1)
        hi = np.asarray(self.hi, float).reshape(-1)
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ContractViolation(f"bad region bounds {lo} .. {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def sample(self, rng) -> np.ndarray:
        return rng.uniform(self.lo, self.hi)

    def contains(self, x, tol=1e-12) -> bool:
        x = np.asarray(x, float)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def corners(self) -> np.ndarray:
        d = self.lo.size
        idx = np.array(np.meshgrid(*[[0, 1]] * d, indexing="ij")).reshape(d, -1).T
        return np.where(idx == 1, self.hi, self.lo)


@dataclass(frozen=True)
class GoalTier:
    start: np.ndarray
    goal: np.ndarray


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    horizon: float
    policy_rate: float
    success_threshold: float
    hold_window: float
    goal_region: Region
    start_region: Region
    goal_tiers: dict = field(default_factory=dict)
    weights: RewardWeights = field(default_factory=RewardWeights)

    def __post_init__(self):
        if self.task_id not in TASK_IDS:
            raise ContractViolation(f"unknown task {self.task_id!r}")
        steps = self.horizon * self.policy_rate
        if abs(steps - round(steps)) > 1e-9:
            raise ContractViolation("horizon * policy_rate must be an integer")
        if self.success_threshold <= 0:
            raise ContractViolation("success_threshold must be positive")
        if not 0 < self.hold_window <= self.horizon:
            raise ContractViolation("hold_window must lie in (0, horizon]")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon * self.policy_rate))

    @property
    def hold_steps(self) -> int:
        return max(1, int(round(self.hold_window * self.policy_rate)))

    def tier(self, name: str) -> GoalTier:
        try:
            return self.goal_tiers[name]
        except KeyError:
            raise ContractViolation(
                f"task {self.task_id} has no goal tier {name!r} (has {sorted(self.goal_tiers)})"
            ) from None


def default_tiers(start: np.ndarray, goal_region: Region) -> dict:
    """Easy = region centre, hard = corner furthest from ``start``,
    intermediate = their midpoint."""
    easy = goal_region.center
    corners = goal_region.corners()
    hard = corners[int(np.argmax(np.linalg.norm(corners - start, axis=1)))]
    mid = 0.5 * (easy + hard)
    return {
        "easy": GoalTier(np.asarray(start, float), easy),
        "intermediate": GoalTier(np.asarray(start, float), mid),
        "hard": GoalTier(np.asarray(start, float), hard),
    }
