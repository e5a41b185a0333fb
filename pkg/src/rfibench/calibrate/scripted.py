"""Open-loop scripted command sequences used to excite the dynamics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractViolation
from ..tasks.spec import TaskSpec


@dataclass(frozen=True)
class ScriptedPolicy:
    """A command per policy step, normalised to [-1, 1]."""

    commands: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.commands, float)
        if c.ndim != 2:
            raise ContractViolation("commands must be a (steps, act_dim) array")
        object.__setattr__(self, "commands", c)

    @property
    def n_steps(self) -> int:
        return self.commands.shape[0]

    def act(self, t: int) -> np.ndarray:
        return self.commands[t].copy()

    def covers(self, spec: TaskSpec) -> bool:
        return self.n_steps >= spec.n_steps


def scripted_policy(spec: TaskSpec, amplitude: float = 0.8) -> ScriptedPolicy:
    """Default excitation per task.

    reach: in-plane sinusoidal velocity sweep; push: straight approach then
    an arc; slide: slow ramp of both tilt joints and back.
    """
    n = spec.n_steps
    t = np.arange(n) / spec.policy_rate
    T = spec.horizon
    if spec.task_id == "reach":
        cmd = np.stack([np.sin(2 * np.pi * t / T * 2), np.sin(2 * np.pi * t / T * 3 + 0.5)], 1)
    elif spec.task_id == "push":
        cmd = np.zeros((n, 2))
        half = n // 2
        cmd[:half, 0] = 1.0
        phase = np.linspace(0, np.pi, n - half)
        cmd[half:, 0] = np.cos(phase)
        cmd[half:, 1] = np.sin(phase)
    elif spec.task_id == "slide":
        ramp = np.sin(2 * np.pi * t / T)
        cmd = np.stack([ramp, 0.5 * ramp], 1)
    else:
        raise ContractViolation(f"no scripted policy for {spec.task_id!r}")
    return ScriptedPolicy(amplitude * cmd)
