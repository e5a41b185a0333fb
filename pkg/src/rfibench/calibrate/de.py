"""Differential evolution (DE/rand/1/bin, elitist)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractViolation


@dataclass(frozen=True)
class DEConfig:
    lower: np.ndarray
    upper: np.ndarray
    population: int | None = None
    mutation: float = 0.8
    crossover: float = 0.9
    generations: int = 100

    def __post_init__(self):
        lo = np.asarray(self.lower, float).reshape(-1)
        hi = np.asarray(self.upper, float).reshape(-1)
        if lo.shape != hi.shape or lo.size == 0:
            raise ContractViolation("bounds must be two equal-length non-empty vectors")
        if np.any(lo >= hi):
            raise ContractViolation(f"every lower bound must be below its upper bound: {lo} .. {hi}")
        pop = 15 * lo.size if self.population is None else int(self.population)
        if pop < 4:
            raise ContractViolation("population must be >= 4")
        if not 0 < self.mutation < 2:
            raise ContractViolation("mutation factor F must lie in (0, 2)")
        if not 0 <= self.crossover <= 1:
            raise ContractViolation("crossover rate must lie in [0, 1]")
        if self.generations < 1:
            raise ContractViolation("generations must be >= 1")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "population", pop)

    @property
    def dim(self) -> int:
        return self.lower.size


@dataclass
class DEResult:
    x: np.ndarray
    cost: float
    history: np.ndarray
    evaluations: int


def _safe(cost, x) -> float:
    try:
        c = float(cost(x))
    except (ArithmeticError, FloatingPointError):
        return np.inf
    return c if np.isfinite(c) else np.inf


def differential_evolution(cost, config: DEConfig, rng: np.random.Generator) -> DEResult:
    """Minimise ``cost`` over the box in ``config``.

    Non-finite costs (or arithmetic errors inside ``cost``) reject the
    candidate. ``history[g]`` is the best cost after generation ``g``
    (entry 0 is the initial population).
    """
    lo, hi = config.lower, config.upper
    n, d = config.population, config.dim
    pop = lo + rng.random((n, d)) * (hi - lo)
    costs = np.array([_safe(cost, x) for x in pop])
    history = [costs.min()]
    evals = n
    idx = np.arange(n)
    for _ in range(config.generations):
        for i in range(n):
            r1, r2, r3 = rng.choice(idx[idx != i], 3, replace=False)
            mutant = pop[r1] + config.mutation * (pop[r2] - pop[r3])
            cross = rng.random(d) < config.crossover
            cross[rng.integers(d)] = True
            trial = np.clip(np.where(cross, mutant, pop[i]), lo, hi)
            c = _safe(cost, trial)
            evals += 1
            if c <= costs[i]:
                pop[i] = trial
                costs[i] = c
        history.append(costs.min())
    best = int(np.argmin(costs))
    return DEResult(pop[best].copy(), float(costs[best]), np.array(history), evals)
