"""Baseline-parameter fitting against a target response."""

from __future__ import annotations

import numpy as np

from ..dyncore.state import DynamicsParams
from ..errors import ContractViolation
from .de import DEConfig, DEResult, differential_evolution
from .ensemble import TrajectoryEnsemble


def response_cost(sim: TrajectoryEnsemble, target: TrajectoryEnsemble) -> float:
    """Mean squared error between the two ensembles' mean responses."""
    sim = sim.select(target.channels)
    if sim.length != target.length:
        return np.inf
    return float(np.mean((sim.mean() - target.mean()) ** 2))


def fit_baseline_detailed(target: TrajectoryEnsemble, sim_factory, bounds: dict,
                          baseline: DynamicsParams, config: DEConfig | None = None,
                          rng: np.random.Generator | None = None, **de_options):
    """Fit the entries named in ``bounds`` (``name -> (lo, hi)``, indexed names
    allowed) so that ``sim_factory(params)`` reproduces ``target``.

    Dimensions with ``lo == hi`` are fixed at that value and kept out of the
    search. Returns ``(params, DEResult)``.
    """
    names = list(bounds)
    if not names:
        raise ContractViolation("nothing to fit: bounds is empty")
    lo = np.array([float(bounds[n][0]) for n in names])
    hi = np.array([float(bounds[n][1]) for n in names])
    if np.any(lo > hi):
        raise ContractViolation("fit bounds need lo <= hi")
    for n in names:
        if baseline.size_of(n) != 1:
            raise ContractViolation(f"fit bounds must name scalar entries, got {n!r}")
    free = lo < hi
    fixed = {n: lo[i] for i, n in enumerate(names) if not free[i]}
    free_names = [n for i, n in enumerate(names) if free[i]]

    def params_for(x):
        values = dict(fixed)
        values.update(zip(free_names, x))
        return baseline.replace(**values)

    if not free_names:
        params = params_for([])
        return params, DEResult(np.zeros(0), response_cost(sim_factory(params), target),
                                np.zeros(1), 1)

    def cost(x):
        params = params_for(x)
        if params.violations():
            return np.inf
        return response_cost(sim_factory(params), target)

    if config is None:
        config = DEConfig(lo[free], hi[free], **de_options)
    elif config.dim != len(free_names):
        raise ContractViolation(f"DE config has {config.dim} dims, {len(free_names)} free bounds")
    rng = np.random.default_rng(0) if rng is None else rng
    result = differential_evolution(cost, config, rng)
    return params_for(result.x), result


def fit_baseline(target: TrajectoryEnsemble, sim_factory, bounds: dict, baseline: DynamicsParams,
                 config: DEConfig | None = None, rng=None, **de_options) -> DynamicsParams:
    return fit_baseline_detailed(target, sim_factory, bounds, baseline, config, rng,
                                 **de_options)[0]
