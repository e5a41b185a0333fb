"""Baseline fitting by differential evolution and trajectory-envelope tooling."""

from .de import DEConfig, DEResult, differential_evolution
from .ensemble import (
    SpreadReport,
    TrajectoryEnsemble,
    collect_ensemble,
    default_channels,
    regime_ensemble,
    rollout_scripted,
    spread_report,
)
from .fit import fit_baseline, fit_baseline_detailed, response_cost
from .scripted import ScriptedPolicy, scripted_policy

__all__ = [
    "DEConfig",
    "DEResult",
    "ScriptedPolicy",
    "SpreadReport",
    "TrajectoryEnsemble",
    "collect_ensemble",
    "default_channels",
    "differential_evolution",
    "fit_baseline",
    "fit_baseline_detailed",
    "regime_ensemble",
    "response_cost",
    "rollout_scripted",
    "scripted_policy",
    "spread_report",
]
