"""Pseudo-real targets, evaluation, diagnostics and reporting."""

from .diagnostics import (
    AblationResult,
    LatentAnalysis,
    OSIError,
    distinct_realizations,
    epi_latents,
    latent_analysis,
    osi_error,
    osi_rollout_error,
    silhouette,
    two_proportion_test,
    up_noise_ablation,
)
from .evaluate import SOURCES, EpisodeRecord, EvalCell, PseudoRealSpec, evaluate, run_episode
from .report import NULL, load_cells, matrix_csv, save_cells, summary, write_report

__all__ = [
    "NULL",
    "SOURCES",
    "AblationResult",
    "EpisodeRecord",
    "EvalCell",
    "LatentAnalysis",
    "OSIError",
    "PseudoRealSpec",
    "distinct_realizations",
    "epi_latents",
    "evaluate",
    "latent_analysis",
    "load_cells",
    "matrix_csv",
    "osi_error",
    "osi_rollout_error",
    "run_episode",
    "save_cells",
    "silhouette",
    "summary",
    "two_proportion_test",
    "up_noise_ablation",
    "write_report",
]
